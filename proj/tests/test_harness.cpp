#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "borisfb/error.hpp"
#include "borisfb/harness.hpp"
#include "test_helpers.hpp"

using namespace borisfb;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec spec;
    spec.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    spec.h_ratios = {1.0};
    MethodConfig imp, exp_cfg;
    imp.variant = Variant::FilteredImplicit;
    exp_cfg.variant = Variant::FilteredExplicit;
    spec.methods = {imp, exp_cfg};
    return spec;
}

}  // namespace

TEST_CASE("fit_slope on synthetic data") {
    std::vector<std::pair<double, double>> quad, lin, noisy;
    for (int j = 4; j <= 13; ++j) {
        const double eps = std::ldexp(1.0, -j);
        quad.emplace_back(eps, 3.7 * eps * eps);
        lin.emplace_back(eps, 0.4 * eps);
        noisy.emplace_back(eps, 2.0 * std::pow(eps, 1.5) * (1.0 + 0.01 * std::cos(7.0 * j)));
    }
    CHECK(fit_slope(quad) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit_slope(lin) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(fit_slope(noisy) - 1.5) <= 0.05);

    CHECK_THROWS_AS(fit_slope({{0.1, 1.0}, {0.2, 2.0}, {0.3, 3.0}}), Error);
    CHECK_THROWS_AS(fit_slope({{0.1, 1.0}, {0.2, 0.0}, {0.3, 3.0}, {0.4, 1.0}}), Error);
}

TEST_CASE("paper specs have the published shape") {
    const ExperimentSpec conv = paper_converge_spec();
    CHECK(conv.epsilons.size() == 10);
    CHECK(conv.epsilons.front() == std::ldexp(1.0, -4));
    CHECK(conv.epsilons.back() == std::ldexp(1.0, -13));
    CHECK(conv.h_ratios == std::vector<double>{1.0, 4.0, 16.0});
    CHECK(conv.methods.size() == 4);
    CHECK(conv.err_mode == ErrMode::sup_over_grid);
    CHECK(conv.x0.x == doctest::Approx(1.0 / 3.0));
    CHECK(conv.v0.y == doctest::Approx(2.0 / 3.0));

    const ExperimentSpec scan = paper_scan_spec();
    CHECK(scan.epsilons == std::vector<double>{std::ldexp(1.0, -10)});
    CHECK(scan.k_values.size() == 541);
    CHECK(scan.k_values.front() == 60);
    CHECK(scan.k_values.back() == 600);
    CHECK(scan.err_mode == ErrMode::endpoint);
}

TEST_CASE("convergence runs populate sorted cells, slopes and oracle data") {
    const ConvergenceReport report = run_convergence(small_spec());
    REQUIRE(report.cells.size() == 8);
    for (const auto& c : report.cells) {
        CHECK_FALSE(c.failed);
        CHECK_FALSE(c.flagged);
        CHECK(c.n_steps == std::llround(1.0 / c.h));
        CHECK(c.err.err_x > 0.0);
        CHECK(c.oracle_residual <= report.spec.ref_tol);
        CHECK(c.oracle_substep > 0.0);
    }
    const SlopeFit* imp_x = report.find_slope("imp-a", 1.0, "err_x");
    REQUIRE(imp_x != nullptr);
    CHECK(imp_x->n_points == 4);
    CHECK(imp_x->slope > 1.5);
    const SlopeFit* exp_x = report.find_slope("exp-a", 1.0, "err_x");
    REQUIRE(exp_x != nullptr);
    CHECK(exp_x->slope < imp_x->slope);

    // implicit with the iteration disabled degrades to the explicit rate
    ExperimentSpec degraded = small_spec();
    degraded.methods.resize(1);
    degraded.methods[0].fp_max_iters = 0;
    const ConvergenceReport dreport = run_convergence(degraded);
    const SlopeFit* deg = dreport.find_slope("imp-a", 1.0, "err_x");
    REQUIRE(deg != nullptr);
    CHECK(deg->slope < 1.5);
    for (const auto& c : dreport.cells) {
        const Cell* e = report.find("exp-a", c.epsilon, c.h);
        REQUIRE(e != nullptr);
        // same first-order error level as the explicit filter (the starting
        // values differ at O(eps^2), the steps are identical)
        CHECK(std::fabs(c.err.err_x - e->err.err_x) <= 0.2 * e->err.err_x);
    }
}

TEST_CASE("flagged cells are excluded from slope fits") {
    ExperimentSpec spec = small_spec();
    for (auto& m : spec.methods) m.guard.c_min = 0.7;  // flags every cell (sinc(1.5) ~ 0.66)
    const ConvergenceReport report = run_convergence(spec);
    for (const auto& c : report.cells) CHECK(c.flagged);
    CHECK(report.slopes.empty());
}

TEST_CASE("reports serialize deterministically with the pinned CSV schema") {
    const ConvergenceReport report = run_convergence(small_spec());
    std::ostringstream csv1, csv2, json1, json2;
    write_report_csv(report, csv1);
    write_report_csv(report, csv2);
    write_report_json(report, json1);
    write_report_json(report, json2);
    CHECK(csv1.str() == csv2.str());
    CHECK(json1.str() == json2.str());
    CHECK(csv1.str().substr(0, csv1.str().find('\n')) ==
          "method,epsilon,h,n_steps,err_x,err_vpar,err_vperp,resonance_flag,fp_iters,fp_residual");

    // a fresh identical run (fresh thread scheduling) gives identical bytes
    const ConvergenceReport rerun = run_convergence(small_spec());
    std::ostringstream csv3;
    write_report_csv(rerun, csv3);
    CHECK(csv1.str() == csv3.str());

    const nlohmann::json parsed = nlohmann::json::parse(json1.str());
    CHECK(parsed.at("schema") == "borisfb/report-v1");
    CHECK(parsed.at("metadata").at("err_mode") == "sup-over-grid");
    CHECK(parsed.at("metadata").at("ref_tol") == 1e-10);
    CHECK(parsed.at("cells").size() == 8);
    CHECK(parsed.at("cells")[0].contains("min_sinc"));
    CHECK(parsed.at("cells")[0].contains("oracle_residual"));

    std::ostringstream gp;
    write_report_gnuplot(report, "report.csv", gp);
    CHECK(gp.str().find("set logscale") != std::string::npos);
    CHECK(gp.str().find("report.csv") != std::string::npos);
}

TEST_CASE("trajectory serialization round-trips through json") {
    const double eps = 1.0 / 32.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    MethodConfig cfg;
    cfg.variant = Variant::TwoPoint;
    const Trajectory traj =
        run_trajectory({1.0 / 3, 1.0 / 4, 1.0 / 2}, {0.4, 2.0 / 3, 1.0}, model, cfg, eps, 8 * eps);
    std::ostringstream json_out, csv_out;
    write_trajectory_json(traj, json_out);
    write_trajectory_csv(traj, csv_out);

    const nlohmann::json parsed = nlohmann::json::parse(json_out.str());
    CHECK(parsed.at("schema") == "borisfb/trajectory-v1");
    CHECK(parsed.at("metadata").at("method") == "twop-a");
    CHECK(parsed.at("states").size() == 9);
    const double x0_back = parsed.at("states")[0].at("x")[0].get<double>();
    CHECK(x0_back == traj.states[0].x.x);  // exact round-trip

    CHECK(csv_out.str().find("n,t,x1") == 0);
}

TEST_CASE("resonance scan populates k cells without slope fits") {
    ExperimentSpec spec;
    spec.epsilons = {1.0 / 64.0};
    spec.t_end = 0.25;
    for (long k = 40; k <= 44; ++k) spec.k_values.push_back(k);
    MethodConfig imp, twop;
    imp.variant = Variant::FilteredImplicit;
    twop.variant = Variant::TwoPoint;
    spec.methods = {imp, twop};
    spec.err_mode = ErrMode::endpoint;

    const ConvergenceReport report = run_resonance_scan(spec);
    REQUIRE(report.cells.size() == 10);
    CHECK(report.slopes.empty());
    for (const auto& c : report.cells) {
        CHECK(c.k >= 40);
        CHECK(c.k <= 44);
        CHECK(c.h == 1.0 / static_cast<double>(c.k));
        CHECK_FALSE(c.failed);
    }
}

TEST_CASE("reference disk cache round-trips byte-identically") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "borisfb-cache-test";
    fs::remove_all(dir);
    setenv("BORIS_CACHE_DIR", dir.c_str(), 1);

    ExperimentSpec spec = small_spec();
    spec.epsilons = {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128};
    const ConvergenceReport first = run_convergence(spec);
    CHECK(fs::exists(dir));
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        ++files;
        (void)e;
    }
    CHECK(files == 4);  // one reference per (eps, h) grid

    const ConvergenceReport second = run_convergence(spec);  // served from disk
    std::ostringstream a, b;
    write_report_csv(first, a);
    write_report_csv(second, b);
    CHECK(a.str() == b.str());

    unsetenv("BORIS_CACHE_DIR");
    fs::remove_all(dir);
}

TEST_CASE("invalid specs are rejected") {
    ExperimentSpec spec;  // no methods, no epsilons
    CHECK_THROWS_AS(run_convergence(spec), Error);

    spec = small_spec();
    spec.epsilons = {0.1, 0.2};  // not decreasing
    CHECK_THROWS_AS(run_convergence(spec), Error);

    spec = small_spec();
    spec.h_ratios.clear();
    CHECK_THROWS_AS(run_convergence(spec), Error);

    spec = small_spec();
    spec.k_values = {10, 11};
    spec.epsilons = {0.1, 0.05};
    CHECK_THROWS_AS(run_resonance_scan(spec), Error);
}
