#include "borisfb/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "borisfb/error.hpp"

namespace borisfb {

namespace {

std::string ref_key(const std::string& preset, const Vec3& x0, const Vec3& v0,
                    double ref_tol, double epsilon, double h, long n_steps) {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "%s|x0=%.17g,%.17g,%.17g|v0=%.17g,%.17g,%.17g|tol=%.17g|eps=%.17g|h=%.17g|n=%ld",
                  preset.c_str(), x0.x, x0.y, x0.z, v0.x, v0.y, v0.z, ref_tol, epsilon, h,
                  n_steps);
    return buf;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace

struct ReferenceCache::Impl {
    std::string preset;
    Vec3 x0, v0;
    double ref_tol;
    std::mutex mutex;
    std::map<std::string, std::shared_future<std::shared_ptr<const ReferenceSolution>>> entries;

    std::filesystem::path disk_path(const std::string& key) const {
        const char* dir = std::getenv("BORIS_CACHE_DIR");
        if (!dir || !*dir) return {};
        return std::filesystem::path(dir) / ("ref-" + fnv1a_hex(key) + ".json");
    }

    std::shared_ptr<const ReferenceSolution> load_disk(const std::filesystem::path& path,
                                                       const std::string& key) const {
        std::ifstream in(path);
        if (!in) return nullptr;
        try {
            const nlohmann::json j = nlohmann::json::parse(in);
            if (j.at("metadata").at("key").get<std::string>() != key) return nullptr;
            auto ref = std::make_shared<ReferenceSolution>();
            ref->h = j.at("metadata").at("h").get<double>();
            ref->n_steps = j.at("metadata").at("n_steps").get<long>();
            ref->substep = j.at("metadata").at("substep").get<double>();
            ref->halving_residual = j.at("metadata").at("halving_residual").get<double>();
            ref->ref_tol = j.at("metadata").at("ref_tol").get<double>();
            for (const auto& s : j.at("states")) {
                const auto& x = s.at("x");
                const auto& v = s.at("v_node");
                ref->x.push_back({x[0].get<double>(), x[1].get<double>(), x[2].get<double>()});
                ref->v.push_back({v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
            }
            if (ref->x.size() != static_cast<std::size_t>(ref->n_steps) + 1) return nullptr;
            return ref;
        } catch (...) {
            return nullptr;
        }
    }

    void store_disk(const std::filesystem::path& path, const std::string& key,
                    const ReferenceSolution& ref) const {
        try {
            std::filesystem::create_directories(path.parent_path());
            nlohmann::ordered_json j;
            j["schema"] = "borisfb/trajectory-v1";
            j["metadata"] = {{"kind", "reference"},
                             {"key", key},
                             {"preset", preset},
                             {"h", ref.h},
                             {"n_steps", ref.n_steps},
                             {"substep", ref.substep},
                             {"halving_residual", ref.halving_residual},
                             {"ref_tol", ref.ref_tol},
                             {"library_version", kVersion}};
            auto& states = j["states"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < ref.x.size(); ++i) {
                states.push_back({{"n", i},
                                  {"t", static_cast<double>(i) * ref.h},
                                  {"x", {ref.x[i].x, ref.x[i].y, ref.x[i].z}},
                                  {"v_node", {ref.v[i].x, ref.v[i].y, ref.v[i].z}}});
            }
            std::ofstream out(path);
            out << j.dump(1) << "\n";
        } catch (...) {
            // cache writes are best effort
        }
    }
};

ReferenceCache::ReferenceCache(std::string preset, const Vec3& x0, const Vec3& v0,
                               double ref_tol)
    : impl_(std::make_unique<Impl>()) {
    impl_->preset = std::move(preset);
    impl_->x0 = x0;
    impl_->v0 = v0;
    impl_->ref_tol = ref_tol;
}

ReferenceCache::~ReferenceCache() = default;

std::shared_ptr<const ReferenceSolution> ReferenceCache::get(const FieldModel& model,
                                                             double h, long n_steps) {
    const std::string key =
        ref_key(impl_->preset, impl_->x0, impl_->v0, impl_->ref_tol, model.epsilon, h, n_steps);

    std::promise<std::shared_ptr<const ReferenceSolution>> promise;
    std::shared_future<std::shared_ptr<const ReferenceSolution>> waiter;
    {
        std::lock_guard<std::mutex> lock(impl_->mutex);
        auto it = impl_->entries.find(key);
        if (it != impl_->entries.end()) {
            waiter = it->second;
        } else {
            impl_->entries.emplace(key, promise.get_future().share());
        }
    }
    if (waiter.valid()) {
        auto ref = waiter.get();
        if (!ref) raise(errc::oracle_not_converged, "cached reference computation failed");
        return ref;
    }

    std::shared_ptr<const ReferenceSolution> ref;
    try {
        const auto path = impl_->disk_path(key);
        if (!path.empty()) ref = impl_->load_disk(path, key);
        if (!ref) {
            ref = std::make_shared<ReferenceSolution>(
                reference_solve(model, impl_->x0, impl_->v0, h, n_steps, impl_->ref_tol));
            if (!path.empty()) impl_->store_disk(path, key, *ref);
        }
    } catch (...) {
        promise.set_value(nullptr);
        throw;
    }
    promise.set_value(ref);
    return ref;
}

ExperimentSpec paper_converge_spec() {
    ExperimentSpec spec;
    for (int j = 4; j <= 13; ++j) spec.epsilons.push_back(std::ldexp(1.0, -j));
    spec.h_ratios = {1.0, 4.0, 16.0};
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint}) {
        MethodConfig cfg;
        cfg.variant = v;
        spec.methods.push_back(cfg);
    }
    spec.err_mode = ErrMode::sup_over_grid;
    return spec;
}

ExperimentSpec paper_scan_spec() {
    ExperimentSpec spec;
    spec.epsilons = {std::ldexp(1.0, -10)};
    for (long k = 60; k <= 600; ++k) spec.k_values.push_back(k);
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint}) {
        MethodConfig cfg;
        cfg.variant = v;
        spec.methods.push_back(cfg);
    }
    spec.err_mode = ErrMode::endpoint;
    return spec;
}

double fit_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4)
        raise(errc::insufficient_data, "slope fit needs at least 4 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [eps, err] : points) {
        if (!(err > 0.0) || !std::isfinite(err) || !(eps > 0.0))
            raise(errc::insufficient_data, "slope fit needs positive finite errors");
        const double lx = std::log(eps);
        const double ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (!(std::fabs(denom) > 0.0))
        raise(errc::insufficient_data, "slope fit has degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

const Cell* ConvergenceReport::find(const std::string& method, double epsilon, double h) const {
    for (const auto& c : cells)
        if (c.method == method && c.epsilon == epsilon && c.h == h) return &c;
    return nullptr;
}

const SlopeFit* ConvergenceReport::find_slope(const std::string& method, double h_ratio,
                                              const std::string& metric) const {
    for (const auto& s : slopes)
        if (s.method == method && s.h_ratio == h_ratio && s.metric == metric) return &s;
    return nullptr;
}

namespace {

void validate_spec(const ExperimentSpec& spec, ReportKind kind) {
    if (spec.methods.empty()) raise(errc::invalid_argument, "spec has no methods");
    if (spec.epsilons.empty()) raise(errc::invalid_argument, "spec has no epsilons");
    if (!(spec.t_end > 0.0)) raise(errc::invalid_argument, "spec needs t_end > 0");
    for (std::size_t i = 1; i < spec.epsilons.size(); ++i)
        if (!(spec.epsilons[i] < spec.epsilons[i - 1]))
            raise(errc::invalid_argument, "epsilon list must be strictly decreasing");
    if (kind == ReportKind::converge && spec.h_ratios.empty())
        raise(errc::invalid_argument, "convergence spec has no h ratios");
    if (kind == ReportKind::scan && (spec.k_values.empty() || spec.epsilons.size() != 1))
        raise(errc::invalid_argument, "scan spec needs k values and a single epsilon");
}

void run_cells(const ExperimentSpec& spec, std::vector<Cell>& cells) {
    ReferenceCache cache(spec.preset, spec.x0, spec.v0, spec.ref_tol);
    std::map<std::string, const MethodConfig*> cfg_by_name;
    for (const auto& m : spec.methods) cfg_by_name[variant_name(m.variant)] = &m;

    parallel_for(cells.size(), [&](std::size_t i) {
        Cell& cell = cells[i];
        try {
            const FieldModel model = make_preset(spec.preset, cell.epsilon);
            const MethodConfig& cfg = *cfg_by_name.at(cell.method);
            const Trajectory traj =
                run_trajectory(spec.x0, spec.v0, model, cfg, cell.h, spec.t_end);
            cell.n_steps = traj.n_steps;
            const auto ref = cache.get(model, cell.h, traj.n_steps);
            cell.err = compute_errors(traj, *ref, model, spec.err_mode);
            cell.flagged = traj.any_resonant();
            cell.min_sinc = traj.min_sinc();
            for (const auto& s : traj.states) {
                cell.fp_iters = std::max(cell.fp_iters, s.fp_iters);
                cell.fp_residual = std::max(cell.fp_residual, s.fp_residual);
            }
            cell.oracle_substep = ref->substep;
            cell.oracle_residual = ref->halving_residual;
        } catch (const std::exception& e) {
            cell.failed = true;
            cell.error = e.what();
        }
    });
}

void fit_report_slopes(ConvergenceReport& report) {
    const std::array<std::pair<const char*, double ErrorMetrics::*>, 3> metrics = {
        {{"err_x", &ErrorMetrics::err_x},
         {"err_vpar", &ErrorMetrics::err_vpar},
         {"err_vperp", &ErrorMetrics::err_vperp}}};
    for (const auto& m : report.spec.methods) {
        const std::string name = variant_name(m.variant);
        for (double ratio : report.spec.h_ratios) {
            for (const auto& [metric, member] : metrics) {
                std::vector<std::pair<double, double>> pts;
                for (const auto& c : report.cells) {
                    if (c.method != name || c.h_ratio != ratio) continue;
                    if (c.failed || c.flagged) continue;
                    const double err = c.err.*member;
                    if (!(err > 0.0) || !std::isfinite(err)) continue;
                    pts.emplace_back(c.epsilon, err);
                }
                if (pts.size() < 4) continue;
                report.slopes.push_back({name, ratio, metric, fit_slope(pts),
                                         static_cast<int>(pts.size())});
            }
        }
    }
}

}  // namespace

ConvergenceReport run_convergence(const ExperimentSpec& spec) {
    validate_spec(spec, ReportKind::converge);
    ConvergenceReport report;
    report.kind = ReportKind::converge;
    report.spec = spec;
    for (const auto& m : spec.methods)
        for (double eps : spec.epsilons)
            for (double ratio : spec.h_ratios) {
                Cell c;
                c.method = variant_name(m.variant);
                c.epsilon = eps;
                c.h_ratio = ratio;
                c.h = ratio * eps;
                report.cells.push_back(c);
            }
    run_cells(spec, report.cells);
    fit_report_slopes(report);
    return report;
}

ConvergenceReport run_resonance_scan(const ExperimentSpec& spec) {
    validate_spec(spec, ReportKind::scan);
    ConvergenceReport report;
    report.kind = ReportKind::scan;
    report.spec = spec;
    for (const auto& m : spec.methods)
        for (long k : spec.k_values) {
            Cell c;
            c.method = variant_name(m.variant);
            c.epsilon = spec.epsilons.front();
            c.k = k;
            c.h = 1.0 / static_cast<double>(k);
            c.h_ratio = c.h / c.epsilon;
            report.cells.push_back(c);
        }
    run_cells(spec, report.cells);
    return report;
}

}  // namespace borisfb
