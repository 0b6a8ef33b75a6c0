#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "borisfb/error.hpp"
#include "borisfb/harness.hpp"

namespace borisfb {

namespace {

// Fixed %.17g formatting keeps outputs byte-identical across runs and
// round-trips every double exactly.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

nlohmann::ordered_json vec_json(const Vec3& v) {
    return nlohmann::ordered_json::array({v.x, v.y, v.z});
}

nlohmann::ordered_json methods_json(const ExperimentSpec& spec) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& m : spec.methods) {
        arr.push_back({{"method", variant_name(m.variant)},
                       {"fp_max_iters", m.fp_max_iters},
                       {"fp_tol", m.fp_tol},
                       {"guard_c_min", m.guard.c_min},
                       {"guard_k_max", m.guard.k_max},
                       {"guard_policy", m.guard_policy == GuardPolicy::Flag ? "flag" : "reject"}});
    }
    return arr;
}

}  // namespace

void write_report_csv(const ConvergenceReport& report, std::ostream& out) {
    out << "method,epsilon,h,n_steps,err_x,err_vpar,err_vperp,resonance_flag,fp_iters,fp_residual\n";
    for (const auto& c : report.cells) {
        out << c.method << ',' << num(c.epsilon) << ',' << num(c.h) << ',' << c.n_steps << ','
            << num(c.err.err_x) << ',' << num(c.err.err_vpar) << ',' << num(c.err.err_vperp)
            << ',' << (c.flagged ? 1 : 0) << ',' << c.fp_iters << ',' << num(c.fp_residual)
            << '\n';
    }
}

void write_report_json(const ConvergenceReport& report, std::ostream& out) {
    const ExperimentSpec& spec = report.spec;
    nlohmann::ordered_json j;
    j["schema"] = "borisfb/report-v1";
    j["metadata"] = {{"kind", report.kind == ReportKind::converge ? "converge" : "scan"},
                     {"preset", spec.preset},
                     {"x0", vec_json(spec.x0)},
                     {"v0", vec_json(spec.v0)},
                     {"t_end", spec.t_end},
                     {"err_mode", spec.err_mode == ErrMode::endpoint ? "endpoint" : "sup-over-grid"},
                     {"ref_tol", spec.ref_tol},
                     {"methods", methods_json(spec)},
                     {"library_version", kVersion}};
    auto& cells = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : report.cells) {
        nlohmann::ordered_json jc = {{"method", c.method},
                                     {"epsilon", c.epsilon},
                                     {"h", c.h},
                                     {"n_steps", c.n_steps},
                                     {"err_x", c.err.err_x},
                                     {"err_vpar", c.err.err_vpar},
                                     {"err_vperp", c.err.err_vperp},
                                     {"resonance_flag", c.flagged},
                                     {"min_sinc", c.min_sinc},
                                     {"fp_iters", c.fp_iters},
                                     {"fp_residual", c.fp_residual},
                                     {"oracle_substep", c.oracle_substep},
                                     {"oracle_residual", c.oracle_residual},
                                     {"failed", c.failed}};
        if (report.kind == ReportKind::scan) jc["k"] = c.k;
        else jc["h_ratio"] = c.h_ratio;
        if (c.failed) jc["error"] = c.error;
        cells.push_back(std::move(jc));
    }
    auto& slopes = j["slopes"] = nlohmann::ordered_json::array();
    for (const auto& s : report.slopes) {
        slopes.push_back({{"method", s.method},
                          {"h_ratio", s.h_ratio},
                          {"metric", s.metric},
                          {"slope", s.slope},
                          {"n_points", s.n_points}});
    }
    out << j.dump(1) << "\n";
}

void write_report_gnuplot(const ConvergenceReport& report, const std::string& csv_path,
                          std::ostream& out) {
    const bool scan = report.kind == ReportKind::scan;
    out << "# plots " << csv_path << " (generated; gnuplot >= 5)\n";
    out << "set datafile separator \",\"\n";
    out << "set key outside\n";
    out << "set logscale y\n";
    if (!scan) out << "set logscale x\n";
    out << "set xlabel \"" << (scan ? "h/epsilon" : "epsilon") << "\"\n";
    const char* metrics[3] = {"err_x", "err_vpar", "err_vperp"};
    const int column[3] = {5, 6, 7};
    for (int m = 0; m < 3; ++m) {
        out << "set ylabel \"" << metrics[m] << "\"\n";
        out << "plot \\\n";
        for (std::size_t i = 0; i < report.spec.methods.size(); ++i) {
            const std::string name = variant_name(report.spec.methods[i].variant);
            const std::string xexpr =
                scan ? "($3/" + num(report.spec.epsilons.front()) + ")" : "$2";
            out << "  \"" << csv_path << "\" using (strcol(1) eq \"" << name << "\" ? " << xexpr
                << " : 1/0):" << column[m] << " with " << (scan ? "points" : "linespoints")
                << " title \"" << name << "\"";
            out << (i + 1 < report.spec.methods.size() ? ", \\\n" : "\n");
        }
        out << "pause -1\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "n,t,x1,x2,x3,vhalf1,vhalf2,vhalf3,vnode1,vnode2,vnode3,"
           "resonance_flag,fp_iters,fp_residual\n";
    for (const auto& s : traj.states) {
        out << s.n << ',' << num(s.t) << ',' << num(s.x.x) << ',' << num(s.x.y) << ','
            << num(s.x.z) << ',' << num(s.v_half.x) << ',' << num(s.v_half.y) << ','
            << num(s.v_half.z) << ',' << num(s.v_node.x) << ',' << num(s.v_node.y) << ','
            << num(s.v_node.z) << ',' << (s.resonant ? 1 : 0) << ',' << s.fp_iters << ','
            << num(s.fp_residual) << '\n';
    }
}

void write_trajectory_json(const Trajectory& traj, std::ostream& out) {
    nlohmann::ordered_json j;
    j["schema"] = "borisfb/trajectory-v1";
    j["metadata"] = {{"kind", "trajectory"},
                     {"method", variant_name(traj.config.variant)},
                     {"preset", traj.preset},
                     {"epsilon", traj.epsilon},
                     {"h", traj.h},
                     {"n_steps", traj.n_steps},
                     {"start", traj.start_mode},
                     {"fp_max_iters", traj.config.fp_max_iters},
                     {"fp_tol", traj.config.fp_tol},
                     {"guard_c_min", traj.config.guard.c_min},
                     {"guard_k_max", traj.config.guard.k_max},
                     {"guard_policy",
                      traj.config.guard_policy == GuardPolicy::Flag ? "flag" : "reject"},
                     {"library_version", kVersion}};
    auto& states = j["states"] = nlohmann::ordered_json::array();
    for (const auto& s : traj.states) {
        states.push_back({{"n", s.n},
                          {"t", s.t},
                          {"x", vec_json(s.x)},
                          {"v_half", vec_json(s.v_half)},
                          {"v_node", vec_json(s.v_node)},
                          {"resonance_flag", s.resonant},
                          {"min_sinc", s.min_sinc},
                          {"fp_iters", s.fp_iters},
                          {"fp_residual", s.fp_residual}});
    }
    out << j.dump(1) << "\n";
}

}  // namespace borisfb
