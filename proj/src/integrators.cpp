#include "borisfb/integrators.hpp"

#include <cmath>
#include <limits>

#include "borisfb/error.hpp"
#include "borisfb/filters.hpp"
#include "borisfb/mat3.hpp"

namespace borisfb {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

bool is_zero(const Vec3& v) { return v.x == 0.0 && v.y == 0.0 && v.z == 0.0; }

double base_time(const ParticleState& s, double h) {
    return s.t - static_cast<double>(s.n) * h;
}

ResonanceStatus guard_step(const MethodConfig& cfg, double h, double b, long n) {
    const ResonanceStatus st = check_resonance(cfg.guard, h, b);
    if (!st.ok && cfg.guard_policy == GuardPolicy::Reject)
        raise(errc::resonance_rejected,
              "step " + std::to_string(n) + ": |sinc(" + std::to_string(st.k) +
                  " h b / 2)| = " + std::to_string(st.value) + " below guard");
    return st;
}

/// Solves u' = u + a (u' + u) x B in closed form (the classical Boris
/// rotation): exact Cayley-type solution via two cross products.
Vec3 boris_rotate(const Vec3& u, const Vec3& B, double a) {
    const Vec3 tvec = a * B;
    const Vec3 u1 = u + cross(u, tvec);
    const Vec3 svec = tvec * (2.0 / (1.0 + tvec.norm2()));
    return u + cross(u1, svec);
}

struct StepCore {
    Vec3 B_n, E_n;
    double b = 0.0;
    Vec3 psi_E;   // Psi(h hat(B^n)) E^n
    Vec3 v_plus;  // v_+^{n-1/2}
    Vec3 v_minus; // v_-^{n+1/2}
    Vec3 v_node;
    bool v_node_valid = true;
    Vec3 field_point;
    int fp_iters = 0;
    double fp_residual = 0.0;
    double fp_prev_residual = 0.0;
    ResonanceStatus resonance{};
};

// A truncated iteration that is still contracting is normal operation (one
// sweep already gives the advertised accuracy); the error is reserved for
// iterations that stopped shrinking while far from the tolerance.
void check_convergence(const StepCore& core, const MethodConfig& cfg, long n) {
    if (core.fp_iters < cfg.fp_max_iters) return;  // converged before budget
    if (core.fp_iters >= 2 && core.fp_residual >= core.fp_prev_residual &&
        core.fp_residual > cfg.fp_tol && core.fp_residual > 1e3 * cfg.fp_tol)
        raise(errc::no_convergence,
              "step " + std::to_string(n) + ": fixed-point residual " +
                  std::to_string(core.fp_residual) + " not contracting after " +
                  std::to_string(core.fp_iters) + " iterations");
}

StepCore standard_boris_core(const ParticleState& s, const FieldModel& model,
                             const MethodConfig* cfg, double h) {
    StepCore core;
    core.B_n = eval_B(model, s.x, s.t);
    core.E_n = eval_E(model, s.x, s.t);
    core.b = core.B_n.norm();
    if (cfg) core.resonance = guard_step(*cfg, h, core.b, s.n);
    core.psi_E = 0.5 * h * core.E_n;  // plain half-kick
    core.v_plus = s.v_half + core.psi_E;
    core.v_minus = boris_rotate(core.v_plus, core.B_n, 0.5 * h);
    core.v_node = 0.5 * (core.v_plus + core.v_minus);
    core.field_point = s.x;
    return core;
}

StepCore filtered_core(const ParticleState& s, const FieldModel& model,
                       const MethodConfig& cfg, double h) {
    StepCore core;
    core.B_n = eval_B(model, s.x, s.t);
    core.E_n = eval_E(model, s.x, s.t);
    core.b = core.B_n.norm();
    core.resonance = guard_step(cfg, h, core.b, s.n);

    Vec3 ups_E;
    if (!is_zero(core.E_n)) {
        core.psi_E = 0.5 * h * apply_psi(h, core.B_n, core.E_n);
        ups_E = apply_upsilon(h, core.B_n, core.E_n);
    }
    core.v_plus = s.v_half + core.psi_E;

    const bool implicit = cfg.variant == Variant::FilteredImplicit;
    const double theta_n = implicit ? theta(h * core.b) : 1.0;
    Vec3 x_bar = s.x;
    const double x_scale = std::max(1.0, s.x.norm());

    const int iters = implicit ? cfg.fp_max_iters : 0;
    for (int it = 0; it < iters; ++it) {
        const Vec3 B_bar = eval_B(model, x_bar, s.t);
        const Vec3 v_minus = apply_exp_neg(h, B_bar, core.v_plus);
        const Vec3 v_node =
            apply_phi1(h, B_bar, 0.5 * (v_minus + core.v_plus)) - h * ups_E;
        const Vec3 x_gc = guiding_center(s.x, v_node, core.B_n);
        const Vec3 x_bar_new = theta_n * s.x + (1.0 - theta_n) * x_gc;
        core.fp_prev_residual = core.fp_residual;
        core.fp_residual = (x_bar_new - x_bar).norm() / x_scale;
        x_bar = x_bar_new;
        ++core.fp_iters;
        if (core.fp_residual <= cfg.fp_tol) break;
    }
    if (implicit) check_convergence(core, cfg, s.n);

    const Vec3 B_bar = eval_B(model, x_bar, s.t);
    core.v_minus = apply_exp_neg(h, B_bar, core.v_plus);
    core.field_point = x_bar;
    try {
        core.v_node =
            apply_phi1(h, B_bar, 0.5 * (core.v_minus + core.v_plus)) - h * ups_E;
    } catch (const Error& e) {
        // The reconstruction filter can hit a pole the rotation itself does
        // not have; the explicit step is still well defined, so only the
        // node-velocity record degrades (the guard has flagged such steps).
        if (e.code() != errc::filter_pole || implicit) throw;
        core.v_node = {kNan, kNan, kNan};
        core.v_node_valid = false;
    }
    return core;
}

StepCore two_point_core(const ParticleState& s, const FieldModel& model,
                        const MethodConfig& cfg, double h) {
    StepCore core;
    core.B_n = eval_B(model, s.x, s.t);
    core.E_n = eval_E(model, s.x, s.t);
    core.b = core.B_n.norm();
    core.resonance = guard_step(cfg, h, core.b, s.n);

    Vec3 ups_E;
    if (!is_zero(core.E_n)) {
        core.psi_E = 0.5 * h * apply_psi(h, core.B_n, core.E_n);
        ups_E = apply_upsilon(h, core.B_n, core.E_n);
    }
    core.v_plus = s.v_half + core.psi_E;

    const RodriguezCoeffs phi1_n = phi1_coeffs(h, core.b);
    const Mat3 half_h_phi1_hat =
        (rodriguez_materialize(phi1_n, core.B_n) * Mat3::hat(core.B_n)) * (0.5 * h);

    const auto solve_v_minus = [&](const Vec3& x_gc) {
        const Vec3 B_gc = eval_B(model, x_gc, s.t);
        const Mat3 phi2_gc =
            rodriguez_materialize(phi2_coeffs(h, B_gc.norm()), B_gc);
        return solve3(phi2_gc + half_h_phi1_hat,
                      (phi2_gc - half_h_phi1_hat) * core.v_plus);
    };

    Vec3 x_gc = s.x;
    const double x_scale = std::max(1.0, s.x.norm());
    for (int it = 0; it < cfg.fp_max_iters; ++it) {
        const Vec3 v_minus = solve_v_minus(x_gc);
        const Vec3 v_node =
            rodriguez_apply(phi1_n, core.B_n, 0.5 * (v_minus + core.v_plus)) -
            h * ups_E;
        const Vec3 x_gc_new = guiding_center(s.x, v_node, core.B_n);
        core.fp_prev_residual = core.fp_residual;
        core.fp_residual = (x_gc_new - x_gc).norm() / x_scale;
        x_gc = x_gc_new;
        ++core.fp_iters;
        if (core.fp_residual <= cfg.fp_tol) break;
    }
    check_convergence(core, cfg, s.n);

    core.v_minus = solve_v_minus(x_gc);
    core.v_node =
        rodriguez_apply(phi1_n, core.B_n, 0.5 * (core.v_minus + core.v_plus)) -
        h * ups_E;
    core.field_point = x_gc;
    return core;
}

StepResult finish_step(const ParticleState& s, const StepCore& core, double h) {
    StepResult r;
    r.next.n = s.n + 1;
    r.next.t = base_time(s, h) + static_cast<double>(s.n + 1) * h;
    r.next.v_half = core.v_minus + core.psi_E;
    r.next.x = s.x + h * r.next.v_half;
    r.v_node = core.v_node;
    r.v_node_valid = core.v_node_valid;
    r.fp_iters = core.fp_iters;
    r.fp_residual = core.fp_residual;
    r.resonance = core.resonance;
    r.field_point = core.field_point;
    return r;
}

StepCore run_core(const ParticleState& s, const FieldModel& model,
                  const MethodConfig& cfg, double h) {
    switch (cfg.variant) {
        case Variant::StandardBoris:
            return standard_boris_core(s, model, &cfg, h);
        case Variant::FilteredExplicit:
        case Variant::FilteredImplicit:
            return filtered_core(s, model, cfg, h);
        case Variant::TwoPoint:
            return two_point_core(s, model, cfg, h);
    }
    raise(errc::invalid_argument, "unknown integrator variant");
}

/// Applies the two-point method's start/one-step matrix
/// (I -/+ (h/2) Lambda hat(B^n)) sinch(h hat(B^n)) to u.
Vec3 two_point_phi_apply(int sign, double h, const Vec3& B_n, const Vec3& B_gc,
                         const Vec3& u) {
    const double b = B_n.norm();
    const Vec3 u1 = rodriguez_apply(sinch_coeffs(h, b), B_n, u);
    const Vec3 t1 = h * cross(B_n, u1);
    const Vec3 t2 = rodriguez_apply(phi1_coeffs(h, b), B_n, t1);
    const Vec3 t3 = rodriguez_apply(phi2_inv_coeffs(h, B_gc.norm()), B_gc, t2);
    return u1 - (0.5 * sign) * t3;
}

Mat3 two_point_phi_materialize(int sign, double h, const Vec3& B_n, const Vec3& B_gc) {
    const double b = B_n.norm();
    const Mat3 sinch_m = rodriguez_materialize(sinch_coeffs(h, b), B_n);
    const Mat3 lambda = rodriguez_materialize(phi2_inv_coeffs(h, B_gc.norm()), B_gc) *
                        rodriguez_materialize(phi1_coeffs(h, b), B_n);
    const Mat3 hat = Mat3::hat(B_n) * h;
    return (Mat3::identity() - (lambda * hat) * (0.5 * sign)) * sinch_m;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::StandardBoris:    return "boris";
        case Variant::FilteredExplicit: return "exp-a";
        case Variant::FilteredImplicit: return "imp-a";
        case Variant::TwoPoint:         return "twop-a";
    }
    return "?";
}

Variant parse_variant(const std::string& s) {
    if (s == "boris") return Variant::StandardBoris;
    if (s == "exp-a") return Variant::FilteredExplicit;
    if (s == "imp-a") return Variant::FilteredImplicit;
    if (s == "twop-a") return Variant::TwoPoint;
    raise(errc::invalid_argument, "unknown method '" + s + "'");
}

StepResult standard_boris_step(const ParticleState& s, const FieldModel& model, double h) {
    return finish_step(s, standard_boris_core(s, model, nullptr, h), h);
}

StepResult filtered_step(const ParticleState& s, const FieldModel& model,
                         const MethodConfig& cfg, double h) {
    if (cfg.variant != Variant::FilteredExplicit && cfg.variant != Variant::FilteredImplicit)
        raise(errc::invalid_argument, "filtered_step needs a filtered variant");
    return finish_step(s, filtered_core(s, model, cfg, h), h);
}

StepResult two_point_step(const ParticleState& s, const FieldModel& model,
                          const MethodConfig& cfg, double h) {
    return finish_step(s, two_point_core(s, model, cfg, h), h);
}

StepResult step(const ParticleState& s, const FieldModel& model,
                const MethodConfig& cfg, double h) {
    return finish_step(s, run_core(s, model, cfg, h), h);
}

Vec3 node_velocity(const Vec3& x_prev, const Vec3& x_next, const Vec3& B_bar,
                   const Vec3& B_n, const Vec3& E_n, double h) {
    const Vec3 central = (x_next - x_prev) / (2.0 * h);
    Vec3 v = apply_phi1(h, B_bar, central);
    if (!is_zero(E_n)) v -= h * apply_upsilon(h, B_n, E_n);
    return v;
}

Vec3 starting_velocity(const Vec3& x0, const Vec3& v0, const FieldModel& model,
                       const MethodConfig& cfg, double h, int sign) {
    if (sign != 1 && sign != -1) raise(errc::invalid_argument, "sign must be +/-1");
    const Vec3 B0 = eval_B(model, x0, 0.0);
    const Vec3 E0 = eval_E(model, x0, 0.0);
    const double b = B0.norm();

    Vec3 psi_E, ups_E;
    if (!is_zero(E0)) {
        psi_E = apply_psi(h, B0, E0);
        ups_E = apply_upsilon(h, B0, E0);
    }
    const Vec3 shifted = v0 + h * ups_E;

    Vec3 main;
    if (cfg.variant == Variant::TwoPoint) {
        const Vec3 B_gc = eval_B(model, guiding_center(x0, v0, B0), 0.0);
        main = two_point_phi_apply(sign, h, B0, B_gc, shifted);
    } else {
        // x-bar is known directly at the start because v^0 is given.
        Vec3 x_bar = x0;
        if (cfg.variant == Variant::FilteredImplicit)
            x_bar = eval_point(x0, guiding_center(x0, v0, B0), h * b, ThetaChoice::optimal);
        const Vec3 B_bar = eval_B(model, x_bar, 0.0);
        main = apply_varphi1(sign * h, B_bar, shifted);
    }
    return main + (0.5 * sign * h) * psi_E;
}

OneStepResult one_step_map(const Vec3& x, const Vec3& v, double t, const FieldModel& model,
                           const MethodConfig& cfg, double h) {
    OneStepResult out;
    const Vec3 B_n = eval_B(model, x, t);
    const Vec3 E_n = eval_E(model, x, t);
    const double b = B_n.norm();
    guard_step(cfg, h, b, -1);

    if (cfg.variant == Variant::StandardBoris) {
        // v^{n+1/2} = v^n + (h/2)(v^n x B^n + E^n), then the implicit half
        // relation at n+1 solved in closed form.
        const Vec3 v_half = v + 0.5 * h * (cross(v, B_n) + E_n);
        out.x = x + h * v_half;
        const Vec3 B1 = eval_B(model, out.x, t + h);
        const Vec3 E1 = eval_E(model, out.x, t + h);
        const Vec3 rhs = v_half + 0.5 * h * E1;
        // (I + a hat(B))^{-1} via its Rodriguez form.
        const double a = 0.5 * h;
        const double denom = 1.0 + a * a * B1.norm2();
        out.v = rhs - (a / denom) * cross(B1, rhs) +
                (a * a / denom) * cross(B1, cross(B1, rhs));
        return out;
    }

    const bool two_point = cfg.variant == Variant::TwoPoint;
    const bool implicit = cfg.variant == Variant::FilteredImplicit;

    Vec3 psi_E, ups_E;
    if (!is_zero(E_n)) {
        psi_E = apply_psi(h, B_n, E_n);
        ups_E = apply_upsilon(h, B_n, E_n);
    }

    // Phi_+^n v^n and Psi_+^n E^n; the evaluation point is known from v^n.
    const Vec3 x_gc = guiding_center(x, v, B_n);
    Vec3 phi_plus_v, phi_plus_ups;
    if (two_point) {
        const Vec3 B_gc = eval_B(model, x_gc, t);
        phi_plus_v = two_point_phi_apply(+1, h, B_n, B_gc, v);
        phi_plus_ups = is_zero(ups_E) ? Vec3{} : two_point_phi_apply(+1, h, B_n, B_gc, ups_E);
    } else {
        const Vec3 x_bar = eval_point(x, x_gc, h * b,
                                      implicit ? ThetaChoice::optimal : ThetaChoice::one);
        const Vec3 B_bar = eval_B(model, x_bar, t);
        phi_plus_v = apply_varphi1(h, B_bar, v);
        phi_plus_ups = is_zero(ups_E) ? Vec3{} : apply_varphi1(h, B_bar, ups_E);
    }
    const Vec3 psi_plus_E = psi_E + 2.0 * phi_plus_ups;

    out.x = x + h * phi_plus_v + 0.5 * h * h * psi_plus_E;

    const double t1 = t + h;
    const Vec3 B1 = eval_B(model, out.x, t1);
    const Vec3 E1 = eval_E(model, out.x, t1);
    const double b1 = B1.norm();

    Vec3 psi_E1, ups_E1;
    if (!is_zero(E1)) {
        psi_E1 = apply_psi(h, B1, E1);
        ups_E1 = apply_upsilon(h, B1, E1);
    }
    // Phi_-^{n+1} (v^{n+1} + h Upsilon^{n+1} E^{n+1}) = rhs
    const Vec3 rhs = phi_plus_v + 0.5 * h * (psi_E1 + psi_plus_E);

    const auto solve_v = [&](const Vec3& point) {
        if (two_point) {
            const Vec3 B_gc1 = eval_B(model, point, t1);
            return solve3(two_point_phi_materialize(-1, h, B1, B_gc1), rhs) - h * ups_E1;
        }
        // Phi_-^{n+1} = varphi1(+h hat(B-bar)); invert with the opposite sign.
        const Vec3 B_bar1 = eval_B(model, point, t1);
        return apply_varphi1_inv(-h, B_bar1, rhs) - h * ups_E1;
    };

    // For the implicit variants the evaluation point at n+1 depends on
    // v^{n+1}; same fixed-point pattern as the staggered form.
    Vec3 point = out.x;
    const int iters = (implicit || two_point) ? cfg.fp_max_iters : 0;
    const double x_scale = std::max(1.0, out.x.norm());
    for (int it = 0; it < iters; ++it) {
        const Vec3 v1 = solve_v(point);
        const Vec3 x_gc1 = guiding_center(out.x, v1, B1);
        const Vec3 point_new =
            two_point ? x_gc1 : eval_point(out.x, x_gc1, h * b1, ThetaChoice::optimal);
        out.fp_residual = (point_new - point).norm() / x_scale;
        point = point_new;
        ++out.fp_iters;
        if (out.fp_residual <= cfg.fp_tol) break;
    }
    out.v = solve_v(point);
    return out;
}

Trajectory run_trajectory(const Vec3& x0, const Vec3& v0, const FieldModel& model,
                          const MethodConfig& cfg, double h, double t_end) {
    if (!(h > 0.0)) raise(errc::invalid_argument, "run_trajectory needs h > 0");
    if (!(t_end > 0.0)) raise(errc::invalid_argument, "run_trajectory needs t_end > 0");
    if (!x0.finite() || !v0.finite()) raise(errc::invalid_argument, "non-finite initial data");

    const long n_steps = std::max<long>(1, std::llround(t_end / h));

    Trajectory traj;
    traj.config = cfg;
    traj.preset = model.name;
    traj.epsilon = model.epsilon;
    traj.h = h;
    traj.n_steps = n_steps;
    traj.states.reserve(n_steps + 1);

    try {
        ParticleState s0;
        s0.x = x0;
        s0.v_node = v0;
        s0.v_half = starting_velocity(x0, v0, model, cfg, h, -1);
        const Vec3 B0 = eval_B(model, x0, 0.0);
        s0.resonance_record(check_resonance(cfg.guard, h, B0.norm()));
        s0.field_point = x0;
        traj.states.push_back(s0);

        ParticleState s1;
        s1.n = 1;
        s1.t = h;
        s1.v_half = starting_velocity(x0, v0, model, cfg, h, +1);
        s1.x = x0 + h * s1.v_half;
        traj.states.push_back(s1);

        for (long n = 1; n < n_steps; ++n) {
            const StepResult r = step(traj.states.back(), model, cfg, h);
            ParticleState& cur = traj.states.back();
            cur.v_node = r.v_node;
            cur.v_node_valid = r.v_node_valid;
            cur.fp_iters = r.fp_iters;
            cur.fp_residual = r.fp_residual;
            cur.resonance_record(r.resonance);
            cur.field_point = r.field_point;
            traj.states.push_back(r.next);
        }

        // The final node velocity comes from the same per-step machinery,
        // discarding the position update.
        const StepResult r = step(traj.states.back(), model, cfg, h);
        ParticleState& last = traj.states.back();
        last.v_node = r.v_node;
        last.v_node_valid = r.v_node_valid;
        last.fp_iters = r.fp_iters;
        last.fp_residual = r.fp_residual;
        last.resonance_record(r.resonance);
        last.field_point = r.field_point;
    } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + " (at trajectory step " +
                                  std::to_string(traj.states.size() - 1) + ")");
    }
    return traj;
}

}  // namespace borisfb
