#include "borisfb/reference.hpp"

#include <cmath>
#include <limits>

#include "borisfb/error.hpp"
#include "borisfb/filters.hpp"

namespace borisfb {

namespace {

struct Phase {
    Vec3 x, v;
};

inline Phase deriv(const FieldModel& model, const Phase& y, double t) {
    const Vec3 B = eval_B(model, y.x, t);
    const Vec3 E = eval_E(model, y.x, t);
    return {y.v, cross(y.v, B) + E};
}

// One classical RK4 step of size dt.
inline Phase rk4_step(const FieldModel& model, const Phase& y, double t, double dt) {
    const Phase k1 = deriv(model, y, t);
    const Phase k2 = deriv(model, {y.x + 0.5 * dt * k1.x, y.v + 0.5 * dt * k1.v}, t + 0.5 * dt);
    const Phase k3 = deriv(model, {y.x + 0.5 * dt * k2.x, y.v + 0.5 * dt * k2.v}, t + 0.5 * dt);
    const Phase k4 = deriv(model, {y.x + dt * k3.x, y.v + dt * k3.v}, t + dt);
    return {y.x + (dt / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
            y.v + (dt / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)};
}

struct Samples {
    std::vector<Vec3> x, v;
};

Samples integrate(const FieldModel& model, const Vec3& x0, const Vec3& v0, double h,
                  long n_steps, long n_sub) {
    Samples out;
    out.x.reserve(n_steps + 1);
    out.v.reserve(n_steps + 1);
    Phase y{x0, v0};
    out.x.push_back(y.x);
    out.v.push_back(y.v);
    const double dt = h / static_cast<double>(n_sub);
    for (long n = 0; n < n_steps; ++n) {
        const double t_base = static_cast<double>(n) * h;
        for (long s = 0; s < n_sub; ++s)
            y = rk4_step(model, y, t_base + static_cast<double>(s) * dt, dt);
        out.x.push_back(y.x);
        out.v.push_back(y.v);
    }
    return out;
}

double max_sample_diff(const Samples& a, const Samples& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.x.size(); ++i) {
        m = std::max(m, (a.x[i] - b.x[i]).norm());
        m = std::max(m, (a.v[i] - b.v[i]).norm());
    }
    return m;
}

}  // namespace

std::pair<Vec3, Vec3> rhs(const FieldModel& model, const Vec3& x, const Vec3& v, double t) {
    const Vec3 B = eval_B(model, x, t);
    const Vec3 E = eval_E(model, x, t);
    return {v, cross(v, B) + E};
}

ReferenceSolution reference_solve(const FieldModel& model, const Vec3& x0, const Vec3& v0,
                                  double h, long n_steps, double ref_tol) {
    if (!(h > 0.0) || n_steps < 1)
        raise(errc::invalid_argument, "reference_solve needs h > 0 and n_steps >= 1");

    const double h_ref = std::min(model.epsilon / 100.0, h / 100.0);
    long n_sub = std::max<long>(1, static_cast<long>(std::ceil(h / h_ref)));

    // Step-halving validation; the fine run of a failed pair becomes the
    // coarse run of the next, so refinement reuses every integration.
    constexpr int kMaxRefinements = 14;
    Samples coarse = integrate(model, x0, v0, h, n_steps, n_sub);
    for (int r = 0; r < kMaxRefinements; ++r) {
        Samples fine = integrate(model, x0, v0, h, n_steps, 2 * n_sub);
        const double diff = max_sample_diff(coarse, fine);
        if (diff <= ref_tol) {
            ReferenceSolution out;
            out.h = h;
            out.n_steps = n_steps;
            out.x = std::move(fine.x);
            out.v = std::move(fine.v);
            out.substep = h / static_cast<double>(2 * n_sub);
            out.halving_residual = diff;
            out.ref_tol = ref_tol;
            return out;
        }
        coarse = std::move(fine);
        n_sub *= 2;
    }
    raise(errc::oracle_not_converged,
          "step-halving check did not reach ref_tol = " + std::to_string(ref_tol));
}

ErrorMetrics compute_errors(const Trajectory& traj, const ReferenceSolution& ref,
                            const FieldModel& model, ErrMode mode) {
    if (traj.n_steps != ref.n_steps ||
        traj.states.size() != ref.x.size() ||
        std::fabs(traj.h - ref.h) > 1e-15 * std::max(1.0, std::fabs(ref.h)))
        raise(errc::grid_mismatch, "trajectory and reference grids differ");

    ErrorMetrics m;
    m.mode = mode;
    bool velocity_defined = true;
    const std::size_t first = (mode == ErrMode::endpoint) ? traj.states.size() - 1 : 0;
    for (std::size_t i = first; i < traj.states.size(); ++i) {
        const ParticleState& s = traj.states[i];
        m.err_x = std::max(m.err_x, (s.x - ref.x[i]).norm());
        if (!s.v_node_valid) {
            velocity_defined = false;
            continue;
        }
        const Vec3 B_num = eval_B(model, s.x, s.t);
        const Vec3 B_ref = eval_B(model, ref.x[i], s.t);
        const auto [vpar_n, vperp_n] = split_velocity(s.v_node, B_num);
        const auto [vpar_r, vperp_r] = split_velocity(ref.v[i], B_ref);
        m.err_vpar = std::max(m.err_vpar, (vpar_n - vpar_r).norm());
        m.err_vperp = std::max(m.err_vperp, (vperp_n - vperp_r).norm());
    }
    if (!velocity_defined) {
        m.err_vpar = std::numeric_limits<double>::quiet_NaN();
        m.err_vperp = std::numeric_limits<double>::quiet_NaN();
    }
    return m;
}

std::pair<Vec3, Vec3> constant_field_flow(const Vec3& x0, const Vec3& v0,
                                          const Vec3& B, const Vec3& E, double t) {
    const Vec3 x = x0 + t * apply_varphi1(t, B, v0) + 0.5 * t * t * apply_varphi2(t, B, E);
    const Vec3 v = apply_exp_neg(t, B, v0) + t * apply_varphi1(t, B, E);
    return {x, v};
}

}  // namespace borisfb
