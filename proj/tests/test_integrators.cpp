#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstring>
#include <random>

#include "borisfb/error.hpp"
#include "borisfb/filters.hpp"
#include "borisfb/integrators.hpp"
#include "test_helpers.hpp"

using namespace borisfb;
using testutil::eigen_apply;
using testutil::kPaperV0;
using testutil::kPaperX0;
using testutil::rand_vec;

namespace {

using cplx = std::complex<double>;

void check_close(const Vec3& got, const Vec3& want, double tol) {
    CAPTURE(got.x);
    CAPTURE(want.x);
    CAPTURE((got - want).norm());
    CHECK((got - want).norm() <= tol);
}

cplx varphi1_scalar(cplx z) { return std::abs(z) < 1e-30 ? cplx(1) : (std::exp(z) - 1.0) / z; }
cplx varphi2_scalar(cplx z) {
    return std::abs(z) < 1e-30 ? cplx(1) : (std::exp(z) - 1.0 - z) / (0.5 * z * z);
}
cplx exp_scalar(cplx z) { return std::exp(-z); }

// Exact flow for constant fields, via the complex-eigendecomposition route
// (independent of the library's Rodriguez forms).
std::pair<Vec3, Vec3> exact_constant_flow(const Vec3& x0, const Vec3& v0, const Vec3& B,
                                          const Vec3& E, double t) {
    const Vec3 x = x0 + t * eigen_apply(varphi1_scalar, -t, B, v0) +
                   0.5 * t * t * eigen_apply(varphi2_scalar, -t, B, E);
    const Vec3 v = eigen_apply(exp_scalar, t, B, v0) + t * eigen_apply(varphi1_scalar, -t, B, E);
    return {x, v};
}

MethodConfig config_for(Variant v) {
    MethodConfig cfg;
    cfg.variant = v;
    return cfg;
}

constexpr std::array<Variant, 3> kAllVariantsFiltered = {
    Variant::FilteredExplicit, Variant::FilteredImplicit, Variant::TwoPoint};

}  // namespace

TEST_CASE("method names round-trip") {
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint})
        CHECK(parse_variant(variant_name(v)) == v);
    CHECK_THROWS_AS(parse_variant("leapfrog"), Error);
}

TEST_CASE("standard Boris rotation preserves the staggered speed for E = 0") {
    const FieldModel model = testutil::paper_model_no_E(1.0 / 16.0);
    const Trajectory traj =
        run_trajectory(kPaperX0, kPaperV0, model, config_for(Variant::StandardBoris), 1.0 / 16.0, 1.0);
    const double n0 = traj.states[1].v_half.norm();
    for (std::size_t i = 2; i < traj.states.size(); ++i)
        CHECK(std::fabs(traj.states[i].v_half.norm() - n0) <= 1e-13 * n0);
}

TEST_CASE("standard Boris reduces to leapfrog when B vanishes") {
    const FieldModel model = testutil::zero_field_model();
    ParticleState s;
    s.x = {0.1, 0.2, 0.3};
    s.v_half = {1.0, -0.5, 0.25};
    const double h = 0.05;
    const StepResult r = standard_boris_step(s, model, h);
    const Vec3 E = eval_E(model, s.x, 0.0);
    check_close(r.next.x, s.x + h * s.v_half + h * h * E, 1e-16);
    check_close(r.next.v_half, s.v_half + h * E, 1e-16);
}

TEST_CASE("standard Boris one-step form matches the two-step recurrence") {
    const double eps = 1.0 / 16.0;
    const double h = eps;
    const FieldModel model = make_preset("paper-sec8", eps);
    const MethodConfig cfg = config_for(Variant::StandardBoris);
    const Trajectory traj = run_trajectory(kPaperX0, kPaperV0, model, cfg, h, 1.0);
    REQUIRE(traj.n_steps == 16);
    REQUIRE(traj.states.size() == 17);

    // Independent two-step iteration from the same first two positions:
    // x^{n+1} solves (I + (h/2) hat(B^n)) x^{n+1} = rhs.
    Vec3 xm = traj.states[0].x, xc = traj.states[1].x;
    for (long n = 1; n < traj.n_steps; ++n) {
        const double t = static_cast<double>(n) * h;
        const Vec3 B = eval_B(model, xc, t);
        const Vec3 E = eval_E(model, xc, t);
        const Vec3 rhs = 2.0 * xc - xm + 0.5 * h * cross(B, xm) + h * h * E;
        const Mat3 A = Mat3::identity() + Mat3::hat(B) * (0.5 * h);
        const Vec3 xp = solve3(A, rhs);
        xm = xc;
        xc = xp;
        check_close(xc, traj.states[n + 1].x, 1e-12 * std::max(1.0, xc.norm()));
    }
}

TEST_CASE("filtered method is exact for constant B with E = 0") {
    const double eps = 1.0 / 32.0;
    const FieldModel model = make_preset("constant-B", eps);
    const Vec3 B = eval_B(model, kPaperX0, 0.0);
    const double h = eps;  // hb = 1
    const long steps = 200;
    for (Variant v : {Variant::FilteredExplicit, Variant::FilteredImplicit}) {
        const Trajectory traj =
            run_trajectory(kPaperX0, kPaperV0, model, config_for(v), h, h * steps);
        const auto [x_exact, v_exact] =
            exact_constant_flow(kPaperX0, kPaperV0, B, {0, 0, 0}, h * steps);
        check_close(traj.states.back().x, x_exact, 1e-12 * x_exact.norm());
        check_close(traj.states.back().v_node, v_exact, 1e-12 * v_exact.norm());
    }
}

TEST_CASE("filtered method is exact for constant B and E") {
    const double eps = 1.0 / 32.0;
    const FieldModel model = make_preset("constant-BE", eps);
    const Vec3 B = eval_B(model, kPaperX0, 0.0);
    const Vec3 E = eval_E(model, kPaperX0, 0.0);
    const double h = eps;
    const long steps = 100;
    const auto [x_exact, v_exact] = exact_constant_flow(kPaperX0, kPaperV0, B, E, h * steps);
    for (Variant v : kAllVariantsFiltered) {
        const Trajectory traj =
            run_trajectory(kPaperX0, kPaperV0, model, config_for(v), h, h * steps);
        check_close(traj.states.back().x, x_exact, 1e-11 * x_exact.norm());
        check_close(traj.states.back().v_node, v_exact, 1e-11 * v_exact.norm());
    }
}

TEST_CASE("filtered steps preserve the staggered speed exactly when E = 0") {
    const double eps = 1.0 / 256.0;
    const FieldModel model = testutil::paper_model_no_E(eps);
    const Trajectory traj = run_trajectory(kPaperX0, kPaperV0, model,
                                           config_for(Variant::FilteredExplicit), 4 * eps, 1.0);
    for (std::size_t i = 2; i < traj.states.size(); ++i)
        CHECK(std::fabs(traj.states[i].v_half.norm() - traj.states[i - 1].v_half.norm()) <=
              1e-14 * traj.states[i].v_half.norm());
}

TEST_CASE("two-point method: constant-field agreement and O(h eps) norm drift") {
    const double eps = 1.0 / 64.0;
    const FieldModel constant = make_preset("constant-B", eps);
    const double h = eps;
    const Trajectory a = run_trajectory(kPaperX0, kPaperV0, constant,
                                        config_for(Variant::FilteredImplicit), h, 50 * h);
    const Trajectory b =
        run_trajectory(kPaperX0, kPaperV0, constant, config_for(Variant::TwoPoint), h, 50 * h);
    for (std::size_t i = 0; i < a.states.size(); ++i)
        check_close(b.states[i].x, a.states[i].x, 1e-13 * std::max(1.0, a.states[i].x.norm()));

    // inhomogeneous field, E = 0: speed preserved only up to O(h eps)
    const FieldModel inhom = testutil::paper_model_no_E(eps);
    const double h2 = 4 * eps;
    const Trajectory t2 =
        run_trajectory(kPaperX0, kPaperV0, inhom, config_for(Variant::TwoPoint), h2, 200 * h2);
    double per_step = 0.0;
    for (std::size_t i = 2; i < t2.states.size(); ++i)
        per_step = std::max(per_step, std::fabs(t2.states[i].v_half.norm() -
                                                t2.states[i - 1].v_half.norm()));
    const double bound = 10.0 * h2 * eps * t2.states[1].v_half.norm();
    CAPTURE(per_step);
    CHECK(per_step <= bound);
    CHECK(per_step > 1e-3 * bound);  // the drift is genuinely O(h eps), not zero
}

TEST_CASE("node_velocity limits") {
    const Vec3 B{0, 0, 4.0};
    // smooth data, h -> 0: the filter factors drop out
    const Vec3 xm{0.0, 0.0, 0.0}, xp{2e-8, -1e-8, 3e-8};
    const double h = 1e-8;
    check_close(node_velocity(xm, xp, B, B, {0.5, 0.5, 0.5}, h),
                (xp - xm) / (2.0 * h), 1e-6);

    // E parallel to B contributes nothing
    const Vec3 E_par{0, 0, 2.0};
    check_close(node_velocity(xm, xp, B, B, E_par, 0.25), apply_phi1(0.25, B, (xp - xm) / 0.5),
                1e-16);
}

TEST_CASE("node velocity is exact on constant-field rotation data") {
    const double b = 16.0;
    const Vec3 B{0, 0, b};
    const double h = 1.0 / b;
    const Vec3 v0{0.4, 0.1, 0.7};
    // x(t) = x0 + t varphi1(-t hat B) v0; node velocity should equal v(h)
    const Vec3 x0{0.2, -0.3, 0.1};
    const auto [x_prev, v_prev] = exact_constant_flow(x0, v0, B, {0, 0, 0}, 0.0);
    const auto [x_next, v_next] = exact_constant_flow(x0, v0, B, {0, 0, 0}, 2.0 * h);
    const auto [x_mid, v_mid] = exact_constant_flow(x0, v0, B, {0, 0, 0}, h);
    (void)x_mid;
    const Vec3 got = node_velocity(x_prev, x_next, B, B, {0, 0, 0}, h);
    check_close(got, v_mid, 1e-13 * v_mid.norm());
}

TEST_CASE("starting velocity limits and closed forms") {
    const double eps = 1.0 / 32.0;
    const FieldModel model = make_preset("constant-B", eps);
    const Vec3 B = eval_B(model, kPaperX0, 0.0);

    // h -> 0 gives back v0
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint}) {
        const Vec3 vh = starting_velocity(kPaperX0, kPaperV0, model, config_for(v), 1e-10);
        check_close(vh, kPaperV0, 1e-8);
    }

    // constant B, E = 0: v^{1/2} equals the average of the exact velocity
    // over [0, h] (Simpson quadrature of the rotation flow)
    const double h = eps;
    Vec3 quad{};
    const int panels = 2000;
    for (int i = 0; i <= panels; ++i) {
        const double t = h * static_cast<double>(i) / panels;
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        quad += w * eigen_apply(exp_scalar, t, B, kPaperV0);
    }
    quad *= 1.0 / (3.0 * panels);
    const Vec3 vhalf =
        starting_velocity(kPaperX0, kPaperV0, model, config_for(Variant::FilteredExplicit), h);
    check_close(vhalf, quad, 1e-12 * quad.norm());

    // E parallel to B with v0 parallel to B: v^{1/2} = v0 + (h/2) E
    FieldModel par = make_preset("constant-B", eps);
    par.E = [](const Vec3&, double) { return Vec3{0, 0, 0.6}; };
    const Vec3 v0_par{0, 0, 1.5};
    const Vec3 got =
        starting_velocity(kPaperX0, v0_par, par, config_for(Variant::FilteredImplicit), h);
    check_close(got, v0_par + (h / 2.0) * Vec3{0, 0, 0.6}, 1e-14);
}

TEST_CASE("one-step map reduces to the exponential integrator for constant fields") {
    const double eps = 1.0 / 32.0;
    const FieldModel model = make_preset("constant-BE", eps);
    const Vec3 B = eval_B(model, kPaperX0, 0.0);
    const Vec3 E = eval_E(model, kPaperX0, 0.0);
    const double h = eps;
    const auto [x1, v1] = exact_constant_flow(kPaperX0, kPaperV0, B, E, h);
    for (Variant v : kAllVariantsFiltered) {
        const OneStepResult got = one_step_map(kPaperX0, kPaperV0, 0.0, model, config_for(v), h);
        check_close(got.x, x1, 1e-13 * std::max(1.0, x1.norm()));
        check_close(got.v, v1, 1e-13 * std::max(1.0, v1.norm()));
    }
}

TEST_CASE("one-step map with h = 0 is the identity") {
    const FieldModel model = make_preset("paper-sec8", 1.0 / 16.0);
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint}) {
        const OneStepResult r = one_step_map(kPaperX0, kPaperV0, 0.0, model, config_for(v), 0.0);
        check_close(r.x, kPaperX0, 0.0);
        check_close(r.v, kPaperV0, 0.0);
    }
}

TEST_CASE("forward-backward composition returns the state") {
    const double eps = 1.0 / 64.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    const double h = eps;
    for (Variant v : {Variant::StandardBoris, Variant::FilteredExplicit,
                      Variant::FilteredImplicit, Variant::TwoPoint}) {
        const MethodConfig cfg = config_for(v);
        const OneStepResult fwd = one_step_map(kPaperX0, kPaperV0, 0.0, model, cfg, h);
        const OneStepResult back = one_step_map(fwd.x, fwd.v, h, model, cfg, -h);
        check_close(back.x, kPaperX0, 1e-10);
        check_close(back.v, kPaperV0, 1e-10);
    }
}

TEST_CASE("trajectories are deterministic and carry exact times") {
    const double eps = 1.0 / 16.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    const MethodConfig cfg = config_for(Variant::FilteredImplicit);
    const Trajectory a = run_trajectory(kPaperX0, kPaperV0, model, cfg, eps, 1.0);
    const Trajectory b = run_trajectory(kPaperX0, kPaperV0, model, cfg, eps, 1.0);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) {
        CHECK(std::memcmp(&a.states[i].x, &b.states[i].x, sizeof(Vec3)) == 0);
        CHECK(std::memcmp(&a.states[i].v_half, &b.states[i].v_half, sizeof(Vec3)) == 0);
        CHECK(a.states[i].t == static_cast<double>(a.states[i].n) * eps);
    }

    const Trajectory one = run_trajectory(kPaperX0, kPaperV0, model, cfg, eps, eps);
    CHECK(one.n_steps == 1);
    CHECK(one.states.size() == 2);
}

TEST_CASE("implicit variant with zero sweeps degenerates to the explicit step") {
    const double eps = 1.0 / 64.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    MethodConfig imp0 = config_for(Variant::FilteredImplicit);
    imp0.fp_max_iters = 0;
    const MethodConfig exp_cfg = config_for(Variant::FilteredExplicit);

    // From an identical staggered state the step itself is bit-identical;
    // only the starting value differs (the implicit start knows x-bar^0).
    const Trajectory warm =
        run_trajectory(kPaperX0, kPaperV0, model, exp_cfg, 4 * eps, 20 * eps);
    for (std::size_t i = 1; i + 1 < warm.states.size(); ++i) {
        const StepResult a = step(warm.states[i], model, imp0, 4 * eps);
        const StepResult b = step(warm.states[i], model, exp_cfg, 4 * eps);
        CHECK(std::memcmp(&a.next.x, &b.next.x, sizeof(Vec3)) == 0);
        CHECK(std::memcmp(&a.next.v_half, &b.next.v_half, sizeof(Vec3)) == 0);
        CHECK(std::memcmp(&a.v_node, &b.v_node, sizeof(Vec3)) == 0);
    }
}

TEST_CASE("resonance guard policies") {
    const double eps = 1.0 / 64.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    // h|B| ~ 2 pi: the guard's first harmonic fires
    const double h = 2.0 * M_PI * eps / (1.0 + eps * 0.5);

    MethodConfig flagging = config_for(Variant::FilteredExplicit);
    const Trajectory traj = run_trajectory(kPaperX0, kPaperV0, model, flagging, h, 5 * h);
    CHECK(traj.any_resonant());
    CHECK(traj.min_sinc() < 0.05);

    MethodConfig rejecting = flagging;
    rejecting.guard_policy = GuardPolicy::Reject;
    CHECK_THROWS_AS(run_trajectory(kPaperX0, kPaperV0, model, rejecting, h, 5 * h), Error);
    try {
        run_trajectory(kPaperX0, kPaperV0, model, rejecting, h, 5 * h);
    } catch (const Error& e) {
        CHECK(e.code() == errc::resonance_rejected);
        CHECK(std::string(e.what()).find("trajectory step") != std::string::npos);
    }
}

TEST_CASE("zero field is rejected by the filtered variants") {
    const FieldModel model = testutil::zero_field_model();
    ParticleState s;
    s.x = {0.1, 0.2, 0.3};
    s.v_half = {1, 0, 0};
    CHECK_THROWS_AS(filtered_step(s, model, config_for(Variant::FilteredExplicit), 0.1), Error);
    CHECK_THROWS_AS(two_point_step(s, model, config_for(Variant::TwoPoint), 0.1), Error);
}

TEST_CASE("a non-contracting fixed point raises NoConvergence") {
    // A violent transverse gradient tilts the rotation axis faster than the
    // x-bar iteration can settle, so it stops contracting.
    FieldModel model;
    model.name = "divergent";
    model.epsilon = 0.25;
    model.B0 = [](const Vec3&) { return Vec3{0, 0, 1}; };
    model.B1 = [](const Vec3& x, double) { return Vec3{400.0 * x.y, 0.0, 0.0}; };
    model.E = [](const Vec3&, double) { return Vec3{}; };

    MethodConfig cfg = config_for(Variant::FilteredImplicit);
    cfg.fp_max_iters = 8;
    cfg.guard.c_min = 0.0;  // do not let the guard preempt the test
    bool saw_no_convergence = false;
    try {
        run_trajectory({0.1, 0.0, 0.2}, {1.0, 0.3, 0.1}, model, cfg, 0.25, 2.5);
    } catch (const Error& e) {
        saw_no_convergence = e.code() == errc::no_convergence;
    }
    CHECK(saw_no_convergence);
}
