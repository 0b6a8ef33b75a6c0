#include <doctest.h>

#include <cmath>

#include "borisfb/error.hpp"
#include "borisfb/reference.hpp"
#include "test_helpers.hpp"

using namespace borisfb;
using testutil::kPaperV0;
using testutil::kPaperX0;

namespace {
void check_close(const Vec3& got, const Vec3& want, double tol) {
    CAPTURE(got.x);
    CAPTURE(want.x);
    CHECK((got - want).norm() <= tol);
}
}  // namespace

TEST_CASE("rhs evaluates the equations of motion") {
    const FieldModel cb = make_preset("constant-B", 1.0 / 8.0);
    const auto [dx, dv] = rhs(cb, {0.1, 0.2, 0.3}, {0, 0, 2.0}, 0.0);
    check_close(dx, {0, 0, 2.0}, 0.0);
    check_close(dv, {0, 0, 0}, 0.0);  // v parallel to B, E = 0

    // published initial data: B = (-1/3, 0, 16.5), a = v x B + E
    const FieldModel paper = make_preset("paper-sec8", 1.0 / 16.0);
    const auto [dx2, dv2] = rhs(paper, kPaperX0, kPaperV0, 0.0);
    check_close(dx2, kPaperV0, 0.0);
    check_close(eval_B(paper, kPaperX0, 0.0), {-1.0 / 3.0, 0.0, 16.5}, 1e-15);
    check_close(dv2, {1951.0 / 125.0, -1304.0 / 375.0, 2.0 / 9.0}, 1e-13);

    // acceleration is affine in E: doubling E doubles its contribution
    FieldModel doubled = paper;
    doubled.E = [base = paper.E](const Vec3& x, double t) { return 2.0 * base(x, t); };
    const auto [dx3, dv3] = rhs(doubled, kPaperX0, kPaperV0, 0.0);
    (void)dx3;
    const Vec3 e = eval_E(paper, kPaperX0, 0.0);
    check_close(dv3, dv2 + e, 1e-13);
}

TEST_CASE("reference solver reproduces constant-field closed forms") {
    const double eps = 1.0 / 16.0;
    const double h = eps;

    const FieldModel cb = make_preset("constant-B", eps);
    const ReferenceSolution r1 = reference_solve(cb, kPaperX0, kPaperV0, h, 64);
    const Vec3 B = eval_B(cb, kPaperX0, 0.0);
    for (long n = 0; n <= r1.n_steps; n += 8) {
        const auto [x, v] = constant_field_flow(kPaperX0, kPaperV0, B, {0, 0, 0}, h * n);
        check_close(r1.x[n], x, 1e-12 * std::max(1.0, x.norm()));
        check_close(r1.v[n], v, 1e-12 * std::max(1.0, v.norm()));
    }

    const FieldModel cbe = make_preset("constant-BE", eps);
    const ReferenceSolution r2 = reference_solve(cbe, kPaperX0, kPaperV0, h, 64);
    const Vec3 E = eval_E(cbe, kPaperX0, 0.0);
    for (long n = 0; n <= r2.n_steps; n += 8) {
        const auto [x, v] = constant_field_flow(kPaperX0, kPaperV0, B, E, h * n);
        check_close(r2.x[n], x, 1e-11 * std::max(1.0, x.norm()));
        check_close(r2.v[n], v, 1e-11 * std::max(1.0, v.norm()));
    }
}

TEST_CASE("step-halving self-validation on the published preset") {
    const double eps = 1.0 / 16.0;
    const FieldModel model = make_preset("paper-sec8", eps);
    const ReferenceSolution ref = reference_solve(model, kPaperX0, kPaperV0, eps, 16);
    CHECK(ref.halving_residual <= 1e-10);
    CHECK(ref.substep > 0.0);
    CHECK(ref.x.size() == 17);

    // refining further does not increase the halving discrepancy
    const ReferenceSolution loose = reference_solve(model, kPaperX0, kPaperV0, eps, 16, 1e-6);
    const ReferenceSolution tight =
        reference_solve(model, kPaperX0, kPaperV0, eps, 16, loose.halving_residual * 0.99);
    CHECK(tight.halving_residual <= loose.halving_residual);
}

TEST_CASE("compute_errors isolates the metrics") {
    const double eps = 1.0 / 16.0;
    const FieldModel model = make_preset("constant-BE", eps);
    const double h = eps;
    const long n = 12;
    const ReferenceSolution ref = reference_solve(model, kPaperX0, kPaperV0, h, n);

    // a trajectory that IS the reference has zero errors
    Trajectory traj;
    traj.h = h;
    traj.n_steps = n;
    traj.epsilon = eps;
    for (long i = 0; i <= n; ++i) {
        ParticleState s;
        s.n = i;
        s.t = h * static_cast<double>(i);
        s.x = ref.x[i];
        s.v_node = ref.v[i];
        traj.states.push_back(s);
    }
    const ErrorMetrics zero = compute_errors(traj, ref, model, ErrMode::sup_over_grid);
    CHECK(zero.err_x == 0.0);
    CHECK(zero.err_vpar == 0.0);
    CHECK(zero.err_vperp == 0.0);

    // shifting positions only moves err_x (constant field: splits unchanged)
    const double delta = 1e-3;
    for (auto& s : traj.states) s.x += Vec3{delta, 0, 0};
    const ErrorMetrics shifted = compute_errors(traj, ref, model, ErrMode::sup_over_grid);
    CHECK(shifted.err_x == doctest::Approx(delta).epsilon(1e-12));
    CHECK(shifted.err_vpar == 0.0);
    CHECK(shifted.err_vperp == 0.0);

    // endpoint mode only looks at the last node
    traj.states.back().x += Vec3{delta, 0, 0};
    const ErrorMetrics endpoint = compute_errors(traj, ref, model, ErrMode::endpoint);
    CHECK(endpoint.err_x == doctest::Approx(2 * delta).epsilon(1e-12));

    // mismatched grids are rejected
    Trajectory bad = traj;
    bad.states.pop_back();
    bad.n_steps -= 1;
    CHECK_THROWS_AS(compute_errors(bad, ref, model, ErrMode::endpoint), Error);
}

TEST_CASE("filtered-implicit error drops by ~16x when eps drops by 4 (order 2)") {
    const Vec3 x0 = kPaperX0, v0 = kPaperV0;
    MethodConfig cfg;
    cfg.variant = Variant::FilteredImplicit;
    double errs[2];
    int i = 0;
    for (double eps : {1.0 / 256.0, 1.0 / 1024.0}) {
        const FieldModel model = make_preset("paper-sec8", eps);
        const double h = eps;
        const long n = std::llround(1.0 / h);
        const Trajectory traj = run_trajectory(x0, v0, model, cfg, h, 1.0);
        const ReferenceSolution ref = reference_solve(model, x0, v0, h, n);
        errs[i++] = compute_errors(traj, ref, model, ErrMode::sup_over_grid).err_x;
    }
    const double ratio = errs[0] / errs[1];
    CAPTURE(errs[0]);
    CAPTURE(errs[1]);
    CHECK(ratio >= 10.0);  // 4^1.7
    CHECK(ratio <= 25.0);  // 4^2.3
}

TEST_CASE("two-point beats the explicit filter at a coarse near-resonant step") {
    const double eps = std::ldexp(1.0, -10);
    const FieldModel model = make_preset("paper-sec8", eps);
    const double h = 4.0 * eps;
    const long n = std::llround(1.0 / h);
    const ReferenceSolution ref = reference_solve(model, kPaperX0, kPaperV0, h, n);

    MethodConfig exp_cfg, twop_cfg;
    exp_cfg.variant = Variant::FilteredExplicit;
    twop_cfg.variant = Variant::TwoPoint;
    const Trajectory t_exp = run_trajectory(kPaperX0, kPaperV0, model, exp_cfg, h, 1.0);
    const Trajectory t_twop = run_trajectory(kPaperX0, kPaperV0, model, twop_cfg, h, 1.0);
    const double e_exp = compute_errors(t_exp, ref, model, ErrMode::endpoint).err_x;
    const double e_twop = compute_errors(t_twop, ref, model, ErrMode::endpoint).err_x;
    CAPTURE(e_exp);
    CAPTURE(e_twop);
    CHECK(e_twop <= e_exp);
}
