#pragma once

#include <utility>
#include <vector>

#include "borisfb/fields.hpp"
#include "borisfb/integrators.hpp"

namespace borisfb {

/// Right-hand side of the equations of motion: (dx/dt, dv/dt) = (v, v x B + E).
std::pair<Vec3, Vec3> rhs(const FieldModel&, const Vec3& x, const Vec3& v, double t);

/// High-accuracy samples of the exact solution on the coarse grid t_n = n h.
struct ReferenceSolution {
    double h = 0.0;
    long n_steps = 0;
    std::vector<Vec3> x;  // n = 0..n_steps
    std::vector<Vec3> v;
    double substep = 0.0;          // accepted internal sub-step
    double halving_residual = 0.0; // max sample change from the last halving
    double ref_tol = 0.0;
};

/// Classical 4-stage fourth-order integrator with fixed sub-steps. The
/// initial sub-step is min(eps/100, h/100); a run is accepted only when
/// halving it changes every sample by at most ref_tol, refining further
/// when the check fails. Throws OracleNotConverged past the refinement cap.
ReferenceSolution reference_solve(const FieldModel&, const Vec3& x0, const Vec3& v0,
                                  double h, long n_steps, double ref_tol = 1e-10);

enum class ErrMode { endpoint, sup_over_grid };

struct ErrorMetrics {
    double err_x = 0.0;
    double err_vpar = 0.0;
    double err_vperp = 0.0;
    ErrMode mode = ErrMode::sup_over_grid;
};

/// Errors of a trajectory against the reference. Numerical velocity splits
/// use B at the numerical position, exact splits use B at the exact one.
ErrorMetrics compute_errors(const Trajectory&, const ReferenceSolution&,
                            const FieldModel&, ErrMode mode);

/// Exact variation-of-constants flow for constant B and E over time t.
std::pair<Vec3, Vec3> constant_field_flow(const Vec3& x0, const Vec3& v0,
                                          const Vec3& B, const Vec3& E, double t);

}  // namespace borisfb
