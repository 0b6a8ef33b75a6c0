#pragma once

#include "borisfb/mat3.hpp"
#include "borisfb/vec3.hpp"

namespace borisfb {

/// Any analytic function of the skew matrix hat(B) reduces, via
/// hat(B)^3 = -|B|^2 hat(B), to a three-term combination
///   f(h hat(B)) = c0 I + c1 hat(B) + c2 hat(B)^2.
/// Coefficients are expressed with respect to hat(B) of the *unscaled*
/// field vector; the step size is folded into c1 and c2.
struct RodriguezCoeffs {
    double c0 = 1.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Scalar filter kernels. All accept signed arguments; series fallbacks
/// keep the removable singularities at 0 accurate.
double sinc(double xi);   // sin(xi)/xi
double tanc(double xi);   // tan(xi)/xi, throws FilterPole near pi/2 + k pi
double theta(double xi);  // 1/sinc(xi/2)^2, throws FilterPole near 2 k pi

/// Below this |h||B| every scalar kernel switches from its closed form to a
/// degree-8 Taylor polynomial. At the switch point the two branches agree to
/// 1e-13 at the level of applied vectors: the difference kernels
/// (1 - f(w))/w^2 lose ~1e-16/w^2 to cancellation in closed form, which at
/// 0.05 is still two orders below the truncated series' own floor.
inline constexpr double kKernelSeriesThreshold = 0.05;

// Dimensionless deviation-from-identity kernels, as functions of w = h|B|.
// Exposed so tests can pin the series/closed-form switch behaviour.
namespace kernels {
double cos_defect(double w);       // (1 - cos w) / w^2
double sinc_defect(double w);      // (1 - sinc w) / w^2
double inv_sinc_defect(double w);  // (1 - 1/sinc w) / w^2
double psi_defect(double w);       // (1 - tanc(w/2)) / w^2
double phi2_defect(double w);      // (1 - 1/sinc(w/2)^2) / w^2
double phi2_inv_defect(double w);  // (1 - sinc(w/2)^2) / w^2
double cot_defect(double w);       // (1 - (w/2) cot(w/2)) / w^2
}  // namespace kernels

/// Coefficients of the filter actions used by the integrators, all with
/// respect to hat(B), b = |B|. The step h may be negative (adjoint steps).
RodriguezCoeffs exp_neg_coeffs(double h, double b);      // exp(-h hat(B))
RodriguezCoeffs psi_coeffs(double h, double b);          // tanch(zeta/2) filter
RodriguezCoeffs phi1_coeffs(double h, double b);         // 1/sinch filter
RodriguezCoeffs phi2_coeffs(double h, double b);         // 1/sinch(zeta/2)^2 filter
RodriguezCoeffs phi2_inv_coeffs(double h, double b);     // sinch(zeta/2)^2
RodriguezCoeffs upsilon_coeffs(double h, double b);      // (phi1-like - 1)/zeta filter
RodriguezCoeffs varphi1_coeffs(double h, double b);      // (e^z - 1)/z at -h hat(B)
RodriguezCoeffs varphi1_inv_coeffs(double h, double b);  // inverse of the above
RodriguezCoeffs varphi2_coeffs(double h, double b);      // (e^z - 1 - z)/(z^2/2) at -h hat(B)
RodriguezCoeffs sinch_coeffs(double h, double b);        // sinch(h hat(B))

/// c0 v + c1 (B x v) + c2 (B x (B x v)); never materializes a matrix.
Vec3 rodriguez_apply(const RodriguezCoeffs& c, const Vec3& B, const Vec3& v);

/// Same action as a dense matrix, for the one place a linear solve needs it.
Mat3 rodriguez_materialize(const RodriguezCoeffs& c, const Vec3& B);

/// Filter applications. Each throws ZeroField when |B| = 0 (the model
/// assumes a strong field) and FilterPole near the singularities listed
/// in the kernel comments above.
Vec3 apply_exp_neg(double h, const Vec3& B, const Vec3& v);
Vec3 apply_psi(double h, const Vec3& B, const Vec3& v);
Vec3 apply_phi1(double h, const Vec3& B, const Vec3& v);
Vec3 apply_phi2(double h, const Vec3& B, const Vec3& v);
Vec3 apply_upsilon(double h, const Vec3& B, const Vec3& v);
Vec3 apply_varphi1(double h, const Vec3& B, const Vec3& v);
Vec3 apply_varphi1_inv(double h, const Vec3& B, const Vec3& v);
Vec3 apply_varphi2(double h, const Vec3& B, const Vec3& v);

}  // namespace borisfb
