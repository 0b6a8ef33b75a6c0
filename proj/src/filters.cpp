#include "borisfb/filters.hpp"

#include <cmath>

#include "borisfb/error.hpp"

namespace borisfb {

namespace {

constexpr double kSeriesThreshold = kKernelSeriesThreshold;

// Hard safety net on denominators near filter poles. The resonance guard
// upstream rejects/flags long before this trips.
constexpr double kPoleTol = 1e-8;

inline void check_pole(double denom, const char* what) {
    if (std::fabs(denom) <= kPoleTol) raise(errc::filter_pole, what);
}

inline void check_field(double b) {
    if (!(b > 0.0)) raise(errc::zero_field, "|B| = 0 is outside the model");
}

}  // namespace

double sinc(double xi) {
    const double u = xi * xi;
    if (std::fabs(xi) < kSeriesThreshold)
        return 1.0 + u * (-1.0 / 6.0 + u * (1.0 / 120.0 + u * (-1.0 / 5040.0 + u / 362880.0)));
    return std::sin(xi) / xi;
}

double tanc(double xi) {
    const double u = xi * xi;
    if (std::fabs(xi) < kSeriesThreshold)
        return 1.0 + u * (1.0 / 3.0 + u * (2.0 / 15.0 + u * (17.0 / 315.0 + u * 62.0 / 2835.0)));
    check_pole(std::cos(xi), "tanc near pi/2 + k pi");
    return std::tan(xi) / xi;
}

double theta(double xi) {
    const double s = sinc(0.5 * xi);
    check_pole(s, "theta near 2 k pi");
    return 1.0 / (s * s);
}

namespace kernels {

double cos_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return 0.5 + u * (-1.0 / 24.0 + u * (1.0 / 720.0 + u * (-1.0 / 40320.0 + u / 3628800.0)));
    const double s = std::sin(0.5 * w);
    return 2.0 * s * s / u;  // 1 - cos w == 2 sin^2(w/2)
}

double sinc_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return 1.0 / 6.0 + u * (-1.0 / 120.0 + u * (1.0 / 5040.0 + u * (-1.0 / 362880.0 + u / 39916800.0)));
    return (1.0 - sinc(w)) / u;
}

double inv_sinc_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return -(1.0 / 6.0 + u * (7.0 / 360.0 + u * (31.0 / 15120.0 + u * (127.0 / 604800.0 + u * 73.0 / 3421440.0))));
    const double s = sinc(w);
    check_pole(s, "1/sinc near k pi");
    return (1.0 - 1.0 / s) / u;
}

double psi_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return -(1.0 / 12.0 + u * (1.0 / 120.0 + u * (17.0 / 20160.0 + u * (31.0 / 362880.0 + u * 691.0 / 79833600.0))));
    return (1.0 - tanc(0.5 * w)) / u;
}

double phi2_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return -(1.0 / 12.0 + u * (1.0 / 240.0 + u * (1.0 / 6048.0 + u * (1.0 / 172800.0 + u / 5322240.0))));
    const double s = sinc(0.5 * w);
    check_pole(s, "1/sinc(w/2)^2 near 2 k pi");
    return (1.0 - 1.0 / (s * s)) / u;
}

double phi2_inv_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return 1.0 / 12.0 + u * (-1.0 / 360.0 + u * (1.0 / 20160.0 + u * (-1.0 / 1814400.0 + u / 239500800.0)));
    const double s = sinc(0.5 * w);
    return (1.0 - s * s) / u;
}

double cot_defect(double w) {
    const double u = w * w;
    if (std::fabs(w) < kSeriesThreshold)
        return 1.0 / 12.0 + u * (1.0 / 720.0 + u * (1.0 / 30240.0 + u * (1.0 / 1209600.0 + u / 47900160.0)));
    const double s = sinc(0.5 * w);
    check_pole(s, "cot(w/2) near 2 k pi");
    return (1.0 - 0.5 * w * std::cos(0.5 * w) / std::sin(0.5 * w)) / u;
}

}  // namespace kernels

RodriguezCoeffs exp_neg_coeffs(double h, double b) {
    check_field(b);
    const double w = h * b;
    return {1.0, -h * sinc(w), h * h * kernels::cos_defect(w)};
}

RodriguezCoeffs psi_coeffs(double h, double b) {
    check_field(b);
    return {1.0, 0.0, h * h * kernels::psi_defect(h * b)};
}

RodriguezCoeffs phi1_coeffs(double h, double b) {
    check_field(b);
    return {1.0, 0.0, h * h * kernels::inv_sinc_defect(h * b)};
}

RodriguezCoeffs phi2_coeffs(double h, double b) {
    check_field(b);
    return {1.0, 0.0, h * h * kernels::phi2_defect(h * b)};
}

RodriguezCoeffs phi2_inv_coeffs(double h, double b) {
    check_field(b);
    return {1.0, 0.0, h * h * kernels::phi2_inv_defect(h * b)};
}

RodriguezCoeffs upsilon_coeffs(double h, double b) {
    check_field(b);
    return {0.0, h * kernels::inv_sinc_defect(h * b), 0.0};
}

RodriguezCoeffs varphi1_coeffs(double h, double b) {
    check_field(b);
    const double w = h * b;
    return {1.0, -h * kernels::cos_defect(w), h * h * kernels::sinc_defect(w)};
}

RodriguezCoeffs varphi1_inv_coeffs(double h, double b) {
    check_field(b);
    // 1/varphi1 is the Bernoulli generating function: its only odd term is -z/2.
    return {1.0, 0.5 * h, h * h * kernels::cot_defect(h * b)};
}

RodriguezCoeffs varphi2_coeffs(double h, double b) {
    check_field(b);
    const double w = h * b;
    return {1.0, -2.0 * h * kernels::sinc_defect(w), h * h * kernels::phi2_inv_defect(w)};
}

RodriguezCoeffs sinch_coeffs(double h, double b) {
    check_field(b);
    return {1.0, 0.0, h * h * kernels::sinc_defect(h * b)};
}

Vec3 rodriguez_apply(const RodriguezCoeffs& c, const Vec3& B, const Vec3& v) {
    const Vec3 Bv = cross(B, v);
    const Vec3 BBv = cross(B, Bv);
    return c.c0 * v + c.c1 * Bv + c.c2 * BBv;
}

Mat3 rodriguez_materialize(const RodriguezCoeffs& c, const Vec3& B) {
    const Mat3 hat = Mat3::hat(B);
    return Mat3::identity() * c.c0 + hat * c.c1 + (hat * hat) * c.c2;
}

Vec3 apply_exp_neg(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(exp_neg_coeffs(h, B.norm()), B, v);
}

Vec3 apply_psi(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(psi_coeffs(h, B.norm()), B, v);
}

Vec3 apply_phi1(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(phi1_coeffs(h, B.norm()), B, v);
}

Vec3 apply_phi2(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(phi2_coeffs(h, B.norm()), B, v);
}

Vec3 apply_upsilon(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(upsilon_coeffs(h, B.norm()), B, v);
}

Vec3 apply_varphi1(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(varphi1_coeffs(h, B.norm()), B, v);
}

Vec3 apply_varphi1_inv(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(varphi1_inv_coeffs(h, B.norm()), B, v);
}

Vec3 apply_varphi2(double h, const Vec3& B, const Vec3& v) {
    return rodriguez_apply(varphi2_coeffs(h, B.norm()), B, v);
}

}  // namespace borisfb
