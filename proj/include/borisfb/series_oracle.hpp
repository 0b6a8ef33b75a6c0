#pragma once

#include <vector>

#include "borisfb/vec3.hpp"

namespace borisfb::oracle {

/// Scalar functions whose matrix action the truncated-series oracle can
/// reproduce. Taylor coefficients are generated by power-series arithmetic
/// (products, reciprocals, argument halving), deliberately independent of
/// the closed-form kernels in filters.cpp.
enum class FilterFn {
    exp_neg,      // e^{-zeta}
    psi,          // tanch(zeta/2)
    phi1,         // 1/sinch(zeta)
    phi2,         // 1/sinch(zeta/2)^2
    phi2_inv,     // sinch(zeta/2)^2
    upsilon,      // (1/sinch(zeta) - 1)/zeta
    varphi1,      // (e^zeta - 1)/zeta
    varphi1_inv,  // zeta/(e^zeta - 1)
    varphi2,      // (e^zeta - 1 - zeta)/(zeta^2/2)
    sinch,        // sinh(zeta)/zeta
};

/// Taylor coefficients of f at 0, truncated to `terms` entries.
std::vector<double> taylor_coefficients(FilterFn f, int terms);

/// Sum_{n < terms} c_n (h hat(B))^n v, evaluated with repeated cross
/// products only. Brute-force ground truth for the Rodriguez-form filters.
Vec3 series_apply(FilterFn f, double h, const Vec3& B, const Vec3& v, int terms);

/// Number of terms that bounds the truncation error of `f` below ~1e-13
/// for |h||B| <= w_max (functions with finite convergence radius need far
/// more than entire ones).
int terms_for(FilterFn f, double w_max);

}  // namespace borisfb::oracle
