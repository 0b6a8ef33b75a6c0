#include "borisfb/series_oracle.hpp"

#include <cmath>
#include <cstddef>

#include "borisfb/error.hpp"

namespace borisfb::oracle {

namespace {

using Series = std::vector<double>;

Series exp_series(int n, double sign) {
    Series c(n, 0.0);
    double term = 1.0;
    for (int k = 0; k < n; ++k) {
        c[k] = term;
        term *= sign / static_cast<double>(k + 1);
    }
    return c;
}

// sinh(z)/z: 1/(2k+1)! at even orders.
Series sinch_series(int n) {
    Series c(n, 0.0);
    double inv_fact = 1.0;  // 1/(2k+1)!
    for (int k = 0; 2 * k < n; ++k) {
        c[2 * k] = inv_fact;
        inv_fact /= static_cast<double>(2 * k + 2) * static_cast<double>(2 * k + 3);
    }
    return c;
}

Series cosh_series(int n) {
    Series c(n, 0.0);
    double inv_fact = 1.0;  // 1/(2k)!
    for (int k = 0; 2 * k < n; ++k) {
        c[2 * k] = inv_fact;
        inv_fact /= static_cast<double>(2 * k + 1) * static_cast<double>(2 * k + 2);
    }
    return c;
}

Series mul(const Series& a, const Series& b) {
    const int n = static_cast<int>(a.size());
    Series c(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; i + j < n; ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

Series reciprocal(const Series& a) {
    const int n = static_cast<int>(a.size());
    Series r(n, 0.0);
    r[0] = 1.0 / a[0];
    for (int k = 1; k < n; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) acc += a[j] * r[k - j];
        r[k] = -acc / a[0];
    }
    return r;
}

Series half_argument(Series a) {
    double scale = 1.0;
    for (auto& c : a) {
        c *= scale;
        scale *= 0.5;
    }
    return a;
}

// (a - a[0]) / zeta
Series shift_down(const Series& a) {
    Series c(a.size(), 0.0);
    for (std::size_t k = 1; k < a.size(); ++k) c[k - 1] = a[k];
    return c;
}

}  // namespace

std::vector<double> taylor_coefficients(FilterFn f, int terms) {
    if (terms < 1) raise(errc::invalid_argument, "series oracle needs terms >= 1");
    const int n = terms;
    switch (f) {
        case FilterFn::exp_neg:
            return exp_series(n, -1.0);
        case FilterFn::sinch:
            return sinch_series(n);
        case FilterFn::psi:
            return mul(half_argument(sinch_series(n)), reciprocal(half_argument(cosh_series(n))));
        case FilterFn::phi1:
            return reciprocal(sinch_series(n));
        case FilterFn::phi2: {
            const Series s = half_argument(sinch_series(n));
            return reciprocal(mul(s, s));
        }
        case FilterFn::phi2_inv: {
            const Series s = half_argument(sinch_series(n));
            return mul(s, s);
        }
        case FilterFn::upsilon:
            return shift_down(reciprocal(sinch_series(n)));
        case FilterFn::varphi1:
            return shift_down(exp_series(n + 1, 1.0));
        case FilterFn::varphi1_inv:
            return reciprocal(shift_down(exp_series(n + 1, 1.0)));
        case FilterFn::varphi2: {
            Series c = exp_series(n + 2, 1.0);
            Series r(n, 0.0);
            for (int k = 0; k < n; ++k) r[k] = 2.0 * c[k + 2];
            return r;
        }
    }
    raise(errc::invalid_argument, "unknown filter function id");
}

Vec3 series_apply(FilterFn f, double h, const Vec3& B, const Vec3& v, int terms) {
    const std::vector<double> c = taylor_coefficients(f, terms);
    Vec3 acc = c[0] * v;
    Vec3 power = v;  // (h hat(B))^n v
    for (int k = 1; k < terms; ++k) {
        power = h * cross(B, power);
        acc += c[k] * power;
    }
    return acc;
}

int terms_for(FilterFn f, double w_max) {
    double radius = 0.0;  // 0 means entire
    switch (f) {
        case FilterFn::psi:
        case FilterFn::phi1:
        case FilterFn::upsilon:
            radius = M_PI;
            break;
        case FilterFn::phi2:
        case FilterFn::varphi1_inv:
            radius = 2.0 * M_PI;
            break;
        default:
            break;
    }
    if (radius == 0.0 || w_max < 0.5) return 40;
    const double r = (w_max * w_max) / (radius * radius);
    if (!(r < 0.995)) raise(errc::invalid_argument, "series oracle outside convergence radius");
    // Geometric tail: r^(k) below 1e-14, in zeta^2 orders.
    const int k = static_cast<int>(std::ceil(std::log(1e-14) / std::log(r)));
    return std::max(40, 2 * k + 4);
}

}  // namespace borisfb::oracle
