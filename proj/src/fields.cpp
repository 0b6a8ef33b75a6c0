#include "borisfb/fields.hpp"

#include <cmath>

#include "borisfb/error.hpp"
#include "borisfb/filters.hpp"

namespace borisfb {

namespace {

constexpr double kPotentialDegTol = 1e-12;  // on r^2 = x1^2 + x2^2

Vec3 paper_E(const Vec3& x) {
    const double r2 = x.x * x.x + x.y * x.y;
    if (r2 <= kPotentialDegTol)
        raise(errc::degenerate_field, "paper-sec8 potential singular on the x3-axis");
    const double r = std::sqrt(r2);
    const double inv_r3 = 1.0 / (r2 * r);
    return {x.x * inv_r3, x.y * inv_r3, 0.0};
}

}  // namespace

Vec3 eval_B(const FieldModel& model, const Vec3& x, double t) {
    return model.B0(model.epsilon * x) / model.epsilon + model.B1(x, t);
}

Vec3 eval_E(const FieldModel& model, const Vec3& x, double t) {
    return model.E(x, t);
}

FieldModel make_preset(const std::string& name, double epsilon) {
    if (!(epsilon > 0.0)) raise(errc::invalid_argument, "preset needs epsilon > 0");
    FieldModel m;
    m.name = name;
    m.epsilon = epsilon;
    if (name == "paper-sec8") {
        m.B0 = [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; };
        m.B1 = [](const Vec3& x, double) { return Vec3{-x.x, 0.0, x.z}; };
        m.E = [](const Vec3& x, double) { return paper_E(x); };
    } else if (name == "constant-B") {
        m.B0 = [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; };
        m.B1 = [](const Vec3&, double) { return Vec3{}; };
        m.E = [](const Vec3&, double) { return Vec3{}; };
    } else if (name == "constant-BE") {
        m.B0 = [](const Vec3&) { return Vec3{0.0, 0.0, 1.0}; };
        m.B1 = [](const Vec3&, double) { return Vec3{}; };
        m.E = [](const Vec3&, double) { return Vec3{0.3, -0.2, 0.4}; };
    } else {
        raise(errc::invalid_argument, "unknown field preset '" + name + "'");
    }
    return m;
}

Vec3 guiding_center(const Vec3& x, const Vec3& v, const Vec3& B) {
    const double b2 = B.norm2();
    if (!(b2 > 0.0)) raise(errc::zero_field, "guiding center needs |B| > 0");
    return x + cross(v, B) / b2;
}

Vec3 eval_point(const Vec3& x, const Vec3& x_gc, double hb, ThetaChoice variant) {
    if (variant == ThetaChoice::one) return x;
    const double th = theta(hb);
    return th * x + (1.0 - th) * x_gc;
}

std::pair<Vec3, Vec3> split_velocity(const Vec3& v, const Vec3& B) {
    const double b2 = B.norm2();
    if (!(b2 > 0.0)) raise(errc::zero_field, "velocity split needs |B| > 0");
    const Vec3 v_par = B * (dot(B, v) / b2);
    return {v_par, v - v_par};
}

ResonanceStatus check_resonance(const ResonanceGuard& guard, double h, double b) {
    ResonanceStatus st;
    for (int k = 1; k <= guard.k_max; ++k) {
        const double s = std::fabs(sinc(0.5 * k * h * b));
        if (s < st.min_sinc) st.min_sinc = s;
        if (st.ok && s < guard.c_min) {
            st.ok = false;
            st.k = k;
            st.value = s;
        }
    }
    return st;
}

}  // namespace borisfb
