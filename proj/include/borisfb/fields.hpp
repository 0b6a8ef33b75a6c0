#pragma once

#include <functional>
#include <string>
#include <utility>

#include "borisfb/vec3.hpp"

namespace borisfb {

/// Electromagnetic field model under maximal ordering:
///   B(x,t) = (1/epsilon) B0(epsilon x) + B1(x,t).
/// B0 and B1 stay separate so the scale split is an explicit input
/// contract and epsilon can be swept without redefining fields.
struct FieldModel {
    std::string name = "custom";
    double epsilon = 1.0;
    std::function<Vec3(const Vec3&)> B0;          // strong-field shape, argument is epsilon*x
    std::function<Vec3(const Vec3&, double)> B1;  // bounded perturbation
    std::function<Vec3(const Vec3&, double)> E;   // electric field
};

Vec3 eval_B(const FieldModel& model, const Vec3& x, double t);
Vec3 eval_E(const FieldModel& model, const Vec3& x, double t);

/// Named presets addressable from the CLI:
///  - "paper-sec8":  B = (1/eps)(0,0,1) + (-x1, 0, x3), E = -grad 1/sqrt(x1^2+x2^2)
///  - "constant-B":  B = (1/eps)(0,0,1), E = 0
///  - "constant-BE": B = (1/eps)(0,0,1), E = (0.3, -0.2, 0.4)
/// Throws InvalidArgument for unknown names. Presets satisfy |B0(0)| >= 1.
FieldModel make_preset(const std::string& name, double epsilon);

/// Guiding center x + (v x B)/|B|^2. Throws ZeroField.
Vec3 guiding_center(const Vec3& x, const Vec3& v, const Vec3& B);

enum class ThetaChoice { one, optimal };

/// Field-evaluation point on the line through x and the guiding center:
/// theta x + (1-theta) x_gc with theta = 1 or theta(h|B|).
Vec3 eval_point(const Vec3& x, const Vec3& x_gc, double hb, ThetaChoice variant);

/// Splits v into components parallel and perpendicular to B. Throws ZeroField.
std::pair<Vec3, Vec3> split_velocity(const Vec3& v, const Vec3& B);

/// Non-resonance guard: |sinc(k h b / 2)| >= c_min for k = 1..k_max.
struct ResonanceGuard {
    double c_min = 0.01;
    int k_max = 3;
};

struct ResonanceStatus {
    bool ok = true;
    int k = 0;            // first offending harmonic, 0 if ok
    double value = 1.0;   // |sinc| at the offending harmonic
    double min_sinc = 1.0;
};

ResonanceStatus check_resonance(const ResonanceGuard& guard, double h, double b);

}  // namespace borisfb
