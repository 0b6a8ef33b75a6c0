#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "borisfb/fields.hpp"
#include "borisfb/vec3.hpp"

namespace borisfb {

enum class Variant { StandardBoris, FilteredExplicit, FilteredImplicit, TwoPoint };
enum class GuardPolicy { Flag, Reject };

std::string variant_name(Variant v);       // boris / exp-a / imp-a / twop-a
Variant parse_variant(const std::string&);

struct MethodConfig {
    Variant variant = Variant::FilteredImplicit;
    int fp_max_iters = 2;    // x-bar / guiding-center fixed-point sweeps
    double fp_tol = 1e-13;   // relative displacement tolerance
    ResonanceGuard guard{};
    GuardPolicy guard_policy = GuardPolicy::Flag;
};

/// One grid node of a staggered trajectory. Time is always recomputed as
/// n*h, never accumulated. The step taken *from* this node fills in the
/// reconstructed node velocity and the per-step diagnostics.
struct ParticleState {
    long n = 0;
    double t = 0.0;
    Vec3 x;       // x^n
    Vec3 v_half;  // v^{n-1/2}
    Vec3 v_node;  // v^n, reconstructed
    bool v_node_valid = true;

    int fp_iters = 0;
    double fp_residual = 0.0;
    bool resonant = false;
    int resonant_k = 0;
    double min_sinc = 1.0;
    Vec3 field_point;  // converged field-evaluation point of the step

    void resonance_record(const ResonanceStatus& st) {
        resonant = !st.ok;
        resonant_k = st.k;
        min_sinc = st.min_sinc;
    }
};

struct StepResult {
    ParticleState next;  // (x^{n+1}, v^{n+1/2}); its own v_node is not yet known
    Vec3 v_node;         // v^n
    bool v_node_valid = true;
    int fp_iters = 0;
    double fp_residual = 0.0;
    ResonanceStatus resonance{};
    Vec3 field_point;
};

StepResult standard_boris_step(const ParticleState&, const FieldModel&, double h);
StepResult filtered_step(const ParticleState&, const FieldModel&, const MethodConfig&, double h);
StepResult two_point_step(const ParticleState&, const FieldModel&, const MethodConfig&, double h);
StepResult step(const ParticleState&, const FieldModel&, const MethodConfig&, double h);

/// Reconstructs v^n from the central difference and the electric-field
/// correction; B_bar is the field at the step's evaluation point (equal to
/// B_n for the explicit and two-point methods).
Vec3 node_velocity(const Vec3& x_prev, const Vec3& x_next, const Vec3& B_bar,
                   const Vec3& B_n, const Vec3& E_n, double h);

/// Staggered starting value v^{sign/2} at t = 0 from (x0, v0); sign = +1
/// gives v^{1/2}, sign = -1 gives v^{-1/2}. All variants use the filtered
/// start (standard Boris included, so comparisons isolate the steps).
Vec3 starting_velocity(const Vec3& x0, const Vec3& v0, const FieldModel&,
                       const MethodConfig&, double h, int sign = +1);

struct OneStepResult {
    Vec3 x;
    Vec3 v;
    int fp_iters = 0;
    double fp_residual = 0.0;
};

/// Node-to-node map (x^n, v^n) -> (x^{n+1}, v^{n+1}); h may be negative,
/// which yields the adjoint step (time symmetry).
OneStepResult one_step_map(const Vec3& x, const Vec3& v, double t, const FieldModel&,
                           const MethodConfig&, double h);

struct Trajectory {
    MethodConfig config;
    std::string preset;
    double epsilon = 0.0;
    double h = 0.0;
    long n_steps = 0;
    std::string start_mode = "filtered-start";
    std::vector<ParticleState> states;  // n = 0..n_steps

    bool any_resonant() const {
        for (const auto& s : states)
            if (s.resonant) return true;
        return false;
    }
    double min_sinc() const {
        double m = 1.0;
        for (const auto& s : states) m = std::min(m, s.min_sinc);
        return m;
    }
};

/// Runs round(t_end/h) steps from (x0, v0); deterministic, records states
/// and per-step flags. Errors from a step are rethrown with the step index.
Trajectory run_trajectory(const Vec3& x0, const Vec3& v0, const FieldModel&,
                          const MethodConfig&, double h, double t_end);

}  // namespace borisfb
