#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "wreg/pyramid.hpp"
#include "wreg/similarity.hpp"
#include "wreg/volume.hpp"

namespace wreg {

// Adam moments for one parameter group.  t counts completed steps; m and v
// are sized at init and must match the gradient length on every step.
struct AdamState {
    double lr = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<double> m, v;
};

AdamState adam_init(std::size_t n, double lr);

// One bias-corrected update: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad);

// A parameter group is a list of [begin, end) ranges into the flat pyramid
// vector; the level-2 and level-3 groups are non-contiguous because gates
// live at the tail.
struct ParamGroup {
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    std::int64_t size() const;
};

// Scoped update: gathers the group's slice of params and grad, runs one Adam
// step on it, and scatters the result back.
void adam_step_group(AdamState& state, const ParamGroup& group,
                     std::vector<double>& params, const std::vector<double>& grad);

struct IterationInfo {
    int stage = 0;     // 1-based
    int iteration = 0; // global, 0-based
    double value = 0.0;
    double similarity = 0.0;
    double regularizer = 0.0;
};

struct RegistrationConfig {
    LossConfig loss;
    bool diffeomorphic = false;
    WaveletKind wavelet = WaveletKind::haar;
    // Defaults tuned on the synthetic suite: orthonormal coefficients need
    // roughly gain^3 the voxel amplitude at the coarsest level, and Adam
    // moves at most ~lr per step, so small rates cannot reach a 6 voxel
    // field in a few hundred iterations.
    std::array<int, 3> stage_iterations{200, 150, 150};
    double lr = 0.3;
    int sq_steps = 7;
    std::function<void(const IterationInfo&)> on_iteration; // optional
};

struct RegistrationDiagnostics {
    double final_similarity = 0.0;
    double final_smoothness = 0.0;
    double neg_jac_percent = 0.0;
};

struct RegistrationResult {
    CoefficientPyramid pyramid;
    VectorField flow; // displacement actually applied (integrated when diffeomorphic)
    std::vector<double> loss_history; // loss entering each iteration
    std::array<int, 3> stage_iterations{0, 0, 0};
    RegistrationDiagnostics diagnostics;
};

// Coarse-to-fine fit of the coefficient pyramid.  Stage 1 optimizes the
// level-1 bands; stages 2 and 3 add the level-2 and level-3 residuals and
// gates while keeping everything already active in play.  Each group gets
// its own Adam moments, created the first time its stage runs.  A non-finite
// loss aborts with DivergenceError naming the iteration.
RegistrationResult register_volumes(const ScalarVolume& moving,
                                    const ScalarVolume& fixed,
                                    const RegistrationConfig& config);

} // namespace wreg
