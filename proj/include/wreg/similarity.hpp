#pragma once

#include <string>

#include "wreg/volume.hpp"

namespace wreg {

enum class LossKind { ncc, mse };

LossKind loss_from_string(const std::string& name);
const char* loss_to_string(LossKind kind);

struct LossConfig {
    LossKind kind = LossKind::ncc;
    double lambda = 2.0;
    int ncc_window = 9;
};

// Mean squared difference; grad_a, when given, receives d(value)/da.
double mse(const ScalarVolume& a, const ScalarVolume& b, ScalarVolume* grad_a = nullptr);

// Mean over all voxels of the squared local correlation between i and j,
// computed over a cubic window (odd side, at least 3, no larger than the
// smallest dimension).  Windows hanging over the border read zeros and the
// sample count stays window^3 throughout.  grad_j, when given, receives
// d(value)/dj.  Identical nonconstant volumes score close to 1.
double local_ncc(const ScalarVolume& i, const ScalarVolume& j, int window,
                 ScalarVolume* grad_j = nullptr);

// The per-voxel squared correlation map behind local_ncc.
ScalarVolume local_ncc_map(const ScalarVolume& i, const ScalarVolume& j, int window);

// Mean squared forward difference over all channels and axes, normalized by
// 3 * voxel count.  grad, when given, receives d(value)/dfield.
double smoothness(const VectorField& field, VectorField* grad = nullptr);

struct TotalLoss {
    double value = 0.0;       // similarity + lambda * regularizer
    double similarity = 0.0;  // -ncc or mse
    double regularizer = 0.0; // smoothness of the parameter field
    VectorField grad;         // d(value)/dfield
};

// Full objective for one field: warps moving by the field (integrating it
// first when diffeomorphic is set), measures similarity against fixed, and
// regularizes the field itself.  The gradient is exact, including the pull
// back through the integration.
TotalLoss total_loss(const ScalarVolume& moving, const ScalarVolume& fixed,
                     const VectorField& field, const LossConfig& config,
                     bool diffeomorphic, int sq_steps = 7);

} // namespace wreg
