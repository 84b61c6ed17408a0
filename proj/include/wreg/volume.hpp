#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "wreg/errors.hpp"

namespace wreg {

// Grid dimensions {D, H, W}; data is stored W-fastest (C order over D,H,W).
using Dims3 = std::array<int, 3>;
// Physical spacing in mm per voxel, {D, H, W} order.
using Spacing3 = std::array<double, 3>;

inline std::int64_t voxel_count(const Dims3& dims)
{
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
}

// 3D scalar grid of real intensities.
struct ScalarVolume {
    Dims3 dims{0, 0, 0};
    Spacing3 spacing{1.0, 1.0, 1.0};
    std::vector<double> data; // length D*H*W, W-fastest

    std::int64_t index(int d, int h, int w) const
    {
        return (static_cast<std::int64_t>(d) * dims[1] + h) * dims[2] + w;
    }
    double& at(int d, int h, int w) { return data[index(d, h, w)]; }
    double at(int d, int h, int w) const { return data[index(d, h, w)]; }
};

// 3-channel 3D grid of per-voxel displacements (or velocities), in voxel units.
// Channel 0 displaces along W (coordinate x), channel 1 along H (y), channel 2
// along D (z). Channels are stored as 3 contiguous scalar grids.
struct VectorField {
    Dims3 dims{0, 0, 0};
    Spacing3 spacing{1.0, 1.0, 1.0};
    std::vector<double> data; // length 3*D*H*W, channel-major

    std::int64_t channel_offset(int c) const { return c * voxel_count(dims); }
    double* channel(int c) { return data.data() + channel_offset(c); }
    const double* channel(int c) const { return data.data() + channel_offset(c); }
};

ScalarVolume make_volume(const Dims3& dims, double fill = 0.0);
VectorField make_field(const Dims3& dims, double fill = 0.0);

void check_finite(const ScalarVolume& vol, const char* what);
void check_finite(const VectorField& field, const char* what);

// Trilinear interpolation at continuous coordinate (x,y,z); x runs along the
// W axis, y along H, z along D. Coordinates outside [0, dim-1] are clamped to
// the border before interpolation. Non-finite coordinates raise SampleError.
double trilinear_sample(const ScalarVolume& vol, double x, double y, double z);

// Backward warp: out(x) = moving(x + flow(x)) with clamped trilinear sampling.
ScalarVolume warp(const ScalarVolume& moving, const VectorField& flow);

// d<upstream, warp(moving, flow)>/dflow. Samples clamped to the border
// contribute zero gradient along the clamped axis.
VectorField warp_backward(const ScalarVolume& moving, const VectorField& flow,
                          const ScalarVolume& upstream);

// d<upstream, warp(moving, flow)>/dmoving: scatters each upstream value onto
// the 8 interpolation corners of its sample location.
ScalarVolume warp_adjoint_moving(const VectorField& flow, const ScalarVolume& upstream);

// Channel-wise backward warp of a vector field: out_c(x) = field_c(x + flow(x)).
VectorField warp_field(const VectorField& field, const VectorField& flow);

// Forward differences u(x+e) - u(x) per channel and axis; the trailing face
// holds zeros. grids[channel*3 + axis], axis 0 = x (W), 1 = y (H), 2 = z (D).
struct SpatialGradient {
    Dims3 dims{0, 0, 0};
    std::array<std::vector<double>, 9> grids;
};
SpatialGradient spatial_gradient(const VectorField& field);

// Per-voxel det(I + du/dx), central differences in the interior and one-sided
// differences on the faces.
ScalarVolume jacobian_determinant(const VectorField& flow);

} // namespace wreg
