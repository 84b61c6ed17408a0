#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wreg/volume.hpp"
#include "wreg/wavelet.hpp"

namespace wreg {

// Multi-resolution wavelet coefficients of a 3-channel displacement (or
// velocity) field.  Level 1 holds a complete 8-band set at full/8; levels 2
// and 3 hold only the seven detail bands (codes 1..7) at full/4 and full/2.
// Each detail band at levels 2/3 carries a pair of scalar gates (a, b) that
// blend the upsampled coarser band with the stored residual:
//   band = a * upsample(coarser) + b * residual
struct CoefficientPyramid {
    WaveletKind wavelet = WaveletKind::haar;
    Dims3 full_dims{0, 0, 0};
    SubbandSet phi1; // 3 channels, band dims = full/8
    std::array<std::vector<double>, 7> res2; // detail residuals, full/4, band code = index+1
    std::array<std::vector<double>, 7> res3; // detail residuals, full/2
    std::array<std::array<double, 2>, 7> gates2{}; // {a, b} per detail band
    std::array<std::array<double, 2>, 7> gates3{};

    Dims3 level1_dims() const
    {
        return {full_dims[0] / 8, full_dims[1] / 8, full_dims[2] / 8};
    }
    Dims3 level2_dims() const
    {
        return {full_dims[0] / 4, full_dims[1] / 4, full_dims[2] / 4};
    }
    Dims3 level3_dims() const
    {
        return {full_dims[0] / 2, full_dims[1] / 2, full_dims[2] / 2};
    }
};

// Zero coefficients, gates at (1, 1).  Dims must be positive multiples of 8
// and large enough that every reconstruction stage satisfies the filter
// length of the chosen wavelet.
CoefficientPyramid init_pyramid(const Dims3& dims, WaveletKind kind);

std::int64_t pyramid_param_count(const CoefficientPyramid& pyr);

// Offsets of each parameter group inside the flat vector.  Order:
// phi1 bands 0..7 | res2 bands 1..7 | res3 bands 1..7 | gates2 | gates3.
struct ParamLayout {
    std::int64_t phi1_begin = 0, phi1_end = 0;
    std::int64_t res2_begin = 0, res2_end = 0;
    std::int64_t res3_begin = 0, res3_end = 0;
    std::int64_t gates2_begin = 0, gates2_end = 0;
    std::int64_t gates3_begin = 0, gates3_end = 0;
    std::int64_t total = 0;
};
ParamLayout pyramid_layout(const CoefficientPyramid& pyr);

std::vector<double> pyramid_flatten(const CoefficientPyramid& pyr);
void pyramid_unflatten(const std::vector<double>& flat, CoefficientPyramid& pyr);

// Trilinear upsampling by an integral factor with corner alignment: output
// sample i maps to input coordinate i * (n_in - 1) / (n_out - 1) along each
// axis (coordinate 0 when an axis has a single sample).  Only factor 2 is
// supported; anything else throws ConfigError.
std::vector<double> upsample_grid(const std::vector<double>& in, const Dims3& in_dims,
                                  int channels, int factor, Dims3& out_dims);

// Transpose of upsample_grid: scatters an upstream gradient at the fine grid
// back onto the coarse grid.
std::vector<double> upsample_adjoint_grid(const std::vector<double>& fine,
                                          const Dims3& in_dims, int channels,
                                          int factor);

// band = a * up + b * res, elementwise over one detail band.
std::vector<double> refine_subband(const std::vector<double>& up,
                                   const std::vector<double>& res, double a, double b);

// Chained inverse transforms: level-1 bands reconstruct the coarse low-pass,
// which joins the gated level-2 details, and so on up to the full grid.
VectorField reconstruct_flow(const CoefficientPyramid& pyr);

// Pulls a gradient with respect to the reconstructed field back through the
// chain.  The result reuses the pyramid layout: coefficient slots hold
// coefficient gradients and gate slots hold gate gradients.
CoefficientPyramid flow_gradient_to_coeffs(const CoefficientPyramid& pyr,
                                           const VectorField& grad_flow);

} // namespace wreg
