#pragma once

#include <array>
#include <string>
#include <vector>

#include "wreg/volume.hpp"

namespace wreg {

enum class WaveletKind { haar, db2 };

WaveletKind wavelet_from_string(const std::string& name);
const char* wavelet_to_string(WaveletKind kind);

// Paired orthonormal analysis filters; the high-pass taps follow the
// quadrature-mirror relation high[k] = (-1)^k * low[len-1-k].
struct FilterBank {
    WaveletKind kind;
    std::vector<double> low;
    std::vector<double> high;
};

FilterBank filter_bank(WaveletKind kind);

// Sub-band labels follow the letter order (D filter, W filter, H filter).
// Band index bits: 4 = high-pass along D, 2 = along W, 1 = along H, so the
// enumeration order is lll, llh, lhl, lhh, hll, hlh, hhl, hhh.
inline constexpr std::array<const char*, 8> kSubbandNames = {
    "lll", "llh", "lhl", "lhh", "hll", "hlh", "hhl", "hhh"};

// Eight half-resolution coefficient grids from one analysis level.
struct SubbandSet {
    Dims3 dims{0, 0, 0}; // per-band dims, half the source per axis
    int channels = 1;
    std::array<std::vector<double>, 8> bands; // each channels*D*H*W, channel-major

    std::int64_t band_size() const { return channels * voxel_count(dims); }
};

// Separable 3D analysis: three 1D filter-and-downsample passes with periodic
// extension. Source dims must be even and >= the filter length per axis.
SubbandSet dwt3_grid(const std::vector<double>& data, const Dims3& dims, int channels,
                     const FilterBank& fb);
SubbandSet dwt3(const ScalarVolume& vol, const FilterBank& fb);
SubbandSet dwt3(const VectorField& field, const FilterBank& fb);

// Exact inverse of dwt3_grid (synthesis transpose of the analysis passes).
std::vector<double> idwt3_grid(const SubbandSet& coeffs, const FilterBank& fb);
ScalarVolume idwt3(const SubbandSet& coeffs, const FilterBank& fb);
VectorField idwt3_field(const SubbandSet& coeffs, const FilterBank& fb);

namespace detail {

// One analysis pass along `axis` (dims index: 0 = D, 1 = H, 2 = W):
// filter with periodic extension, downsample by 2.
void analyze_axis(const std::vector<double>& in, const Dims3& dims, int channels,
                  int axis, const FilterBank& fb,
                  std::vector<double>& low, std::vector<double>& high,
                  Dims3& out_dims);

// Transposed pass: upsample-by-2 synthesis along `axis`. `out_dims` is the
// result shape (axis size doubled relative to the inputs).
void synthesize_axis(const std::vector<double>& low, const std::vector<double>& high,
                     const Dims3& out_dims, int channels, int axis,
                     const FilterBank& fb, std::vector<double>& out);

} // namespace detail

} // namespace wreg
