#include "wreg/wavelet.hpp"

#include <cmath>
#include <cstddef>

namespace wreg {

WaveletKind wavelet_from_string(const std::string& name)
{
    if (name == "haar")
        return WaveletKind::haar;
    if (name == "db2")
        return WaveletKind::db2;
    throw ConfigError("unknown wavelet kind: " + name);
}

const char* wavelet_to_string(WaveletKind kind)
{
    return kind == WaveletKind::haar ? "haar" : "db2";
}

FilterBank filter_bank(WaveletKind kind)
{
    FilterBank fb;
    fb.kind = kind;
    switch (kind) {
    case WaveletKind::haar: {
        const double s = 1.0 / std::sqrt(2.0);
        fb.low = {s, s};
        break;
    }
    case WaveletKind::db2: {
        const double r3 = std::sqrt(3.0);
        const double n = 4.0 * std::sqrt(2.0);
        fb.low = {(1.0 + r3) / n, (3.0 + r3) / n, (3.0 - r3) / n, (1.0 - r3) / n};
        break;
    }
    default:
        throw ConfigError("unknown wavelet kind");
    }
    const std::size_t len = fb.low.size();
    fb.high.resize(len);
    for (std::size_t k = 0; k < len; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        fb.high[k] = sign * fb.low[len - 1 - k];
    }
    return fb;
}

namespace detail {

namespace {

struct AxisIter {
    std::int64_t n;          // length along the filtered axis
    std::int64_t stride;     // element stride along the filtered axis
    std::int64_t lines;      // number of lines per channel
    std::vector<std::int64_t> line_base; // base offset of each line (per channel 0)
};

AxisIter make_axis_iter(const Dims3& dims, int axis)
{
    const std::int64_t strides[3] = {
        static_cast<std::int64_t>(dims[1]) * dims[2], dims[2], 1};
    AxisIter it;
    it.n = dims[axis];
    it.stride = strides[axis];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;
    it.lines = static_cast<std::int64_t>(dims[o1]) * dims[o2];
    it.line_base.reserve(static_cast<std::size_t>(it.lines));
    for (int i1 = 0; i1 < dims[o1]; ++i1)
        for (int i2 = 0; i2 < dims[o2]; ++i2)
            it.line_base.push_back(i1 * strides[o1] + i2 * strides[o2]);
    return it;
}

} // namespace

void analyze_axis(const std::vector<double>& in, const Dims3& dims, int channels,
                  int axis, const FilterBank& fb,
                  std::vector<double>& low, std::vector<double>& high,
                  Dims3& out_dims)
{
    const std::int64_t n = dims[axis];
    const std::int64_t half = n / 2;
    const int taps = static_cast<int>(fb.low.size());
    out_dims = dims;
    out_dims[axis] = static_cast<int>(half);

    const AxisIter src = make_axis_iter(dims, axis);
    const AxisIter dst = make_axis_iter(out_dims, axis);
    const std::int64_t vox_in = voxel_count(dims);
    const std::int64_t vox_out = voxel_count(out_dims);
    low.assign(static_cast<std::size_t>(channels * vox_out), 0.0);
    high.assign(static_cast<std::size_t>(channels * vox_out), 0.0);

    for (int c = 0; c < channels; ++c) {
        const double* pin = in.data() + c * vox_in;
        double* plo = low.data() + c * vox_out;
        double* phi = high.data() + c * vox_out;
        for (std::int64_t l = 0; l < src.lines; ++l) {
            const double* line = pin + src.line_base[static_cast<std::size_t>(l)];
            double* lo = plo + dst.line_base[static_cast<std::size_t>(l)];
            double* hi = phi + dst.line_base[static_cast<std::size_t>(l)];
            for (std::int64_t m = 0; m < half; ++m) {
                double accl = 0.0, acch = 0.0;
                for (int k = 0; k < taps; ++k) {
                    const std::int64_t j = (2 * m + k) % n;
                    const double v = line[j * src.stride];
                    accl += fb.low[static_cast<std::size_t>(k)] * v;
                    acch += fb.high[static_cast<std::size_t>(k)] * v;
                }
                lo[m * dst.stride] = accl;
                hi[m * dst.stride] = acch;
            }
        }
    }
}

void synthesize_axis(const std::vector<double>& low, const std::vector<double>& high,
                     const Dims3& out_dims, int channels, int axis,
                     const FilterBank& fb, std::vector<double>& out)
{
    const std::int64_t n = out_dims[axis];
    const std::int64_t half = n / 2;
    const int taps = static_cast<int>(fb.low.size());
    Dims3 in_dims = out_dims;
    in_dims[axis] = static_cast<int>(half);

    const AxisIter src = make_axis_iter(in_dims, axis);
    const AxisIter dst = make_axis_iter(out_dims, axis);
    const std::int64_t vox_in = voxel_count(in_dims);
    const std::int64_t vox_out = voxel_count(out_dims);
    out.assign(static_cast<std::size_t>(channels * vox_out), 0.0);

    for (int c = 0; c < channels; ++c) {
        const double* plo = low.data() + c * vox_in;
        const double* phi = high.data() + c * vox_in;
        double* pout = out.data() + c * vox_out;
        for (std::int64_t l = 0; l < src.lines; ++l) {
            const double* lo = plo + src.line_base[static_cast<std::size_t>(l)];
            const double* hi = phi + src.line_base[static_cast<std::size_t>(l)];
            double* line = pout + dst.line_base[static_cast<std::size_t>(l)];
            for (std::int64_t m = 0; m < half; ++m) {
                const double a = lo[m * src.stride];
                const double d = hi[m * src.stride];
                for (int k = 0; k < taps; ++k) {
                    const std::int64_t j = (2 * m + k) % n;
                    line[j * dst.stride] += fb.low[static_cast<std::size_t>(k)] * a
                                          + fb.high[static_cast<std::size_t>(k)] * d;
                }
            }
        }
    }
}

} // namespace detail

namespace {

void check_analyzable(const Dims3& dims, const FilterBank& fb)
{
    const int taps = static_cast<int>(fb.low.size());
    for (int a = 0; a < 3; ++a) {
        if (dims[a] % 2 != 0)
            throw ShapeError("dwt3: dimension " + std::to_string(dims[a]) + " is odd");
        if (dims[a] < taps)
            throw ShapeError("dwt3: dimension " + std::to_string(dims[a])
                             + " shorter than filter length " + std::to_string(taps));
    }
}

} // namespace

SubbandSet dwt3_grid(const std::vector<double>& data, const Dims3& dims, int channels,
                     const FilterBank& fb)
{
    check_analyzable(dims, fb);
    if (data.size() != static_cast<std::size_t>(channels * voxel_count(dims)))
        throw ShapeError("dwt3: data length does not match dims");

    // Split along H (bit 1), then W (bit 2), then D (bit 4).
    struct Partial {
        int code;
        std::vector<double> data;
    };
    std::vector<Partial> cur;
    cur.push_back({0, data});
    Dims3 cur_dims = dims;
    const int pass_axis[3] = {1, 2, 0};
    const int pass_bit[3] = {1, 2, 4};
    for (int p = 0; p < 3; ++p) {
        std::vector<Partial> next;
        Dims3 out_dims{};
        for (auto& part : cur) {
            std::vector<double> lo, hi;
            detail::analyze_axis(part.data, cur_dims, channels, pass_axis[p], fb, lo, hi,
                                 out_dims);
            next.push_back({part.code, std::move(lo)});
            next.push_back({part.code | pass_bit[p], std::move(hi)});
        }
        cur = std::move(next);
        cur_dims = out_dims;
    }

    SubbandSet out;
    out.dims = cur_dims;
    out.channels = channels;
    for (auto& part : cur)
        out.bands[static_cast<std::size_t>(part.code)] = std::move(part.data);
    return out;
}

SubbandSet dwt3(const ScalarVolume& vol, const FilterBank& fb)
{
    return dwt3_grid(vol.data, vol.dims, 1, fb);
}

SubbandSet dwt3(const VectorField& field, const FilterBank& fb)
{
    return dwt3_grid(field.data, field.dims, 3, fb);
}

std::vector<double> idwt3_grid(const SubbandSet& coeffs, const FilterBank& fb)
{
    const std::size_t band_size = static_cast<std::size_t>(coeffs.band_size());
    for (const auto& b : coeffs.bands)
        if (b.size() != band_size)
            throw ShapeError("idwt3: inconsistent sub-band dims");
    const Dims3 full{2 * coeffs.dims[0], 2 * coeffs.dims[1], 2 * coeffs.dims[2]};
    const int taps = static_cast<int>(fb.low.size());
    for (int a = 0; a < 3; ++a)
        if (full[a] < taps)
            throw ShapeError("idwt3: output dimension shorter than filter length");

    // Merge in the reverse order of the analysis passes: D, then W, then H.
    struct Partial {
        int code;
        std::vector<double> data;
    };
    std::vector<Partial> cur;
    for (int b = 0; b < 8; ++b)
        cur.push_back({b, coeffs.bands[static_cast<std::size_t>(b)]});
    Dims3 cur_dims = coeffs.dims;
    const int pass_axis[3] = {0, 2, 1};
    const int pass_bit[3] = {4, 2, 1};
    for (int p = 0; p < 3; ++p) {
        Dims3 out_dims = cur_dims;
        out_dims[pass_axis[p]] *= 2;
        std::vector<Partial> next;
        for (auto& part : cur) {
            if (part.code & pass_bit[p])
                continue; // handled together with its low-pass partner
            const int hi_code = part.code | pass_bit[p];
            const std::vector<double>* hi = nullptr;
            for (const auto& other : cur)
                if (other.code == hi_code)
                    hi = &other.data;
            std::vector<double> merged;
            detail::synthesize_axis(part.data, *hi, out_dims, coeffs.channels,
                                    pass_axis[p], fb, merged);
            next.push_back({part.code, std::move(merged)});
        }
        cur = std::move(next);
        cur_dims = out_dims;
    }
    return std::move(cur.front().data);
}

ScalarVolume idwt3(const SubbandSet& coeffs, const FilterBank& fb)
{
    if (coeffs.channels != 1)
        throw ShapeError("idwt3: scalar reconstruction requires 1 channel");
    ScalarVolume out;
    out.dims = {2 * coeffs.dims[0], 2 * coeffs.dims[1], 2 * coeffs.dims[2]};
    out.data = idwt3_grid(coeffs, fb);
    return out;
}

VectorField idwt3_field(const SubbandSet& coeffs, const FilterBank& fb)
{
    if (coeffs.channels != 3)
        throw ShapeError("idwt3: field reconstruction requires 3 channels");
    VectorField out;
    out.dims = {2 * coeffs.dims[0], 2 * coeffs.dims[1], 2 * coeffs.dims[2]};
    out.data = idwt3_grid(coeffs, fb);
    return out;
}

} // namespace wreg
