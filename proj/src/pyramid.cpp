#include "wreg/pyramid.hpp"

#include <string>

#include "wreg/errors.hpp"

namespace wreg {

namespace {

struct AxisMap {
    std::vector<int> i0, i1;
    std::vector<double> f;
};

// Corner-aligned source coordinates for one upsampled axis.
AxisMap axis_map(int n_in, int n_out)
{
    AxisMap m;
    m.i0.resize(static_cast<std::size_t>(n_out));
    m.i1.resize(static_cast<std::size_t>(n_out));
    m.f.resize(static_cast<std::size_t>(n_out));
    const double scale = n_out > 1 ? static_cast<double>(n_in - 1) / (n_out - 1) : 0.0;
    for (int o = 0; o < n_out; ++o) {
        const double src = o * scale;
        int lo = static_cast<int>(src);
        if (lo > n_in - 1)
            lo = n_in - 1;
        m.i0[static_cast<std::size_t>(o)] = lo;
        m.i1[static_cast<std::size_t>(o)] = lo + 1 < n_in ? lo + 1 : n_in - 1;
        m.f[static_cast<std::size_t>(o)] = src - lo;
    }
    return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size())
        throw ShapeError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

void check_factor(int factor)
{
    if (factor != 2)
        throw ConfigError("upsample factor must be 2, got " + std::to_string(factor));
}

} // namespace

CoefficientPyramid init_pyramid(const Dims3& dims, WaveletKind kind)
{
    const FilterBank fb = filter_bank(kind);
    const int taps = static_cast<int>(fb.low.size());
    for (int a = 0; a < 3; ++a) {
        if (dims[a] <= 0 || dims[a] % 8 != 0)
            throw ShapeError("pyramid dims must be positive multiples of 8, got "
                             + std::to_string(dims[a]));
        if (dims[a] / 4 < taps)
            throw ShapeError("dimension " + std::to_string(dims[a])
                             + " too small for a 3-level " + wavelet_to_string(kind)
                             + " pyramid");
    }

    CoefficientPyramid pyr;
    pyr.wavelet = kind;
    pyr.full_dims = dims;
    pyr.phi1.dims = pyr.level1_dims();
    pyr.phi1.channels = 3;
    const std::size_t n1 = static_cast<std::size_t>(pyr.phi1.band_size());
    for (auto& b : pyr.phi1.bands)
        b.assign(n1, 0.0);
    const std::size_t n2 = static_cast<std::size_t>(3 * voxel_count(pyr.level2_dims()));
    const std::size_t n3 = static_cast<std::size_t>(3 * voxel_count(pyr.level3_dims()));
    for (int b = 0; b < 7; ++b) {
        pyr.res2[static_cast<std::size_t>(b)].assign(n2, 0.0);
        pyr.res3[static_cast<std::size_t>(b)].assign(n3, 0.0);
        pyr.gates2[static_cast<std::size_t>(b)] = {1.0, 1.0};
        pyr.gates3[static_cast<std::size_t>(b)] = {1.0, 1.0};
    }
    return pyr;
}

std::int64_t pyramid_param_count(const CoefficientPyramid& pyr)
{
    const std::int64_t n1 = 3 * voxel_count(pyr.level1_dims());
    const std::int64_t n2 = 3 * voxel_count(pyr.level2_dims());
    const std::int64_t n3 = 3 * voxel_count(pyr.level3_dims());
    return 8 * n1 + 7 * n2 + 7 * n3 + 28;
}

ParamLayout pyramid_layout(const CoefficientPyramid& pyr)
{
    const std::int64_t n1 = 3 * voxel_count(pyr.level1_dims());
    const std::int64_t n2 = 3 * voxel_count(pyr.level2_dims());
    const std::int64_t n3 = 3 * voxel_count(pyr.level3_dims());
    ParamLayout lay;
    lay.phi1_begin = 0;
    lay.phi1_end = 8 * n1;
    lay.res2_begin = lay.phi1_end;
    lay.res2_end = lay.res2_begin + 7 * n2;
    lay.res3_begin = lay.res2_end;
    lay.res3_end = lay.res3_begin + 7 * n3;
    lay.gates2_begin = lay.res3_end;
    lay.gates2_end = lay.gates2_begin + 14;
    lay.gates3_begin = lay.gates2_end;
    lay.gates3_end = lay.gates3_begin + 14;
    lay.total = lay.gates3_end;
    return lay;
}

std::vector<double> pyramid_flatten(const CoefficientPyramid& pyr)
{
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(pyramid_param_count(pyr)));
    for (const auto& b : pyr.phi1.bands)
        flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& b : pyr.res2)
        flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& b : pyr.res3)
        flat.insert(flat.end(), b.begin(), b.end());
    for (const auto& g : pyr.gates2) {
        flat.push_back(g[0]);
        flat.push_back(g[1]);
    }
    for (const auto& g : pyr.gates3) {
        flat.push_back(g[0]);
        flat.push_back(g[1]);
    }
    return flat;
}

void pyramid_unflatten(const std::vector<double>& flat, CoefficientPyramid& pyr)
{
    if (flat.size() != static_cast<std::size_t>(pyramid_param_count(pyr)))
        throw ShapeError("unflatten: expected " + std::to_string(pyramid_param_count(pyr))
                         + " parameters, got " + std::to_string(flat.size()));
    std::size_t p = 0;
    for (auto& b : pyr.phi1.bands) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(p),
                  flat.begin() + static_cast<std::ptrdiff_t>(p + b.size()), b.begin());
        p += b.size();
    }
    for (auto& b : pyr.res2) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(p),
                  flat.begin() + static_cast<std::ptrdiff_t>(p + b.size()), b.begin());
        p += b.size();
    }
    for (auto& b : pyr.res3) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(p),
                  flat.begin() + static_cast<std::ptrdiff_t>(p + b.size()), b.begin());
        p += b.size();
    }
    for (auto& g : pyr.gates2) {
        g[0] = flat[p++];
        g[1] = flat[p++];
    }
    for (auto& g : pyr.gates3) {
        g[0] = flat[p++];
        g[1] = flat[p++];
    }
}

std::vector<double> upsample_grid(const std::vector<double>& in, const Dims3& in_dims,
                                  int channels, int factor, Dims3& out_dims)
{
    check_factor(factor);
    const Dims3 src_dims = in_dims; // callers may alias out_dims with in_dims
    const std::int64_t vox_in = voxel_count(src_dims);
    if (in.size() != static_cast<std::size_t>(channels * vox_in))
        throw ShapeError("upsample: data length does not match dims");
    out_dims = {src_dims[0] * factor, src_dims[1] * factor, src_dims[2] * factor};
    const std::int64_t vox_out = voxel_count(out_dims);

    const AxisMap md = axis_map(src_dims[0], out_dims[0]);
    const AxisMap mh = axis_map(src_dims[1], out_dims[1]);
    const AxisMap mw = axis_map(src_dims[2], out_dims[2]);

    std::vector<double> out(static_cast<std::size_t>(channels * vox_out));
    const std::int64_t sH = src_dims[2];
    const std::int64_t sD = static_cast<std::int64_t>(src_dims[1]) * src_dims[2];
    std::size_t o = 0;
    for (int c = 0; c < channels; ++c) {
        const double* src = in.data() + c * vox_in;
        for (int d = 0; d < out_dims[0]; ++d) {
            const std::int64_t d0 = md.i0[static_cast<std::size_t>(d)] * sD;
            const std::int64_t d1 = md.i1[static_cast<std::size_t>(d)] * sD;
            const double fd = md.f[static_cast<std::size_t>(d)];
            for (int h = 0; h < out_dims[1]; ++h) {
                const std::int64_t h0 = mh.i0[static_cast<std::size_t>(h)] * sH;
                const std::int64_t h1 = mh.i1[static_cast<std::size_t>(h)] * sH;
                const double fh = mh.f[static_cast<std::size_t>(h)];
                for (int w = 0; w < out_dims[2]; ++w) {
                    const std::int64_t w0 = mw.i0[static_cast<std::size_t>(w)];
                    const std::int64_t w1 = mw.i1[static_cast<std::size_t>(w)];
                    const double fw = mw.f[static_cast<std::size_t>(w)];
                    const double c00 = src[d0 + h0 + w0] * (1 - fw) + src[d0 + h0 + w1] * fw;
                    const double c01 = src[d0 + h1 + w0] * (1 - fw) + src[d0 + h1 + w1] * fw;
                    const double c10 = src[d1 + h0 + w0] * (1 - fw) + src[d1 + h0 + w1] * fw;
                    const double c11 = src[d1 + h1 + w0] * (1 - fw) + src[d1 + h1 + w1] * fw;
                    const double c0 = c00 * (1 - fh) + c01 * fh;
                    const double c1 = c10 * (1 - fh) + c11 * fh;
                    out[o++] = c0 * (1 - fd) + c1 * fd;
                }
            }
        }
    }
    return out;
}

std::vector<double> upsample_adjoint_grid(const std::vector<double>& fine,
                                          const Dims3& in_dims, int channels, int factor)
{
    check_factor(factor);
    const Dims3 out_dims{in_dims[0] * factor, in_dims[1] * factor, in_dims[2] * factor};
    const std::int64_t vox_in = voxel_count(in_dims);
    const std::int64_t vox_out = voxel_count(out_dims);
    if (fine.size() != static_cast<std::size_t>(channels * vox_out))
        throw ShapeError("upsample adjoint: data length does not match dims");

    const AxisMap md = axis_map(in_dims[0], out_dims[0]);
    const AxisMap mh = axis_map(in_dims[1], out_dims[1]);
    const AxisMap mw = axis_map(in_dims[2], out_dims[2]);

    std::vector<double> coarse(static_cast<std::size_t>(channels * vox_in), 0.0);
    const std::int64_t sH = in_dims[2];
    const std::int64_t sD = static_cast<std::int64_t>(in_dims[1]) * in_dims[2];
    std::size_t o = 0;
    for (int c = 0; c < channels; ++c) {
        double* dst = coarse.data() + c * vox_in;
        for (int d = 0; d < out_dims[0]; ++d) {
            const std::int64_t d0 = md.i0[static_cast<std::size_t>(d)] * sD;
            const std::int64_t d1 = md.i1[static_cast<std::size_t>(d)] * sD;
            const double fd = md.f[static_cast<std::size_t>(d)];
            for (int h = 0; h < out_dims[1]; ++h) {
                const std::int64_t h0 = mh.i0[static_cast<std::size_t>(h)] * sH;
                const std::int64_t h1 = mh.i1[static_cast<std::size_t>(h)] * sH;
                const double fh = mh.f[static_cast<std::size_t>(h)];
                for (int w = 0; w < out_dims[2]; ++w) {
                    const std::int64_t w0 = mw.i0[static_cast<std::size_t>(w)];
                    const std::int64_t w1 = mw.i1[static_cast<std::size_t>(w)];
                    const double fw = mw.f[static_cast<std::size_t>(w)];
                    const double g = fine[o++];
                    dst[d0 + h0 + w0] += g * (1 - fd) * (1 - fh) * (1 - fw);
                    dst[d0 + h0 + w1] += g * (1 - fd) * (1 - fh) * fw;
                    dst[d0 + h1 + w0] += g * (1 - fd) * fh * (1 - fw);
                    dst[d0 + h1 + w1] += g * (1 - fd) * fh * fw;
                    dst[d1 + h0 + w0] += g * fd * (1 - fh) * (1 - fw);
                    dst[d1 + h0 + w1] += g * fd * (1 - fh) * fw;
                    dst[d1 + h1 + w0] += g * fd * fh * (1 - fw);
                    dst[d1 + h1 + w1] += g * fd * fh * fw;
                }
            }
        }
    }
    return coarse;
}

std::vector<double> refine_subband(const std::vector<double>& up,
                                   const std::vector<double>& res, double a, double b)
{
    if (up.size() != res.size())
        throw ShapeError("refine: band length mismatch");
    std::vector<double> out(up.size());
    for (std::size_t i = 0; i < up.size(); ++i)
        out[i] = a * up[i] + b * res[i];
    return out;
}

namespace {

// Forward pass intermediates shared by reconstruction and its adjoint.
struct ChainState {
    std::vector<double> phi2lll;              // full/4 grid
    std::array<std::vector<double>, 7> up1;   // level-1 details upsampled to full/4
    std::array<std::vector<double>, 7> bar2;  // gated level-2 details
    std::vector<double> phi3lll;              // full/2 grid
    std::array<std::vector<double>, 7> up2;   // bar2 upsampled to full/2
    std::array<std::vector<double>, 7> bar3;  // gated level-3 details
};

ChainState run_chain(const CoefficientPyramid& pyr, const FilterBank& fb)
{
    const Dims3 l1 = pyr.level1_dims();
    const Dims3 l2 = pyr.level2_dims();

    ChainState st;
    st.phi2lll = idwt3_grid(pyr.phi1, fb);

    SubbandSet s2;
    s2.dims = l2;
    s2.channels = 3;
    s2.bands[0] = st.phi2lll;
    Dims3 up_dims{};
    for (int b = 0; b < 7; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        st.up1[bi] = upsample_grid(pyr.phi1.bands[bi + 1], l1, 3, 2, up_dims);
        st.bar2[bi] = refine_subband(st.up1[bi], pyr.res2[bi], pyr.gates2[bi][0],
                                     pyr.gates2[bi][1]);
        s2.bands[bi + 1] = st.bar2[bi];
    }
    st.phi3lll = idwt3_grid(s2, fb);

    for (int b = 0; b < 7; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        st.up2[bi] = upsample_grid(st.bar2[bi], l2, 3, 2, up_dims);
        st.bar3[bi] = refine_subband(st.up2[bi], pyr.res3[bi], pyr.gates3[bi][0],
                                     pyr.gates3[bi][1]);
    }
    return st;
}

} // namespace

VectorField reconstruct_flow(const CoefficientPyramid& pyr)
{
    const FilterBank fb = filter_bank(pyr.wavelet);
    const ChainState st = run_chain(pyr, fb);

    SubbandSet s3;
    s3.dims = pyr.level3_dims();
    s3.channels = 3;
    s3.bands[0] = st.phi3lll;
    for (int b = 0; b < 7; ++b)
        s3.bands[static_cast<std::size_t>(b) + 1] = st.bar3[static_cast<std::size_t>(b)];

    VectorField out;
    out.dims = pyr.full_dims;
    out.data = idwt3_grid(s3, fb);
    return out;
}

CoefficientPyramid flow_gradient_to_coeffs(const CoefficientPyramid& pyr,
                                           const VectorField& grad_flow)
{
    if (grad_flow.dims != pyr.full_dims)
        throw ShapeError("flow gradient dims do not match pyramid dims");
    const FilterBank fb = filter_bank(pyr.wavelet);
    const Dims3 l1 = pyr.level1_dims();
    const Dims3 l2 = pyr.level2_dims();
    const Dims3 l3 = pyr.level3_dims();
    const ChainState st = run_chain(pyr, fb);

    CoefficientPyramid grad = init_pyramid(pyr.full_dims, pyr.wavelet);

    // The adjoint of an orthonormal inverse transform is the forward one.
    const SubbandSet t3 = dwt3_grid(grad_flow.data, pyr.full_dims, 3, fb);
    std::array<std::vector<double>, 7> g_bar2;
    const std::vector<double>& g_phi3lll = t3.bands[0];
    for (int b = 0; b < 7; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        const std::vector<double>& g_bar3 = t3.bands[bi + 1];
        grad.gates3[bi][0] = dot(g_bar3, st.up2[bi]);
        grad.gates3[bi][1] = dot(g_bar3, pyr.res3[bi]);
        grad.res3[bi] = g_bar3;
        for (double& v : grad.res3[bi])
            v *= pyr.gates3[bi][1];
        g_bar2[bi] = upsample_adjoint_grid(g_bar3, l2, 3, 2);
        for (double& v : g_bar2[bi])
            v *= pyr.gates3[bi][0];
    }

    const SubbandSet t2 = dwt3_grid(g_phi3lll, l3, 3, fb);
    std::array<std::vector<double>, 7> g_phi1_hi;
    for (int b = 0; b < 7; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        std::vector<double>& gb = g_bar2[bi];
        const std::vector<double>& extra = t2.bands[bi + 1];
        for (std::size_t i = 0; i < gb.size(); ++i)
            gb[i] += extra[i];
        grad.gates2[bi][0] = dot(gb, st.up1[bi]);
        grad.gates2[bi][1] = dot(gb, pyr.res2[bi]);
        grad.res2[bi] = gb;
        for (double& v : grad.res2[bi])
            v *= pyr.gates2[bi][1];
        g_phi1_hi[bi] = upsample_adjoint_grid(gb, l1, 3, 2);
        for (double& v : g_phi1_hi[bi])
            v *= pyr.gates2[bi][0];
    }

    const SubbandSet t1 = dwt3_grid(t2.bands[0], l2, 3, fb);
    grad.phi1.bands[0] = t1.bands[0];
    for (int b = 0; b < 7; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        grad.phi1.bands[bi + 1] = t1.bands[bi + 1];
        std::vector<double>& gp = grad.phi1.bands[bi + 1];
        const std::vector<double>& extra = g_phi1_hi[bi];
        for (std::size_t i = 0; i < gp.size(); ++i)
            gp[i] += extra[i];
    }
    return grad;
}

} // namespace wreg
