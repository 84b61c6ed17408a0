#include "wreg/volume.hpp"

#include <algorithm>
#include <cmath>

namespace wreg {

namespace {

void check_dims_positive(const Dims3& dims, const char* what)
{
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw ShapeError(std::string(what) + ": dimensions must be positive");
}

void check_same_dims(const Dims3& a, const Dims3& b, const char* what)
{
    if (a != b)
        throw ShapeError(std::string(what) + ": dimension mismatch");
}

struct CellWeights {
    int i0[3], i1[3];   // low/high corner per axis (x,y,z order)
    double f[3];        // fractional part per axis
    bool inside[3];     // coordinate was within [0, dim-1] before clamping
};

// Resolve a continuous (x,y,z) coordinate into corner indices and weights,
// clamping to the border.
inline CellWeights resolve(const Dims3& dims, double x, double y, double z)
{
    const double coord[3] = {x, y, z};
    const int size[3] = {dims[2], dims[1], dims[0]}; // x->W, y->H, z->D
    CellWeights cw;
    for (int a = 0; a < 3; ++a) {
        const double hi = static_cast<double>(size[a] - 1);
        cw.inside[a] = coord[a] >= 0.0 && coord[a] <= hi;
        double c = std::clamp(coord[a], 0.0, hi);
        int lo = static_cast<int>(std::floor(c));
        cw.i0[a] = lo;
        cw.i1[a] = std::min(lo + 1, size[a] - 1);
        cw.f[a] = c - lo;
    }
    return cw;
}

inline double sample_cell(const double* g, const Dims3& dims, const CellWeights& cw)
{
    const std::int64_t H = dims[1], W = dims[2];
    auto idx = [&](int zi, int yi, int xi) { return (zi * H + yi) * W + xi; };
    const double fx = cw.f[0], fy = cw.f[1], fz = cw.f[2];
    if (fx == 0.0 && fy == 0.0 && fz == 0.0)
        return g[idx(cw.i0[2], cw.i0[1], cw.i0[0])];
    const double v000 = g[idx(cw.i0[2], cw.i0[1], cw.i0[0])];
    const double v001 = g[idx(cw.i0[2], cw.i0[1], cw.i1[0])];
    const double v010 = g[idx(cw.i0[2], cw.i1[1], cw.i0[0])];
    const double v011 = g[idx(cw.i0[2], cw.i1[1], cw.i1[0])];
    const double v100 = g[idx(cw.i1[2], cw.i0[1], cw.i0[0])];
    const double v101 = g[idx(cw.i1[2], cw.i0[1], cw.i1[0])];
    const double v110 = g[idx(cw.i1[2], cw.i1[1], cw.i0[0])];
    const double v111 = g[idx(cw.i1[2], cw.i1[1], cw.i1[0])];
    const double c00 = v000 * (1.0 - fx) + v001 * fx;
    const double c01 = v010 * (1.0 - fx) + v011 * fx;
    const double c10 = v100 * (1.0 - fx) + v101 * fx;
    const double c11 = v110 * (1.0 - fx) + v111 * fx;
    const double c0 = c00 * (1.0 - fy) + c01 * fy;
    const double c1 = c10 * (1.0 - fy) + c11 * fy;
    return c0 * (1.0 - fz) + c1 * fz;
}

// Derivative of sample_cell with respect to the (unclamped) coordinate.
inline void sample_cell_grad(const double* g, const Dims3& dims, const CellWeights& cw,
                             double out[3])
{
    const std::int64_t H = dims[1], W = dims[2];
    auto idx = [&](int zi, int yi, int xi) { return (zi * H + yi) * W + xi; };
    const double fx = cw.f[0], fy = cw.f[1], fz = cw.f[2];
    const double v000 = g[idx(cw.i0[2], cw.i0[1], cw.i0[0])];
    const double v001 = g[idx(cw.i0[2], cw.i0[1], cw.i1[0])];
    const double v010 = g[idx(cw.i0[2], cw.i1[1], cw.i0[0])];
    const double v011 = g[idx(cw.i0[2], cw.i1[1], cw.i1[0])];
    const double v100 = g[idx(cw.i1[2], cw.i0[1], cw.i0[0])];
    const double v101 = g[idx(cw.i1[2], cw.i0[1], cw.i1[0])];
    const double v110 = g[idx(cw.i1[2], cw.i1[1], cw.i0[0])];
    const double v111 = g[idx(cw.i1[2], cw.i1[1], cw.i1[0])];
    // d/dx: difference along x, interpolated over y,z
    double dx = (v001 - v000) * (1.0 - fy) * (1.0 - fz)
              + (v011 - v010) * fy * (1.0 - fz)
              + (v101 - v100) * (1.0 - fy) * fz
              + (v111 - v110) * fy * fz;
    double dy = (v010 - v000) * (1.0 - fx) * (1.0 - fz)
              + (v011 - v001) * fx * (1.0 - fz)
              + (v110 - v100) * (1.0 - fx) * fz
              + (v111 - v101) * fx * fz;
    double dz = (v100 - v000) * (1.0 - fx) * (1.0 - fy)
              + (v101 - v001) * fx * (1.0 - fy)
              + (v110 - v010) * (1.0 - fx) * fy
              + (v111 - v011) * fx * fy;
    out[0] = cw.inside[0] ? dx : 0.0;
    out[1] = cw.inside[1] ? dy : 0.0;
    out[2] = cw.inside[2] ? dz : 0.0;
}

} // namespace

ScalarVolume make_volume(const Dims3& dims, double fill)
{
    check_dims_positive(dims, "make_volume");
    ScalarVolume v;
    v.dims = dims;
    v.data.assign(static_cast<std::size_t>(voxel_count(dims)), fill);
    return v;
}

VectorField make_field(const Dims3& dims, double fill)
{
    check_dims_positive(dims, "make_field");
    VectorField f;
    f.dims = dims;
    f.data.assign(static_cast<std::size_t>(3 * voxel_count(dims)), fill);
    return f;
}

void check_finite(const ScalarVolume& vol, const char* what)
{
    for (double v : vol.data)
        if (!std::isfinite(v))
            throw StateError(std::string(what) + ": non-finite value");
}

void check_finite(const VectorField& field, const char* what)
{
    for (double v : field.data)
        if (!std::isfinite(v))
            throw StateError(std::string(what) + ": non-finite value");
}

double trilinear_sample(const ScalarVolume& vol, double x, double y, double z)
{
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
        throw SampleError("trilinear_sample: non-finite coordinate");
    const CellWeights cw = resolve(vol.dims, x, y, z);
    return sample_cell(vol.data.data(), vol.dims, cw);
}

ScalarVolume warp(const ScalarVolume& moving, const VectorField& flow)
{
    check_same_dims(moving.dims, flow.dims, "warp");
    const Dims3 dims = moving.dims;
    ScalarVolume out = make_volume(dims);
    out.spacing = moving.spacing;
    const double* ux = flow.channel(0);
    const double* uy = flow.channel(1);
    const double* uz = flow.channel(2);
    const double* src = moving.data.data();
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                if (ux[i] == 0.0 && uy[i] == 0.0 && uz[i] == 0.0) {
                    out.data[i] = src[i];
                    continue;
                }
                const CellWeights cw =
                    resolve(dims, w + ux[i], h + uy[i], d + uz[i]);
                out.data[i] = sample_cell(src, dims, cw);
            }
    return out;
}

VectorField warp_backward(const ScalarVolume& moving, const VectorField& flow,
                          const ScalarVolume& upstream)
{
    check_same_dims(moving.dims, flow.dims, "warp_backward");
    check_same_dims(moving.dims, upstream.dims, "warp_backward");
    const Dims3 dims = moving.dims;
    VectorField out = make_field(dims);
    out.spacing = flow.spacing;
    const double* ux = flow.channel(0);
    const double* uy = flow.channel(1);
    const double* uz = flow.channel(2);
    const double* src = moving.data.data();
    double* gx = out.channel(0);
    double* gy = out.channel(1);
    double* gz = out.channel(2);
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const double u = upstream.data[i];
                if (u == 0.0)
                    continue;
                const CellWeights cw =
                    resolve(dims, w + ux[i], h + uy[i], d + uz[i]);
                double g[3];
                sample_cell_grad(src, dims, cw, g);
                gx[i] = u * g[0];
                gy[i] = u * g[1];
                gz[i] = u * g[2];
            }
    return out;
}

ScalarVolume warp_adjoint_moving(const VectorField& flow, const ScalarVolume& upstream)
{
    check_same_dims(flow.dims, upstream.dims, "warp_adjoint_moving");
    const Dims3 dims = flow.dims;
    ScalarVolume out = make_volume(dims);
    out.spacing = upstream.spacing;
    const double* ux = flow.channel(0);
    const double* uy = flow.channel(1);
    const double* uz = flow.channel(2);
    const std::int64_t H = dims[1], W = dims[2];
    auto idx = [&](int zi, int yi, int xi) { return (zi * H + yi) * W + xi; };
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const double u = upstream.data[i];
                if (u == 0.0)
                    continue;
                const CellWeights cw =
                    resolve(dims, w + ux[i], h + uy[i], d + uz[i]);
                const double fx = cw.f[0], fy = cw.f[1], fz = cw.f[2];
                out.data[idx(cw.i0[2], cw.i0[1], cw.i0[0])] += u * (1 - fx) * (1 - fy) * (1 - fz);
                out.data[idx(cw.i0[2], cw.i0[1], cw.i1[0])] += u * fx * (1 - fy) * (1 - fz);
                out.data[idx(cw.i0[2], cw.i1[1], cw.i0[0])] += u * (1 - fx) * fy * (1 - fz);
                out.data[idx(cw.i0[2], cw.i1[1], cw.i1[0])] += u * fx * fy * (1 - fz);
                out.data[idx(cw.i1[2], cw.i0[1], cw.i0[0])] += u * (1 - fx) * (1 - fy) * fz;
                out.data[idx(cw.i1[2], cw.i0[1], cw.i1[0])] += u * fx * (1 - fy) * fz;
                out.data[idx(cw.i1[2], cw.i1[1], cw.i0[0])] += u * (1 - fx) * fy * fz;
                out.data[idx(cw.i1[2], cw.i1[1], cw.i1[0])] += u * fx * fy * fz;
            }
    return out;
}

VectorField warp_field(const VectorField& field, const VectorField& flow)
{
    check_same_dims(field.dims, flow.dims, "warp_field");
    const Dims3 dims = field.dims;
    VectorField out = make_field(dims);
    out.spacing = field.spacing;
    const double* ux = flow.channel(0);
    const double* uy = flow.channel(1);
    const double* uz = flow.channel(2);
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                if (ux[i] == 0.0 && uy[i] == 0.0 && uz[i] == 0.0) {
                    for (int c = 0; c < 3; ++c)
                        out.channel(c)[i] = field.channel(c)[i];
                    continue;
                }
                const CellWeights cw =
                    resolve(dims, w + ux[i], h + uy[i], d + uz[i]);
                for (int c = 0; c < 3; ++c)
                    out.channel(c)[i] = sample_cell(field.channel(c), dims, cw);
            }
    return out;
}

SpatialGradient spatial_gradient(const VectorField& field)
{
    const Dims3 dims = field.dims;
    if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2)
        throw ShapeError("spatial_gradient: every dimension must be >= 2");
    SpatialGradient sg;
    sg.dims = dims;
    const std::int64_t n = voxel_count(dims);
    const std::int64_t H = dims[1], W = dims[2];
    const std::int64_t stride[3] = {1, W, H * W}; // x, y, z steps
    for (int c = 0; c < 3; ++c) {
        const double* u = field.channel(c);
        for (int a = 0; a < 3; ++a) {
            auto& g = sg.grids[c * 3 + a];
            g.assign(static_cast<std::size_t>(n), 0.0);
            std::int64_t i = 0;
            for (int d = 0; d < dims[0]; ++d)
                for (int h = 0; h < dims[1]; ++h)
                    for (int w = 0; w < dims[2]; ++w, ++i) {
                        const int pos[3] = {w, h, d};
                        const int size[3] = {dims[2], dims[1], dims[0]};
                        if (pos[a] + 1 < size[a])
                            g[i] = u[i + stride[a]] - u[i];
                    }
        }
    }
    return sg;
}

ScalarVolume jacobian_determinant(const VectorField& flow)
{
    const Dims3 dims = flow.dims;
    if (dims[0] < 3 || dims[1] < 3 || dims[2] < 3)
        throw ShapeError("jacobian_determinant: every dimension must be >= 3");
    ScalarVolume out = make_volume(dims);
    out.spacing = flow.spacing;
    const std::int64_t H = dims[1], W = dims[2];
    const std::int64_t stride[3] = {1, W, H * W};
    const int size[3] = {dims[2], dims[1], dims[0]};
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const int pos[3] = {w, h, d};
                double J[3][3]; // J[c][a] = du_c/dx_a
                for (int a = 0; a < 3; ++a) {
                    const std::int64_t s = stride[a];
                    for (int c = 0; c < 3; ++c) {
                        const double* u = flow.channel(c);
                        double deriv;
                        if (pos[a] == 0)
                            deriv = u[i + s] - u[i];
                        else if (pos[a] == size[a] - 1)
                            deriv = u[i] - u[i - s];
                        else
                            deriv = 0.5 * (u[i + s] - u[i - s]);
                        J[c][a] = deriv;
                    }
                }
                const double a00 = 1.0 + J[0][0], a01 = J[0][1], a02 = J[0][2];
                const double a10 = J[1][0], a11 = 1.0 + J[1][1], a12 = J[1][2];
                const double a20 = J[2][0], a21 = J[2][1], a22 = 1.0 + J[2][2];
                out.data[i] = a00 * (a11 * a22 - a12 * a21)
                            - a01 * (a10 * a22 - a12 * a20)
                            + a02 * (a10 * a21 - a11 * a20);
            }
    return out;
}

} // namespace wreg
