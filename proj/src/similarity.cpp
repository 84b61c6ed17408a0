#include "wreg/similarity.hpp"

#include <algorithm>
#include <string>

#include "wreg/diffeo.hpp"
#include "wreg/errors.hpp"

namespace wreg {

namespace {

constexpr double kNccEps = 1e-5;

void check_same(const ScalarVolume& a, const ScalarVolume& b, const char* what)
{
    if (a.dims != b.dims)
        throw ShapeError(std::string(what) + ": dims mismatch");
}

// Sliding-window sum along one axis, zeros outside the volume.
void box_axis(std::vector<double>& data, const Dims3& dims, int axis, int radius)
{
    const std::int64_t strides[3] = {
        static_cast<std::int64_t>(dims[1]) * dims[2], dims[2], 1};
    const std::int64_t n = dims[axis];
    const std::int64_t stride = strides[axis];
    const int o1 = axis == 0 ? 1 : 0;
    const int o2 = axis == 2 ? 1 : 2;

    std::vector<double> line(static_cast<std::size_t>(n));
    for (int i1 = 0; i1 < dims[o1]; ++i1) {
        for (int i2 = 0; i2 < dims[o2]; ++i2) {
            double* base = data.data() + i1 * strides[o1] + i2 * strides[o2];
            for (std::int64_t j = 0; j < n; ++j)
                line[static_cast<std::size_t>(j)] = base[j * stride];
            double acc = 0.0;
            for (std::int64_t j = 0; j <= std::min<std::int64_t>(radius, n - 1); ++j)
                acc += line[static_cast<std::size_t>(j)];
            base[0] = acc;
            for (std::int64_t j = 1; j < n; ++j) {
                if (j + radius < n)
                    acc += line[static_cast<std::size_t>(j + radius)];
                if (j - radius - 1 >= 0)
                    acc -= line[static_cast<std::size_t>(j - radius - 1)];
                base[j * stride] = acc;
            }
        }
    }
}

std::vector<double> box3(const std::vector<double>& in, const Dims3& dims, int radius)
{
    std::vector<double> out = in;
    box_axis(out, dims, 2, radius);
    box_axis(out, dims, 1, radius);
    box_axis(out, dims, 0, radius);
    return out;
}

void check_window(const Dims3& dims, int window)
{
    const int min_dim = std::min({dims[0], dims[1], dims[2]});
    if (window < 3 || window % 2 == 0)
        throw ConfigError("ncc window must be odd and at least 3, got "
                          + std::to_string(window));
    if (window > min_dim)
        throw ConfigError("ncc window " + std::to_string(window)
                          + " exceeds smallest dimension " + std::to_string(min_dim));
}

} // namespace

LossKind loss_from_string(const std::string& name)
{
    if (name == "ncc")
        return LossKind::ncc;
    if (name == "mse")
        return LossKind::mse;
    throw ConfigError("unknown loss kind: " + name);
}

const char* loss_to_string(LossKind kind)
{
    return kind == LossKind::ncc ? "ncc" : "mse";
}

double mse(const ScalarVolume& a, const ScalarVolume& b, ScalarVolume* grad_a)
{
    check_same(a, b, "mse");
    const std::int64_t n = voxel_count(a.dims);
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = a.data[static_cast<std::size_t>(i)]
                       - b.data[static_cast<std::size_t>(i)];
        acc += d * d;
    }
    const double value = acc / static_cast<double>(n);
    if (grad_a) {
        *grad_a = make_volume(a.dims);
        grad_a->spacing = a.spacing;
        const double s = 2.0 / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i)
            grad_a->data[static_cast<std::size_t>(i)] =
                s * (a.data[static_cast<std::size_t>(i)]
                     - b.data[static_cast<std::size_t>(i)]);
    }
    return value;
}

namespace {

// Shared windowed statistics for the correlation value, map, and gradient.
struct NccSums {
    double n;
    std::vector<double> s_i, s_j, s_ii, s_jj, s_ij;
};

NccSums ncc_sums(const ScalarVolume& i, const ScalarVolume& j, int window)
{
    check_same(i, j, "ncc");
    check_window(i.dims, window);
    const int radius = window / 2;
    const std::size_t n = i.data.size();

    NccSums s;
    s.n = static_cast<double>(window) * window * window;
    std::vector<double> tmp(n);

    s.s_i = box3(i.data, i.dims, radius);
    s.s_j = box3(j.data, j.dims, radius);
    for (std::size_t k = 0; k < n; ++k)
        tmp[k] = i.data[k] * i.data[k];
    s.s_ii = box3(tmp, i.dims, radius);
    for (std::size_t k = 0; k < n; ++k)
        tmp[k] = j.data[k] * j.data[k];
    s.s_jj = box3(tmp, i.dims, radius);
    for (std::size_t k = 0; k < n; ++k)
        tmp[k] = i.data[k] * j.data[k];
    s.s_ij = box3(tmp, i.dims, radius);
    return s;
}

} // namespace

ScalarVolume local_ncc_map(const ScalarVolume& i, const ScalarVolume& j, int window)
{
    const NccSums s = ncc_sums(i, j, window);
    ScalarVolume map = make_volume(i.dims);
    map.spacing = i.spacing;
    for (std::size_t k = 0; k < map.data.size(); ++k) {
        const double mi = s.s_i[k] / s.n;
        const double mj = s.s_j[k] / s.n;
        const double cross = s.s_ij[k] - mi * s.s_j[k];
        const double var_i = s.s_ii[k] - mi * s.s_i[k];
        const double var_j = s.s_jj[k] - mj * s.s_j[k];
        map.data[k] = cross * cross / (var_i * var_j + kNccEps);
    }
    return map;
}

double local_ncc(const ScalarVolume& i, const ScalarVolume& j, int window,
                 ScalarVolume* grad_j)
{
    const NccSums s = ncc_sums(i, j, window);
    const std::size_t n = i.data.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    double total = 0.0;
    std::vector<double> a(grad_j ? n : 0), a_mi(grad_j ? n : 0);
    std::vector<double> b(grad_j ? n : 0), b_mj(grad_j ? n : 0);
    for (std::size_t k = 0; k < n; ++k) {
        const double mi = s.s_i[k] / s.n;
        const double mj = s.s_j[k] / s.n;
        const double cross = s.s_ij[k] - mi * s.s_j[k];
        const double var_i = s.s_ii[k] - mi * s.s_i[k];
        const double var_j = s.s_jj[k] - mj * s.s_j[k];
        const double den = var_i * var_j + kNccEps;
        total += cross * cross / den;
        if (grad_j) {
            // d(cc^2)/d(cross) and d(cc^2)/d(var_j) at this voxel.
            const double da = 2.0 * cross / den;
            const double db = -cross * cross * var_i / (den * den);
            a[k] = da;
            a_mi[k] = da * mi;
            b[k] = db;
            b_mj[k] = db * mj;
        }
    }

    if (grad_j) {
        const int radius = window / 2;
        const std::vector<double> box_a = box3(a, i.dims, radius);
        const std::vector<double> box_a_mi = box3(a_mi, i.dims, radius);
        const std::vector<double> box_b = box3(b, i.dims, radius);
        const std::vector<double> box_b_mj = box3(b_mj, i.dims, radius);
        *grad_j = make_volume(i.dims);
        grad_j->spacing = i.spacing;
        for (std::size_t k = 0; k < n; ++k) {
            // j(q) feeds s_ij with weight i(q), s_jj with 2 j(q), s_j with 1.
            grad_j->data[k] = inv_n
                * (i.data[k] * box_a[k] - box_a_mi[k]
                   + 2.0 * (j.data[k] * box_b[k] - box_b_mj[k]));
        }
    }
    return total * inv_n;
}

double smoothness(const VectorField& field, VectorField* grad)
{
    const SpatialGradient sg = spatial_gradient(field);
    const std::int64_t n = voxel_count(field.dims);
    const double norm = 1.0 / (3.0 * static_cast<double>(n));

    double acc = 0.0;
    for (const auto& g : sg.grids)
        for (const double v : g)
            acc += v * v;
    const double value = acc * norm;

    if (grad) {
        *grad = make_field(field.dims);
        grad->spacing = field.spacing;
        const Dims3& dims = field.dims;
        const std::int64_t stride[3] = {1, dims[2],
                                        static_cast<std::int64_t>(dims[1]) * dims[2]};
        const int extent[3] = {dims[2], dims[1], dims[0]}; // x, y, z
        for (int c = 0; c < 3; ++c) {
            double* out = grad->data.data() + grad->channel_offset(c);
            for (int axis = 0; axis < 3; ++axis) {
                const std::vector<double>& d = sg.grids[static_cast<std::size_t>(c * 3 + axis)];
                const std::int64_t st = stride[axis];
                for (std::int64_t idx = 0; idx < n; ++idx) {
                    // Position along this axis recovers boundary handling.
                    std::int64_t pos;
                    if (axis == 0)
                        pos = idx % dims[2];
                    else if (axis == 1)
                        pos = (idx / dims[2]) % dims[1];
                    else
                        pos = idx / (static_cast<std::int64_t>(dims[1]) * dims[2]);
                    double v = 0.0;
                    if (pos > 0)
                        v += d[static_cast<std::size_t>(idx - st)];
                    if (pos < extent[axis] - 1)
                        v -= d[static_cast<std::size_t>(idx)];
                    out[idx] += 2.0 * norm * v;
                }
            }
        }
    }
    return value;
}

TotalLoss total_loss(const ScalarVolume& moving, const ScalarVolume& fixed,
                     const VectorField& field, const LossConfig& config,
                     bool diffeomorphic, int sq_steps)
{
    check_same(moving, fixed, "total_loss");
    if (field.dims != moving.dims)
        throw ShapeError("total_loss: field dims do not match volumes");

    ExpTrace trace;
    const VectorField* disp = &field;
    VectorField integrated;
    if (diffeomorphic) {
        integrated = scaling_and_squaring(field, sq_steps, &trace);
        disp = &integrated;
    }

    const ScalarVolume warped = warp(moving, *disp);

    ScalarVolume grad_warped;
    TotalLoss out;
    if (config.kind == LossKind::mse) {
        out.similarity = mse(warped, fixed, &grad_warped);
    } else {
        const double v = local_ncc(fixed, warped, config.ncc_window, &grad_warped);
        out.similarity = -v;
        for (double& g : grad_warped.data)
            g = -g;
    }

    VectorField grad_disp = warp_backward(moving, *disp, grad_warped);
    VectorField grad_field =
        diffeomorphic ? exp_backward(trace, grad_disp) : std::move(grad_disp);

    VectorField grad_smooth;
    out.regularizer = smoothness(field, &grad_smooth);
    out.value = out.similarity + config.lambda * out.regularizer;

    out.grad = std::move(grad_field);
    for (std::size_t k = 0; k < out.grad.data.size(); ++k)
        out.grad.data[k] += config.lambda * grad_smooth.data[k];
    return out;
}

} // namespace wreg
