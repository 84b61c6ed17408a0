#include "wreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "wreg/errors.hpp"

namespace wreg {

namespace {

void check_same_grid(const LabelVolume& a, const LabelVolume& b)
{
    if (a.dims != b.dims)
        throw ShapeError("label volumes have different dims");
    if (a.labels.size() != static_cast<std::size_t>(voxel_count(a.dims))
        || b.labels.size() != static_cast<std::size_t>(voxel_count(b.dims)))
        throw ShapeError("label data length does not match dims");
}

struct Point {
    double x, y, z;
};

std::vector<Point> label_points(const LabelVolume& vol, int label)
{
    std::vector<Point> pts;
    std::size_t i = 0;
    for (int d = 0; d < vol.dims[0]; ++d)
        for (int h = 0; h < vol.dims[1]; ++h)
            for (int w = 0; w < vol.dims[2]; ++w, ++i)
                if (vol.labels[i] == label)
                    pts.push_back({w * vol.spacing[2], h * vol.spacing[1],
                                   d * vol.spacing[0]});
    return pts;
}

// Nearest-rank percentile of the nearest-neighbour distances from src to dst.
double directed_distance(const std::vector<Point>& src, const std::vector<Point>& dst,
                         double percentile)
{
    std::vector<double> nearest;
    nearest.reserve(src.size());
    for (const Point& p : src) {
        double best = std::numeric_limits<double>::infinity();
        for (const Point& q : dst) {
            const double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
            best = std::min(best, dx * dx + dy * dy + dz * dz);
        }
        nearest.push_back(std::sqrt(best));
    }
    std::sort(nearest.begin(), nearest.end());
    const std::size_t rank = static_cast<std::size_t>(
        std::ceil(percentile / 100.0 * static_cast<double>(nearest.size())));
    return nearest[std::max<std::size_t>(rank, 1) - 1];
}

} // namespace

std::map<int, double> dice(const LabelVolume& a, const LabelVolume& b,
                           const std::vector<int>& labels)
{
    check_same_grid(a, b);
    std::map<int, double> out;
    for (const int label : labels) {
        std::int64_t na = 0, nb = 0, both = 0;
        for (std::size_t i = 0; i < a.labels.size(); ++i) {
            const bool in_a = a.labels[i] == label;
            const bool in_b = b.labels[i] == label;
            na += in_a;
            nb += in_b;
            both += in_a && in_b;
        }
        if (na + nb == 0)
            continue;
        out[label] = 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
    }
    return out;
}

std::map<int, double> dice(const LabelVolume& a, const LabelVolume& b)
{
    check_same_grid(a, b);
    std::set<int> present;
    for (const int v : a.labels)
        if (v != 0)
            present.insert(v);
    for (const int v : b.labels)
        if (v != 0)
            present.insert(v);
    return dice(a, b, std::vector<int>(present.begin(), present.end()));
}

double hausdorff(const LabelVolume& a, const LabelVolume& b, int label,
                 double percentile)
{
    check_same_grid(a, b);
    if (percentile <= 0.0 || percentile > 100.0)
        throw MetricError("percentile must be in (0, 100], got "
                          + std::to_string(percentile));
    const std::vector<Point> pa = label_points(a, label);
    const std::vector<Point> pb = label_points(b, label);
    if (pa.empty() || pb.empty())
        throw MetricError("label " + std::to_string(label)
                          + " missing from one of the volumes");
    return std::max(directed_distance(pa, pb, percentile),
                    directed_distance(pb, pa, percentile));
}

LabelVolume warp_labels(const LabelVolume& labels, const VectorField& flow)
{
    if (labels.dims != flow.dims)
        throw ShapeError("warp_labels: dims mismatch");
    const Dims3& dims = labels.dims;
    const std::int64_t n = voxel_count(dims);
    const double* fx = flow.channel(0);
    const double* fy = flow.channel(1);
    const double* fz = flow.channel(2);

    LabelVolume out;
    out.dims = dims;
    out.spacing = labels.spacing;
    out.labels.resize(static_cast<std::size_t>(n));
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const auto clamp_round = [](double v, int hi) {
                    const long r = std::lround(v);
                    return static_cast<int>(std::min<long>(std::max<long>(r, 0), hi));
                };
                const int sw = clamp_round(w + fx[i], dims[2] - 1);
                const int sh = clamp_round(h + fy[i], dims[1] - 1);
                const int sd = clamp_round(d + fz[i], dims[0] - 1);
                out.labels[static_cast<std::size_t>(i)] =
                    labels.labels[static_cast<std::size_t>(
                        (static_cast<std::int64_t>(sd) * dims[1] + sh) * dims[2] + sw)];
            }
    return out;
}

double neg_jac_fraction(const VectorField& flow)
{
    const ScalarVolume det = jacobian_determinant(flow);
    const Dims3& dims = flow.dims;
    std::int64_t interior = 0, negative = 0;
    for (int d = 1; d < dims[0] - 1; ++d)
        for (int h = 1; h < dims[1] - 1; ++h)
            for (int w = 1; w < dims[2] - 1; ++w) {
                ++interior;
                if (det.at(d, h, w) < 0.0)
                    ++negative;
            }
    if (interior == 0)
        throw MetricError("flow too small to have interior voxels");
    return 100.0 * static_cast<double>(negative) / static_cast<double>(interior);
}

} // namespace wreg
