#include "wreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "wreg/errors.hpp"

namespace wreg {

namespace {

// (eng() >> 11) * 2^-53 gives the same doubles on every platform, unlike
// std::uniform_real_distribution.
struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double u01() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
};

double smoothstep(double t)
{
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Tapers to zero at the faces so warps never reach outside the grid.
double border_window(const Dims3& dims, int d, int h, int w)
{
    const int idx[3] = {d, h, w};
    double win = 1.0;
    for (int a = 0; a < 3; ++a) {
        const double margin = std::max(4.0, dims[a] / 8.0);
        const double edge = std::min(idx[a], dims[a] - 1 - idx[a]);
        win *= smoothstep(edge / margin);
    }
    return win;
}

// Soft indicator of r < edge, ramping over about two voxels.
double soft_inside(double r, double edge)
{
    return smoothstep((edge - r) / 2.0 + 0.5);
}

ScalarVolume make_phantom(const Dims3& dims, Rng& rng, bool with_spheres)
{
    ScalarVolume vol = make_volume(dims);
    const int min_dim = std::min({dims[0], dims[1], dims[2]});

    // Smooth ramp so no window is ever completely flat.
    const double gx = rng.uniform(-0.2, 0.2);
    const double gy = rng.uniform(-0.2, 0.2);
    const double gz = rng.uniform(-0.2, 0.2);
    std::size_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i)
                vol.data[i] = 0.5 + gz * (d / static_cast<double>(dims[0]))
                            + gy * (h / static_cast<double>(dims[1]))
                            + gx * (w / static_cast<double>(dims[2]));

    const int blobs = 90;
    for (int b = 0; b < blobs; ++b) {
        const double cd = rng.uniform(0.1, 0.9) * (dims[0] - 1);
        const double ch = rng.uniform(0.1, 0.9) * (dims[1] - 1);
        const double cw = rng.uniform(0.1, 0.9) * (dims[2] - 1);
        const double sigma = rng.uniform(1.8, std::max(3.0, min_dim / 8.0));
        const double amp = rng.uniform(-0.7, 1.0);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const double reach = 3.0 * sigma;
        const int d0 = std::max(0, static_cast<int>(std::floor(cd - reach)));
        const int d1 = std::min(dims[0] - 1, static_cast<int>(std::ceil(cd + reach)));
        const int h0 = std::max(0, static_cast<int>(std::floor(ch - reach)));
        const int h1 = std::min(dims[1] - 1, static_cast<int>(std::ceil(ch + reach)));
        const int w0 = std::max(0, static_cast<int>(std::floor(cw - reach)));
        const int w1 = std::min(dims[2] - 1, static_cast<int>(std::ceil(cw + reach)));
        for (int d = d0; d <= d1; ++d)
            for (int h = h0; h <= h1; ++h)
                for (int w = w0; w <= w1; ++w) {
                    const double rd = d - cd, rh = h - ch, rw = w - cw;
                    const double r2 = rd * rd + rh * rh + rw * rw;
                    vol.at(d, h, w) += amp * std::exp(-r2 * inv2s2);
                }
    }

    if (with_spheres) {
        // The labelled structures must be visible, or aligning them would be
        // guesswork: bright core, dark shell, on top of a damped texture.
        const double scale = min_dim / 48.0;
        const double r_in = 6.0 * scale;
        const double r_out = 12.0 * scale;
        const double cd = (dims[0] - 1) / 2.0;
        const double ch = (dims[1] - 1) / 2.0;
        const double cw = (dims[2] - 1) / 2.0;
        i = 0;
        for (int d = 0; d < dims[0]; ++d)
            for (int h = 0; h < dims[1]; ++h)
                for (int w = 0; w < dims[2]; ++w, ++i) {
                    const double rd = d - cd, rh = h - ch, rw = w - cw;
                    const double r = std::sqrt(rd * rd + rh * rh + rw * rw);
                    const double ball = soft_inside(r, r_in);
                    const double shell = soft_inside(r, r_out) - ball;
                    const double blend = soft_inside(r, r_out + 2.0);
                    vol.data[i] = vol.data[i] * (1.0 - 0.6 * blend) + 0.9 * ball
                                - 0.5 * shell;
                }
    }

    const auto [lo_it, hi_it] = std::minmax_element(vol.data.begin(), vol.data.end());
    const double lo = *lo_it, hi = *hi_it; // copy before the loop rewrites them
    if (hi > lo)
        for (double& v : vol.data)
            v = (v - lo) / (hi - lo);
    return vol;
}

void scale_to_peak(VectorField& field, double peak)
{
    const std::int64_t n = voxel_count(field.dims);
    const double* fx = field.channel(0);
    const double* fy = field.channel(1);
    const double* fz = field.channel(2);
    double max2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double m2 = fx[i] * fx[i] + fy[i] * fy[i] + fz[i] * fz[i];
        max2 = std::max(max2, m2);
    }
    if (max2 <= 0.0)
        return;
    const double s = peak / std::sqrt(max2);
    for (double& v : field.data)
        v *= s;
}

VectorField bumps_field(const SynthSpec& spec, Rng& rng)
{
    const Dims3& dims = spec.dims;
    VectorField field = make_field(dims);
    const int min_dim = std::min({dims[0], dims[1], dims[2]});

    // Octant-stratified bumps keep the field spread over the volume instead
    // of clustering wherever the seed happens to land; dropping two octants
    // leaves genuinely still regions in every pair.
    const int skip_a = static_cast<int>(rng.uniform(0.0, 8.0));
    const int skip_b = static_cast<int>(rng.uniform(0.0, 8.0));
    for (int b = 0; b < 8; ++b) {
        double cd, ch, cw, sigma, weight;
        if (b == 0 && spec.with_labels) {
            // Keep the dominant bump on the labelled spheres so the pair is
            // genuinely misaligned where it is scored.
            cd = (dims[0] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
            ch = (dims[1] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
            cw = (dims[2] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
            sigma = min_dim / 4.0;
            weight = 2.0;
        } else {
            const double base[3] = {b & 4 ? 0.75 : 0.25, b & 2 ? 0.75 : 0.25,
                                    b & 1 ? 0.75 : 0.25};
            cd = (base[0] + rng.uniform(-0.15, 0.15)) * (dims[0] - 1);
            ch = (base[1] + rng.uniform(-0.15, 0.15)) * (dims[1] - 1);
            cw = (base[2] + rng.uniform(-0.15, 0.15)) * (dims[2] - 1);
            sigma = rng.uniform(min_dim / 7.0, min_dim / 5.0);
            weight = 1.0;
            if (b == skip_a || b == skip_b)
                weight = 0.0;
        }
        double dir[3];
        double norm2 = 0.0;
        do {
            norm2 = 0.0;
            for (double& v : dir) {
                v = rng.uniform(-1.0, 1.0);
                norm2 += v * v;
            }
        } while (norm2 < 0.01 || norm2 > 1.0);
        if (weight == 0.0)
            continue; // skipped octant; rng draws above keep the stream stable
        const double inv_norm = weight / std::sqrt(norm2);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

        double* fx = field.data.data() + field.channel_offset(0);
        double* fy = field.data.data() + field.channel_offset(1);
        double* fz = field.data.data() + field.channel_offset(2);
        std::int64_t i = 0;
        for (int d = 0; d < dims[0]; ++d)
            for (int h = 0; h < dims[1]; ++h)
                for (int w = 0; w < dims[2]; ++w, ++i) {
                    const double rd = d - cd, rh = h - ch, rw = w - cw;
                    const double g = std::exp(-(rd * rd + rh * rh + rw * rw) * inv2s2);
                    fx[i] += dir[0] * inv_norm * g;
                    fy[i] += dir[1] * inv_norm * g;
                    fz[i] += dir[2] * inv_norm * g;
                }
    }

    double* fx = field.data.data() + field.channel_offset(0);
    double* fy = field.data.data() + field.channel_offset(1);
    double* fz = field.data.data() + field.channel_offset(2);
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const double win = border_window(dims, d, h, w);
                fx[i] *= win;
                fy[i] *= win;
                fz[i] *= win;
            }
    scale_to_peak(field, spec.max_disp);
    return field;
}

VectorField radial_field(const SynthSpec& spec, Rng& rng)
{
    const Dims3& dims = spec.dims;
    VectorField field = make_field(dims);
    const int min_dim = std::min({dims[0], dims[1], dims[2]});
    const double cd = (dims[0] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
    const double ch = (dims[1] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
    const double cw = (dims[2] - 1) / 2.0 + rng.uniform(-2.0, 2.0);
    const double sigma = min_dim / 4.0;
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    double* fx = field.data.data() + field.channel_offset(0);
    double* fy = field.data.data() + field.channel_offset(1);
    double* fz = field.data.data() + field.channel_offset(2);
    std::int64_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const double rd = d - cd, rh = h - ch, rw = w - cw;
                const double g = std::exp(-(rd * rd + rh * rh + rw * rw) * inv2s2);
                const double win = border_window(dims, d, h, w);
                fx[i] = -rw * g * win;
                fy[i] = -rh * g * win;
                fz[i] = -rd * g * win;
            }
    scale_to_peak(field, spec.max_disp);
    return field;
}

VectorField translation_field(const SynthSpec& spec, Rng& rng)
{
    double t[3];
    double max_abs = 0.0;
    for (double& v : t) {
        v = rng.uniform(-1.0, 1.0);
        max_abs = std::max(max_abs, std::abs(v));
    }
    if (max_abs > 0.0)
        for (double& v : t)
            v *= spec.max_disp / max_abs;
    // Windowed so the shift fades out at the borders.  The margin grows with
    // the displacement: the worst corner alignment of a diagonal shift gives
    // |d det| up to ~2.4 * disp / margin, so 2.8 * disp keeps the map clearly
    // away from folding without any data-dependent rescale.
    const double margin = std::max(8.0, 2.8 * spec.max_disp);
    VectorField field = make_field(spec.dims);
    double* fx = field.data.data() + field.channel_offset(0);
    double* fy = field.data.data() + field.channel_offset(1);
    double* fz = field.data.data() + field.channel_offset(2);
    std::int64_t i = 0;
    for (int d = 0; d < spec.dims[0]; ++d)
        for (int h = 0; h < spec.dims[1]; ++h)
            for (int w = 0; w < spec.dims[2]; ++w, ++i) {
                const int idx[3] = {d, h, w};
                double win = 1.0;
                for (int a = 0; a < 3; ++a) {
                    const double edge =
                        std::min(idx[a], spec.dims[a] - 1 - idx[a]);
                    win *= smoothstep(edge / margin);
                }
                fx[i] = t[0] * win; // t is (x, y, z) like the channels
                fy[i] = t[1] * win;
                fz[i] = t[2] * win;
            }
    return field;
}

LabelVolume sphere_labels(const Dims3& dims)
{
    const int min_dim = std::min({dims[0], dims[1], dims[2]});
    const double scale = min_dim / 48.0;
    const double r_in = 6.0 * scale;
    const double r_out = 12.0 * scale;
    const double cd = (dims[0] - 1) / 2.0;
    const double ch = (dims[1] - 1) / 2.0;
    const double cw = (dims[2] - 1) / 2.0;

    LabelVolume out;
    out.dims = dims;
    out.labels.resize(static_cast<std::size_t>(voxel_count(dims)));
    std::size_t i = 0;
    for (int d = 0; d < dims[0]; ++d)
        for (int h = 0; h < dims[1]; ++h)
            for (int w = 0; w < dims[2]; ++w, ++i) {
                const double rd = d - cd, rh = h - ch, rw = w - cw;
                const double r = std::sqrt(rd * rd + rh * rh + rw * rw);
                out.labels[i] = r <= r_in ? 2 : (r <= r_out ? 1 : 0);
            }
    return out;
}

} // namespace

SynthKind synth_kind_from_string(const std::string& name)
{
    if (name == "translation")
        return SynthKind::translation;
    if (name == "gaussian-bumps")
        return SynthKind::gaussian_bumps;
    if (name == "radial")
        return SynthKind::radial;
    throw ConfigError("unknown synth kind: " + name);
}

const char* synth_kind_to_string(SynthKind kind)
{
    switch (kind) {
    case SynthKind::translation:
        return "translation";
    case SynthKind::gaussian_bumps:
        return "gaussian-bumps";
    case SynthKind::radial:
        return "radial";
    }
    return "gaussian-bumps";
}

SynthPair synth_pair(const SynthSpec& spec)
{
    for (const int d : spec.dims)
        if (d < 8)
            throw ConfigError("synth dims must be at least 8");
    const int min_dim = std::min({spec.dims[0], spec.dims[1], spec.dims[2]});
    if (spec.max_disp < 0.0 || spec.max_disp >= min_dim / 4.0)
        throw ConfigError("max_disp must lie in [0, min_dim/4)");

    Rng rng(spec.seed);
    SynthPair pair;
    pair.fixed = make_phantom(spec.dims, rng, spec.with_labels);

    switch (spec.kind) {
    case SynthKind::translation:
        pair.gt_flow = translation_field(spec, rng);
        break;
    case SynthKind::gaussian_bumps:
        pair.gt_flow = bumps_field(spec, rng);
        break;
    case SynthKind::radial:
        pair.gt_flow = radial_field(spec, rng);
        break;
    }

    // Shrink until the map is comfortably fold-free.
    for (int guard = 0; guard < 60; ++guard) {
        const ScalarVolume det = jacobian_determinant(pair.gt_flow);
        const double min_det = *std::min_element(det.data.begin(), det.data.end());
        if (min_det > 0.05)
            break;
        for (double& v : pair.gt_flow.data)
            v *= 0.8;
    }

    pair.moving = warp(pair.fixed, pair.gt_flow);

    if (spec.with_labels) {
        pair.labels_fixed = sphere_labels(spec.dims);
        pair.labels_moving = warp_labels(pair.labels_fixed, pair.gt_flow);
    }
    return pair;
}

} // namespace wreg
