#include "wreg/diffeo.hpp"

#include <cmath>
#include <string>

#include "wreg/errors.hpp"

namespace wreg {

namespace {

ScalarVolume channel_view(const VectorField& field, int c)
{
    ScalarVolume vol;
    vol.dims = field.dims;
    vol.spacing = field.spacing;
    const double* src = field.channel(c);
    vol.data.assign(src, src + voxel_count(field.dims));
    return vol;
}

} // namespace

VectorField scaling_and_squaring(const VectorField& velocity, int steps, ExpTrace* trace)
{
    if (steps < 0)
        throw ConfigError("squaring steps must be non-negative, got "
                          + std::to_string(steps));
    if (trace) {
        trace->steps = steps;
        trace->inputs.clear();
    }
    VectorField phi = velocity;
    if (steps == 0)
        return phi;

    const double scale = std::ldexp(1.0, -steps); // 2^-steps
    for (double& v : phi.data)
        v *= scale;
    for (int s = 0; s < steps; ++s) {
        if (trace)
            trace->inputs.push_back(phi);
        const VectorField moved = warp_field(phi, phi);
        for (std::size_t i = 0; i < phi.data.size(); ++i)
            phi.data[i] += moved.data[i];
    }
    return phi;
}

VectorField exp_backward(const ExpTrace& trace, const VectorField& grad_out)
{
    if (trace.steps < 0)
        throw StateError("exp trace has negative step count");
    if (trace.inputs.size() != static_cast<std::size_t>(trace.steps))
        throw StateError("exp trace records " + std::to_string(trace.inputs.size())
                         + " steps, expected " + std::to_string(trace.steps));
    if (trace.steps == 0)
        return grad_out;

    const std::int64_t n = voxel_count(grad_out.dims);
    VectorField g = grad_out;
    for (int s = trace.steps - 1; s >= 0; --s) {
        const VectorField& u = trace.inputs[static_cast<std::size_t>(s)];
        if (u.dims != g.dims)
            throw StateError("exp trace dims do not match gradient dims");

        // out = u + warp_field(u, u); three paths feed the input gradient.
        VectorField g_in = g;
        for (int c = 0; c < 3; ++c) {
            const ScalarVolume u_c = channel_view(u, c);
            ScalarVolume up_c;
            up_c.dims = g.dims;
            up_c.spacing = g.spacing;
            const double* gc = g.channel(c);
            up_c.data.assign(gc, gc + n);

            // Gradient through the sampled copy of channel c.
            const ScalarVolume splat = warp_adjoint_moving(u, up_c);
            double* dst_c = g_in.data.data() + g_in.channel_offset(c);
            for (std::int64_t i = 0; i < n; ++i)
                dst_c[i] += splat.data[static_cast<std::size_t>(i)];

            // Gradient through the sampling positions x + u(x).
            const VectorField pos = warp_backward(u_c, u, up_c);
            for (std::size_t i = 0; i < g_in.data.size(); ++i)
                g_in.data[i] += pos.data[i];
        }
        g = std::move(g_in);
    }

    const double scale = std::ldexp(1.0, -trace.steps);
    for (double& v : g.data)
        v *= scale;
    return g;
}

} // namespace wreg
