#include "wreg/optimizer.hpp"

#include <cmath>
#include <string>

#include "wreg/diffeo.hpp"
#include "wreg/errors.hpp"
#include "wreg/metrics.hpp"

namespace wreg {

AdamState adam_init(std::size_t n, double lr)
{
    if (!(lr > 0.0))
        throw ConfigError("learning rate must be positive");
    AdamState state;
    state.lr = lr;
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    return state;
}

void adam_step(AdamState& state, std::vector<double>& params,
               const std::vector<double>& grad)
{
    if (params.size() != state.m.size() || grad.size() != state.m.size())
        throw ShapeError("adam: parameter/gradient size does not match state");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

std::int64_t ParamGroup::size() const
{
    std::int64_t n = 0;
    for (const auto& [b, e] : ranges)
        n += e - b;
    return n;
}

void adam_step_group(AdamState& state, const ParamGroup& group,
                     std::vector<double>& params, const std::vector<double>& grad)
{
    if (params.size() != grad.size())
        throw ShapeError("adam: parameter/gradient length mismatch");
    const std::size_t n = static_cast<std::size_t>(group.size());
    std::vector<double> p(n), g(n);
    std::size_t k = 0;
    for (const auto& [b, e] : group.ranges)
        for (std::int64_t i = b; i < e; ++i, ++k) {
            p[k] = params[static_cast<std::size_t>(i)];
            g[k] = grad[static_cast<std::size_t>(i)];
        }
    adam_step(state, p, g);
    k = 0;
    for (const auto& [b, e] : group.ranges)
        for (std::int64_t i = b; i < e; ++i, ++k)
            params[static_cast<std::size_t>(i)] = p[k];
}

RegistrationResult register_volumes(const ScalarVolume& moving,
                                    const ScalarVolume& fixed,
                                    const RegistrationConfig& config)
{
    if (moving.dims != fixed.dims)
        throw ShapeError("register: moving and fixed dims differ");
    for (const int it : config.stage_iterations)
        if (it < 0)
            throw ConfigError("stage iteration counts must be non-negative");
    if (!(config.lr > 0.0))
        throw ConfigError("learning rate must be positive");

    CoefficientPyramid pyr = init_pyramid(moving.dims, config.wavelet);
    std::vector<double> flat = pyramid_flatten(pyr);
    const ParamLayout lay = pyramid_layout(pyr);

    const std::array<ParamGroup, 3> groups{
        ParamGroup{{{lay.phi1_begin, lay.phi1_end}}},
        ParamGroup{{{lay.res2_begin, lay.res2_end}, {lay.gates2_begin, lay.gates2_end}}},
        ParamGroup{{{lay.res3_begin, lay.res3_end}, {lay.gates3_begin, lay.gates3_end}}}};
    std::array<AdamState, 3> states;

    RegistrationResult result;
    result.stage_iterations = config.stage_iterations;
    std::int64_t total = 0;
    for (const int it : config.stage_iterations)
        total += it;
    result.loss_history.reserve(static_cast<std::size_t>(total));

    int iteration = 0;
    for (int stage = 0; stage < 3; ++stage) {
        states[static_cast<std::size_t>(stage)] = adam_init(
            static_cast<std::size_t>(groups[static_cast<std::size_t>(stage)].size()),
            config.lr);
        for (int s = 0; s < config.stage_iterations[static_cast<std::size_t>(stage)];
             ++s, ++iteration) {
            pyramid_unflatten(flat, pyr);
            const VectorField field = reconstruct_flow(pyr);
            const TotalLoss tl = total_loss(moving, fixed, field, config.loss,
                                            config.diffeomorphic, config.sq_steps);
            if (!std::isfinite(tl.value))
                throw DivergenceError("loss not finite at iteration "
                                      + std::to_string(iteration));
            result.loss_history.push_back(tl.value);
            if (config.on_iteration)
                config.on_iteration(
                    {stage + 1, iteration, tl.value, tl.similarity, tl.regularizer});

            const CoefficientPyramid grad_pyr = flow_gradient_to_coeffs(pyr, tl.grad);
            const std::vector<double> grad = pyramid_flatten(grad_pyr);
            for (int g = 0; g <= stage; ++g)
                adam_step_group(states[static_cast<std::size_t>(g)],
                                groups[static_cast<std::size_t>(g)], flat, grad);
        }
    }

    pyramid_unflatten(flat, pyr);
    result.pyramid = pyr;
    const VectorField field = reconstruct_flow(pyr);
    result.flow = config.diffeomorphic
                      ? scaling_and_squaring(field, config.sq_steps)
                      : field;

    const TotalLoss final_tl = total_loss(moving, fixed, field, config.loss,
                                          config.diffeomorphic, config.sq_steps);
    if (!std::isfinite(final_tl.value))
        throw DivergenceError("loss not finite after final update");
    result.diagnostics.final_similarity = final_tl.similarity;
    result.diagnostics.final_smoothness = final_tl.regularizer;
    result.diagnostics.neg_jac_percent = neg_jac_fraction(result.flow);
    return result;
}

} // namespace wreg
