#pragma once

#include <vector>

#include "wreg/volume.hpp"

namespace wreg {

// Record of a scaling-and-squaring run: the field entering each squaring
// step, needed to pull gradients back through the recursion.
struct ExpTrace {
    int steps = 0;
    std::vector<VectorField> inputs;
};

// Integrates a stationary velocity field: v is halved `steps` times, then the
// map is squared back up via phi <- phi + phi o (id + phi).  steps == 0
// returns the input unchanged.
VectorField scaling_and_squaring(const VectorField& velocity, int steps,
                                 ExpTrace* trace = nullptr);

// Gradient of the integrated map with respect to the velocity, replaying the
// recorded squarings in reverse.  The trace must come from a forward call
// with matching dims; anything else throws StateError.
VectorField exp_backward(const ExpTrace& trace, const VectorField& grad_out);

} // namespace wreg
