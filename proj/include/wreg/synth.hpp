#pragma once

#include <cstdint>
#include <string>

#include "wreg/metrics.hpp"
#include "wreg/volume.hpp"

namespace wreg {

enum class SynthKind { translation, gaussian_bumps, radial };

SynthKind synth_kind_from_string(const std::string& name);
const char* synth_kind_to_string(SynthKind kind);

struct SynthSpec {
    SynthKind kind = SynthKind::gaussian_bumps;
    Dims3 dims{48, 48, 48};
    double max_disp = 6.0;  // peak displacement magnitude, voxels
    std::uint64_t seed = 0;
    bool with_labels = false;
};

// fixed is the intensity phantom and moving == warp(fixed, gt_flow) exactly.
// A registration run that deforms the phantom onto the warped copy (phantom
// as its moving input, warped copy as its fixed input) therefore recovers
// gt_flow.  Label volumes (concentric spheres around the centre,
// nearest-neighbour warped the same way) are produced only when with_labels
// is set.
struct SynthPair {
    ScalarVolume moving, fixed;
    VectorField gt_flow;
    LabelVolume labels_moving, labels_fixed;
};

// Deterministic for a given spec: the same seed yields the same pair on any
// platform.  The bump and radial fields vanish at the borders and are
// rescaled until the ground-truth map stays clearly folding-free.  max_disp
// must be non-negative and below a quarter of the smallest dimension.
SynthPair synth_pair(const SynthSpec& spec);

} // namespace wreg
