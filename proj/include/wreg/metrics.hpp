#pragma once

#include <map>
#include <vector>

#include "wreg/volume.hpp"

namespace wreg {

// Integer segmentation on the same grid layout as ScalarVolume; 0 means
// background.
struct LabelVolume {
    Dims3 dims{0, 0, 0};
    Spacing3 spacing{1.0, 1.0, 1.0};
    std::vector<int> labels;
};

// Dice overlap per label: 2|A n B| / (|A| + |B|).  A label absent from both
// volumes has no defined score and is left out of the result; absent from
// only one scores 0.
std::map<int, double> dice(const LabelVolume& a, const LabelVolume& b,
                           const std::vector<int>& labels);

// Same, over every nonzero label present in either volume.
std::map<int, double> dice(const LabelVolume& a, const LabelVolume& b);

// Symmetric percentile Hausdorff distance between the voxel-center point sets
// of one label, in physical units (voxel index times spacing).  percentile
// 100 is the classic maximum.  A label missing from either volume throws
// MetricError.
double hausdorff(const LabelVolume& a, const LabelVolume& b, int label,
                 double percentile = 100.0);

// Percent of interior voxels where det(I + du/dx) is negative.  Face voxels, whose
// one-sided estimates are less trustworthy, are not counted.
double neg_jac_fraction(const VectorField& flow);

// Nearest-neighbour warp for segmentations: out(x) = labels(round(x + flow(x))),
// sample positions clamped to the grid.
LabelVolume warp_labels(const LabelVolume& labels, const VectorField& flow);

} // namespace wreg
