#pragma once

#include <string>

#include "wreg/metrics.hpp"
#include "wreg/pyramid.hpp"
#include "wreg/volume.hpp"

namespace wreg {

// On-disk layout: <path> holds little-endian float32 samples (channel-major
// for fields) and <path>.hdr is a small text sidecar:
//
//   wreg volume header v1
//   dims <D> <H> <W>
//   spacing <sd> <sh> <sw>
//   channels <C>
//   dtype float32-le
//   role image|flow|labels
//
// Readers validate every line and the payload byte count; labels additionally
// must hold integral values.

enum class VolumeRole { image, flow, labels };

void write_volume(const std::string& path, const ScalarVolume& vol,
                  VolumeRole role = VolumeRole::image);
ScalarVolume read_volume(const std::string& path);

void write_field(const std::string& path, const VectorField& field);
VectorField read_field(const std::string& path);

void write_labels(const std::string& path, const LabelVolume& labels);
LabelVolume read_labels(const std::string& path);

// Role recorded in a header, without loading the payload.
VolumeRole peek_role(const std::string& path);

// Pyramid files reuse the raw+sidecar scheme with their own header carrying
// the wavelet name and full dims; the payload is the flat parameter vector.
void write_pyramid(const std::string& path, const CoefficientPyramid& pyr);
CoefficientPyramid read_pyramid(const std::string& path);

// Where the original block sits inside a padded grid.
struct CropRecord {
    Dims3 orig_dims{0, 0, 0};
    Dims3 offsets{0, 0, 0};
};

// Zero-pads each dimension symmetrically up to the next multiple so the
// pyramid's divisibility requirement holds for arbitrary inputs.
ScalarVolume pad_to_multiple(const ScalarVolume& vol, int multiple, CropRecord& rec);

ScalarVolume crop_volume(const ScalarVolume& vol, const CropRecord& rec);
VectorField crop_field(const VectorField& field, const CropRecord& rec);

} // namespace wreg
