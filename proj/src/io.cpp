#include "wreg/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "wreg/errors.hpp"

namespace wreg {

namespace {

constexpr const char* kVolumeMagic = "wreg volume header v1";
constexpr const char* kPyramidMagic = "wreg pyramid header v1";

void put_f32le(std::string& buf, double value)
{
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    buf.push_back(static_cast<char>(bits & 0xff));
    buf.push_back(static_cast<char>((bits >> 8) & 0xff));
    buf.push_back(static_cast<char>((bits >> 16) & 0xff));
    buf.push_back(static_cast<char>((bits >> 24) & 0xff));
}

double get_f32le(const unsigned char* p)
{
    const std::uint32_t bits = static_cast<std::uint32_t>(p[0])
                             | static_cast<std::uint32_t>(p[1]) << 8
                             | static_cast<std::uint32_t>(p[2]) << 16
                             | static_cast<std::uint32_t>(p[3]) << 24;
    return static_cast<double>(std::bit_cast<float>(bits));
}

void write_raw(const std::string& path, const std::vector<double>& data)
{
    std::string buf;
    buf.reserve(data.size() * 4);
    for (const double v : data)
        put_f32le(buf, v);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out)
        throw IoError("short write to " + path);
}

std::vector<double> read_raw(const std::string& path, std::size_t expected_samples)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    if (buf.size() != expected_samples * 4)
        throw IoError(path + ": expected " + std::to_string(expected_samples * 4)
                      + " bytes, found " + std::to_string(buf.size()));
    std::vector<double> data(expected_samples);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    for (std::size_t i = 0; i < expected_samples; ++i)
        data[i] = get_f32le(p + i * 4);
    return data;
}

const char* role_to_string(VolumeRole role)
{
    switch (role) {
    case VolumeRole::image:
        return "image";
    case VolumeRole::flow:
        return "flow";
    case VolumeRole::labels:
        return "labels";
    }
    return "image";
}

VolumeRole role_from_string(const std::string& name, const std::string& path)
{
    if (name == "image")
        return VolumeRole::image;
    if (name == "flow")
        return VolumeRole::flow;
    if (name == "labels")
        return VolumeRole::labels;
    throw IoError(path + ": unknown role '" + name + "'");
}

struct Header {
    Dims3 dims{0, 0, 0};
    Spacing3 spacing{1.0, 1.0, 1.0};
    int channels = 1;
    VolumeRole role = VolumeRole::image;
};

void write_header(const std::string& path, const Header& hdr)
{
    std::ostringstream out;
    out << kVolumeMagic << "\n";
    out << "dims " << hdr.dims[0] << " " << hdr.dims[1] << " " << hdr.dims[2] << "\n";
    out << "spacing " << hdr.spacing[0] << " " << hdr.spacing[1] << " "
        << hdr.spacing[2] << "\n";
    out << "channels " << hdr.channels << "\n";
    out << "dtype float32-le\n";
    out << "role " << role_to_string(hdr.role) << "\n";
    std::ofstream f(path + ".hdr", std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path + ".hdr for writing");
    f << out.str();
    if (!f)
        throw IoError("short write to " + path + ".hdr");
}

std::string expect_line(std::istream& in, const std::string& path)
{
    std::string line;
    if (!std::getline(in, line))
        throw IoError(path + ".hdr: truncated header");
    return line;
}

Header read_header(const std::string& path)
{
    std::ifstream in(path + ".hdr");
    if (!in)
        throw IoError("cannot open " + path + ".hdr");
    if (expect_line(in, path) != kVolumeMagic)
        throw IoError(path + ".hdr: bad magic line");

    Header hdr;
    std::string key;
    {
        std::istringstream ls(expect_line(in, path));
        if (!(ls >> key >> hdr.dims[0] >> hdr.dims[1] >> hdr.dims[2]) || key != "dims")
            throw IoError(path + ".hdr: bad dims line");
        for (const int d : hdr.dims)
            if (d <= 0)
                throw IoError(path + ".hdr: non-positive dimension");
    }
    {
        std::istringstream ls(expect_line(in, path));
        if (!(ls >> key >> hdr.spacing[0] >> hdr.spacing[1] >> hdr.spacing[2])
            || key != "spacing")
            throw IoError(path + ".hdr: bad spacing line");
        for (const double s : hdr.spacing)
            if (!(s > 0.0))
                throw IoError(path + ".hdr: non-positive spacing");
    }
    {
        std::istringstream ls(expect_line(in, path));
        if (!(ls >> key >> hdr.channels) || key != "channels"
            || (hdr.channels != 1 && hdr.channels != 3))
            throw IoError(path + ".hdr: bad channels line");
    }
    if (expect_line(in, path) != "dtype float32-le")
        throw IoError(path + ".hdr: unsupported dtype");
    {
        std::istringstream ls(expect_line(in, path));
        std::string role;
        if (!(ls >> key >> role) || key != "role")
            throw IoError(path + ".hdr: bad role line");
        hdr.role = role_from_string(role, path);
    }
    return hdr;
}

} // namespace

void write_volume(const std::string& path, const ScalarVolume& vol, VolumeRole role)
{
    if (vol.data.size() != static_cast<std::size_t>(voxel_count(vol.dims)))
        throw ShapeError("write_volume: data length does not match dims");
    write_header(path, {vol.dims, vol.spacing, 1, role});
    write_raw(path, vol.data);
}

ScalarVolume read_volume(const std::string& path)
{
    const Header hdr = read_header(path);
    if (hdr.channels != 1)
        throw IoError(path + ": expected a scalar volume, found " +
                      std::to_string(hdr.channels) + " channels");
    ScalarVolume vol;
    vol.dims = hdr.dims;
    vol.spacing = hdr.spacing;
    vol.data = read_raw(path, static_cast<std::size_t>(voxel_count(hdr.dims)));
    return vol;
}

void write_field(const std::string& path, const VectorField& field)
{
    if (field.data.size() != static_cast<std::size_t>(3 * voxel_count(field.dims)))
        throw ShapeError("write_field: data length does not match dims");
    write_header(path, {field.dims, field.spacing, 3, VolumeRole::flow});
    write_raw(path, field.data);
}

VectorField read_field(const std::string& path)
{
    const Header hdr = read_header(path);
    if (hdr.channels != 3)
        throw IoError(path + ": expected a 3-channel field, found " +
                      std::to_string(hdr.channels));
    VectorField field;
    field.dims = hdr.dims;
    field.spacing = hdr.spacing;
    field.data = read_raw(path, static_cast<std::size_t>(3 * voxel_count(hdr.dims)));
    return field;
}

void write_labels(const std::string& path, const LabelVolume& labels)
{
    if (labels.labels.size() != static_cast<std::size_t>(voxel_count(labels.dims)))
        throw ShapeError("write_labels: data length does not match dims");
    write_header(path, {labels.dims, labels.spacing, 1, VolumeRole::labels});
    std::vector<double> data(labels.labels.begin(), labels.labels.end());
    write_raw(path, data);
}

LabelVolume read_labels(const std::string& path)
{
    const Header hdr = read_header(path);
    if (hdr.channels != 1 || hdr.role != VolumeRole::labels)
        throw IoError(path + ": not a label volume");
    const std::vector<double> data =
        read_raw(path, static_cast<std::size_t>(voxel_count(hdr.dims)));
    LabelVolume out;
    out.dims = hdr.dims;
    out.spacing = hdr.spacing;
    out.labels.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double v = data[i];
        if (v != std::floor(v) || std::abs(v) > 1e6)
            throw IoError(path + ": non-integral label value");
        out.labels[i] = static_cast<int>(v);
    }
    return out;
}

VolumeRole peek_role(const std::string& path)
{
    return read_header(path).role;
}

void write_pyramid(const std::string& path, const CoefficientPyramid& pyr)
{
    std::ostringstream hdr;
    hdr << kPyramidMagic << "\n";
    hdr << "dims " << pyr.full_dims[0] << " " << pyr.full_dims[1] << " "
        << pyr.full_dims[2] << "\n";
    hdr << "wavelet " << wavelet_to_string(pyr.wavelet) << "\n";
    hdr << "params " << pyramid_param_count(pyr) << "\n";
    hdr << "dtype float32-le\n";
    std::ofstream f(path + ".hdr", std::ios::trunc);
    if (!f)
        throw IoError("cannot open " + path + ".hdr for writing");
    f << hdr.str();
    if (!f)
        throw IoError("short write to " + path + ".hdr");
    write_raw(path, pyramid_flatten(pyr));
}

CoefficientPyramid read_pyramid(const std::string& path)
{
    std::ifstream in(path + ".hdr");
    if (!in)
        throw IoError("cannot open " + path + ".hdr");
    if (expect_line(in, path) != kPyramidMagic)
        throw IoError(path + ".hdr: bad magic line");

    Dims3 dims{};
    std::string key;
    {
        std::istringstream ls(expect_line(in, path));
        if (!(ls >> key >> dims[0] >> dims[1] >> dims[2]) || key != "dims")
            throw IoError(path + ".hdr: bad dims line");
    }
    WaveletKind kind;
    {
        std::istringstream ls(expect_line(in, path));
        std::string name;
        if (!(ls >> key >> name) || key != "wavelet")
            throw IoError(path + ".hdr: bad wavelet line");
        try {
            kind = wavelet_from_string(name);
        } catch (const ConfigError&) {
            throw IoError(path + ".hdr: unknown wavelet '" + name + "'");
        }
    }
    std::int64_t count = 0;
    {
        std::istringstream ls(expect_line(in, path));
        if (!(ls >> key >> count) || key != "params")
            throw IoError(path + ".hdr: bad params line");
    }
    if (expect_line(in, path) != "dtype float32-le")
        throw IoError(path + ".hdr: unsupported dtype");

    CoefficientPyramid pyr = init_pyramid(dims, kind);
    if (count != pyramid_param_count(pyr))
        throw IoError(path + ".hdr: parameter count " + std::to_string(count)
                      + " does not match dims");
    const std::vector<double> flat = read_raw(path, static_cast<std::size_t>(count));
    pyramid_unflatten(flat, pyr);
    return pyr;
}

ScalarVolume pad_to_multiple(const ScalarVolume& vol, int multiple, CropRecord& rec)
{
    if (multiple <= 0)
        throw ConfigError("pad multiple must be positive");
    Dims3 padded{};
    for (int a = 0; a < 3; ++a) {
        const int m = vol.dims[a] % multiple;
        padded[a] = m == 0 ? vol.dims[a] : vol.dims[a] + (multiple - m);
        rec.offsets[a] = (padded[a] - vol.dims[a]) / 2;
    }
    rec.orig_dims = vol.dims;
    if (padded == vol.dims)
        return vol;

    ScalarVolume out = make_volume(padded);
    out.spacing = vol.spacing;
    for (int d = 0; d < vol.dims[0]; ++d)
        for (int h = 0; h < vol.dims[1]; ++h)
            for (int w = 0; w < vol.dims[2]; ++w)
                out.at(d + rec.offsets[0], h + rec.offsets[1], w + rec.offsets[2]) =
                    vol.at(d, h, w);
    return out;
}

ScalarVolume crop_volume(const ScalarVolume& vol, const CropRecord& rec)
{
    for (int a = 0; a < 3; ++a)
        if (rec.offsets[a] < 0 || rec.offsets[a] + rec.orig_dims[a] > vol.dims[a])
            throw ShapeError("crop record does not fit inside the volume");
    ScalarVolume out = make_volume(rec.orig_dims);
    out.spacing = vol.spacing;
    for (int d = 0; d < rec.orig_dims[0]; ++d)
        for (int h = 0; h < rec.orig_dims[1]; ++h)
            for (int w = 0; w < rec.orig_dims[2]; ++w)
                out.at(d, h, w) =
                    vol.at(d + rec.offsets[0], h + rec.offsets[1], w + rec.offsets[2]);
    return out;
}

VectorField crop_field(const VectorField& field, const CropRecord& rec)
{
    for (int a = 0; a < 3; ++a)
        if (rec.offsets[a] < 0 || rec.offsets[a] + rec.orig_dims[a] > field.dims[a])
            throw ShapeError("crop record does not fit inside the field");
    VectorField out = make_field(rec.orig_dims);
    out.spacing = field.spacing;
    const std::int64_t n = voxel_count(rec.orig_dims);
    for (int c = 0; c < 3; ++c) {
        const double* src = field.channel(c);
        double* dst = out.data.data() + c * n;
        const std::int64_t sH = field.dims[2];
        const std::int64_t sD = static_cast<std::int64_t>(field.dims[1]) * field.dims[2];
        std::int64_t o = 0;
        for (int d = 0; d < rec.orig_dims[0]; ++d)
            for (int h = 0; h < rec.orig_dims[1]; ++h)
                for (int w = 0; w < rec.orig_dims[2]; ++w, ++o)
                    dst[o] = src[(d + rec.offsets[0]) * sD + (h + rec.offsets[1]) * sH
                                 + (w + rec.offsets[2])];
    }
    return out;
}

} // namespace wreg
