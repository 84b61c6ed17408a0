#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "wreg/errors.hpp"
#include "wreg/io.hpp"
#include "wreg/pyramid.hpp"
#include "wreg/volume.hpp"

using namespace wreg;
namespace fs = std::filesystem;

namespace {

std::string scratch(const std::string& name)
{
    static const fs::path dir = [] {
        const fs::path p = fs::temp_directory_path() / "wreg_io_tests";
        fs::create_directories(p);
        return p;
    }();
    return (dir / name).string();
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("volume round trip keeps float-exact samples and metadata")
{
    ScalarVolume vol = make_volume({3, 4, 5});
    vol.spacing = {1.5, 0.5, 2.0};
    for (std::size_t i = 0; i < vol.data.size(); ++i)
        vol.data[i] = 0.25 * static_cast<double>(i) - 3.0;

    const std::string path = scratch("vol.raw");
    write_volume(path, vol);
    const ScalarVolume back = read_volume(path);
    CHECK(back.dims == vol.dims);
    CHECK(back.spacing == vol.spacing);
    CHECK(back.data == vol.data);
    CHECK(peek_role(path) == VolumeRole::image);
}

TEST_CASE("samples are quantized to float32 on the way out")
{
    ScalarVolume vol = make_volume({1, 1, 2});
    vol.data = {0.1, 1.0 / 3.0};
    const std::string path = scratch("quant.raw");
    write_volume(path, vol);
    const ScalarVolume back = read_volume(path);
    CHECK(back.data[0] == static_cast<double>(0.1f));
    CHECK(back.data[1] == static_cast<double>(static_cast<float>(1.0 / 3.0)));
    CHECK(back.data[0] != 0.1);
}

TEST_CASE("payload is little-endian float32")
{
    ScalarVolume vol = make_volume({1, 1, 1}, 1.0);
    const std::string path = scratch("le.raw");
    write_volume(path, vol);
    const std::string bytes = slurp(path);
    REQUIRE(bytes.size() == 4);
    CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[1]) == 0x00);
    CHECK(static_cast<unsigned char>(bytes[2]) == 0x80);
    CHECK(static_cast<unsigned char>(bytes[3]) == 0x3f);
}

TEST_CASE("sidecar header is the documented five-field text block")
{
    ScalarVolume vol = make_volume({2, 3, 4}, 0.5);
    const std::string path = scratch("hdr.raw");
    write_volume(path, vol, VolumeRole::image);
    std::ifstream hdr(path + ".hdr");
    std::string line;
    std::getline(hdr, line);
    CHECK(line == "wreg volume header v1");
    std::getline(hdr, line);
    CHECK(line == "dims 2 3 4");
    std::getline(hdr, line);
    CHECK(line == "spacing 1 1 1");
    std::getline(hdr, line);
    CHECK(line == "channels 1");
    std::getline(hdr, line);
    CHECK(line == "dtype float32-le");
    std::getline(hdr, line);
    CHECK(line == "role image");
}

TEST_CASE("truncated payload reports expected and actual byte counts")
{
    ScalarVolume vol = make_volume({2, 3, 5}, 1.25);
    const std::string path = scratch("trunc.raw");
    write_volume(path, vol);
    fs::resize_file(path, 4 * 30 - 3);
    try {
        read_volume(path);
        FAIL("read_volume accepted a truncated payload");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("expected 120 bytes") != std::string::npos);
        CHECK(msg.find("found 117") != std::string::npos);
    }
}

TEST_CASE("missing or corrupt headers are rejected")
{
    const std::string path = scratch("noheader.raw");
    std::ofstream(path, std::ios::binary) << "junk";
    CHECK_THROWS_AS(read_volume(path), IoError);

    ScalarVolume vol = make_volume({2, 2, 2}, 1.0);
    const std::string ok = scratch("corrupt.raw");
    write_volume(ok, vol);
    std::ofstream(ok + ".hdr", std::ios::trunc) << "not a header\n";
    CHECK_THROWS_AS(read_volume(ok), IoError);
}

TEST_CASE("roles gate the typed readers")
{
    const std::string vpath = scratch("img.raw");
    write_volume(vpath, make_volume({2, 2, 2}, 0.5));

    VectorField field = make_field({2, 2, 2});
    for (std::size_t i = 0; i < field.data.size(); ++i)
        field.data[i] = static_cast<double>(i) * 0.5;
    const std::string fpath = scratch("field.raw");
    write_field(fpath, field);
    CHECK(peek_role(fpath) == VolumeRole::flow);

    const VectorField fback = read_field(fpath);
    CHECK(fback.dims == field.dims);
    CHECK(fback.data == field.data);

    CHECK_THROWS_AS(read_volume(fpath), IoError);  // 3 channels
    CHECK_THROWS_AS(read_field(vpath), IoError);   // 1 channel
    CHECK_THROWS_AS(read_labels(vpath), IoError);  // wrong role
}

TEST_CASE("label round trip and the integral check")
{
    LabelVolume labels;
    labels.dims = {2, 3, 4};
    labels.spacing = {1.0, 2.0, 1.0};
    labels.labels.resize(24);
    for (std::size_t i = 0; i < labels.labels.size(); ++i)
        labels.labels[i] = static_cast<int>(i % 3);
    const std::string path = scratch("labels.raw");
    write_labels(path, labels);
    CHECK(peek_role(path) == VolumeRole::labels);
    const LabelVolume back = read_labels(path);
    CHECK(back.dims == labels.dims);
    CHECK(back.spacing == labels.spacing);
    CHECK(back.labels == labels.labels);

    // a labels-role file holding 0.5 must not pass the integral check
    ScalarVolume sneaky = make_volume({1, 1, 2});
    sneaky.data = {1.0, 0.5};
    const std::string bad = scratch("badlabels.raw");
    write_volume(bad, sneaky, VolumeRole::labels);
    CHECK_THROWS_AS(read_labels(bad), IoError);
}

TEST_CASE("pyramid round trip preserves parameters, dims, and wavelet")
{
    for (const WaveletKind kind : {WaveletKind::haar, WaveletKind::db2}) {
        CoefficientPyramid pyr = init_pyramid({16, 16, 16}, kind);
        std::vector<double> flat = pyramid_flatten(pyr);
        for (std::size_t i = 0; i < flat.size(); ++i)
            flat[i] = 0.5 * static_cast<double>(i) - 100.0; // exact in float32
        pyramid_unflatten(flat, pyr);

        const std::string path = scratch("pyr.raw");
        write_pyramid(path, pyr);
        const CoefficientPyramid back = read_pyramid(path);
        CHECK(back.full_dims == pyr.full_dims);
        CHECK(back.wavelet == kind);
        CHECK(pyramid_flatten(back) == flat);
    }
}

TEST_CASE("pyramid header validation")
{
    CoefficientPyramid pyr = init_pyramid({16, 16, 16}, WaveletKind::haar);
    const std::string path = scratch("pyrbad.raw");
    write_pyramid(path, pyr);

    // header advertising the wrong parameter count must be rejected
    std::ofstream(path + ".hdr", std::ios::trunc)
        << "wreg pyramid header v1\ndims 16 16 16\nwavelet haar\n"
        << "params 12\ndtype float32-le\n";
    CHECK_THROWS_AS(read_pyramid(path), IoError);

    std::ofstream(path + ".hdr", std::ios::trunc)
        << "wreg pyramid header v1\ndims 16 16 16\nwavelet sym4\n"
        << "params 12316\ndtype float32-le\n";
    CHECK_THROWS_AS(read_pyramid(path), IoError);
}

TEST_CASE("pad_to_multiple: already aligned input comes back unchanged")
{
    testutil::Rng rng(3);
    const ScalarVolume vol = testutil::random_volume({16, 16, 16}, rng);
    CropRecord rec;
    const ScalarVolume padded = pad_to_multiple(vol, 8, rec);
    CHECK(padded.dims == vol.dims);
    CHECK(padded.data == vol.data);
    CHECK(rec.orig_dims == vol.dims);
    CHECK(rec.offsets == Dims3{0, 0, 0});
}

TEST_CASE("pad_to_multiple: centering, zero borders, crop inverse")
{
    testutil::Rng rng(4);
    ScalarVolume vol = testutil::random_volume({15, 17, 16}, rng, 0.5, 1.5);
    vol.spacing = {1.0, 1.0, 2.5};
    CropRecord rec;
    const ScalarVolume padded = pad_to_multiple(vol, 8, rec);
    CHECK(padded.dims == Dims3{16, 24, 16});
    CHECK(padded.spacing == vol.spacing);
    CHECK(rec.offsets == Dims3{0, 3, 0});

    // everything outside the embedded block is zero
    for (int d = 0; d < 16; ++d)
        for (int h = 0; h < 24; ++h)
            for (int w = 0; w < 16; ++w) {
                const bool inside = d < 15 && h >= 3 && h < 20;
                if (inside)
                    CHECK(padded.at(d, h, w) == vol.at(d, h - 3, w));
                else
                    CHECK(padded.at(d, h, w) == 0.0);
            }

    const ScalarVolume cropped = crop_volume(padded, rec);
    CHECK(cropped.dims == vol.dims);
    CHECK(cropped.data == vol.data);

    CHECK_THROWS_AS(pad_to_multiple(vol, 0, rec), ConfigError);
}

TEST_CASE("crop_field extracts the recorded block per channel")
{
    testutil::Rng rng(9);
    const VectorField big = testutil::random_field({8, 8, 8}, rng, 2.0);
    CropRecord rec;
    rec.orig_dims = {4, 5, 3};
    rec.offsets = {2, 1, 4};
    const VectorField small = crop_field(big, rec);
    CHECK(small.dims == rec.orig_dims);
    for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 4; ++d)
            for (int h = 0; h < 5; ++h)
                for (int w = 0; w < 3; ++w) {
                    const std::int64_t si =
                        ((static_cast<std::int64_t>(d) + 2) * 8 + (h + 1)) * 8 + (w + 4);
                    const std::int64_t di =
                        (static_cast<std::int64_t>(d) * 5 + h) * 3 + w;
                    CHECK(small.channel(c)[di] == big.channel(c)[si]);
                }

    rec.offsets = {6, 0, 0}; // 6 + 4 > 8
    CHECK_THROWS_AS(crop_field(big, rec), ShapeError);
}
