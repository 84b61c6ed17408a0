#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"
#include "wreg/errors.hpp"
#include "wreg/pyramid.hpp"
#include "wreg/wavelet.hpp"

using namespace wreg;
using testutil::Rng;

namespace {

CoefficientPyramid random_pyramid(const Dims3& dims, WaveletKind kind, Rng& rng,
                                  double amp = 1.0)
{
    CoefficientPyramid pyr = init_pyramid(dims, kind);
    for (auto& band : pyr.phi1.bands)
        for (double& v : band)
            v = rng.uniform(-amp, amp);
    for (auto& band : pyr.res2)
        for (double& v : band)
            v = rng.uniform(-amp, amp);
    for (auto& band : pyr.res3)
        for (double& v : band)
            v = rng.uniform(-amp, amp);
    return pyr;
}

void set_gates(CoefficientPyramid& pyr, double a, double b)
{
    for (auto& g : pyr.gates2)
        g = {a, b};
    for (auto& g : pyr.gates3)
        g = {a, b};
}

double pyramid_energy(const CoefficientPyramid& pyr)
{
    double e = 0.0;
    for (const auto& band : pyr.phi1.bands)
        for (const double v : band)
            e += v * v;
    for (const auto& band : pyr.res2)
        for (const double v : band)
            e += v * v;
    for (const auto& band : pyr.res3)
        for (const double v : band)
            e += v * v;
    return e;
}

} // namespace

TEST_CASE("init_pyramid shapes, zeros and gate defaults")
{
    const CoefficientPyramid pyr = init_pyramid({16, 16, 16}, WaveletKind::haar);
    CHECK(pyr.level1_dims() == Dims3{2, 2, 2});
    CHECK(pyr.level2_dims() == Dims3{4, 4, 4});
    CHECK(pyr.level3_dims() == Dims3{8, 8, 8});
    CHECK(pyr.phi1.band_size() == 3 * 8);
    CHECK(pyr.res2[0].size() == static_cast<std::size_t>(3 * 64));
    CHECK(pyr.res3[6].size() == static_cast<std::size_t>(3 * 512));
    CHECK(pyramid_energy(pyr) == 0.0);
    for (const auto& g : pyr.gates2) {
        CHECK(g[0] == 1.0);
        CHECK(g[1] == 1.0);
    }

    const VectorField zero = reconstruct_flow(pyr);
    CHECK(testutil::max_abs(zero.data) == 0.0);

    CHECK_THROWS_AS(init_pyramid({20, 16, 16}, WaveletKind::haar), ShapeError);
    CHECK_THROWS_AS(init_pyramid({8, 8, 8}, WaveletKind::db2), ShapeError);
    CHECK_NOTHROW(init_pyramid({8, 8, 8}, WaveletKind::haar));
}

TEST_CASE("parameter count audit")
{
    const CoefficientPyramid pyr = init_pyramid({16, 16, 16}, WaveletKind::haar);
    // 8 bands * 3 ch * 2^3 + 7 * 3 * 4^3 + 7 * 3 * 8^3 + 2 gates * 7 bands * 2 levels
    const std::int64_t expect = 8 * 3 * 8 + 7 * 3 * 64 + 7 * 3 * 512 + 28;
    CHECK(expect == 12316);
    CHECK(pyramid_param_count(pyr) == expect);
    CHECK(pyramid_layout(pyr).total == expect);
    CHECK(pyramid_flatten(pyr).size() == static_cast<std::size_t>(expect));

    const CoefficientPyramid big = init_pyramid({48, 32, 64}, WaveletKind::db2);
    const std::int64_t n1 = (48 / 8) * (32 / 8) * (64 / 8);
    const std::int64_t n2 = (48 / 4) * (32 / 4) * (64 / 4);
    const std::int64_t n3 = (48 / 2) * (32 / 2) * (64 / 2);
    CHECK(pyramid_param_count(big) == 8 * 3 * n1 + 7 * 3 * n2 + 7 * 3 * n3 + 28);
}

TEST_CASE("flatten and unflatten round-trip in layout order")
{
    Rng rng(20);
    const CoefficientPyramid pyr = random_pyramid({16, 16, 16}, WaveletKind::haar, rng);
    const std::vector<double> flat = pyramid_flatten(pyr);

    CoefficientPyramid back = init_pyramid({16, 16, 16}, WaveletKind::haar);
    pyramid_unflatten(flat, back);
    CHECK(testutil::max_abs_diff(pyramid_flatten(back), flat) == 0.0);

    const ParamLayout lay = pyramid_layout(pyr);
    CHECK(flat[static_cast<std::size_t>(lay.phi1_begin)] == pyr.phi1.bands[0][0]);
    CHECK(flat[static_cast<std::size_t>(lay.res2_begin)] == pyr.res2[0][0]);
    CHECK(flat[static_cast<std::size_t>(lay.res3_begin)] == pyr.res3[0][0]);
    CHECK(flat[static_cast<std::size_t>(lay.gates2_begin)] == pyr.gates2[0][0]);
    CHECK(flat[static_cast<std::size_t>(lay.gates3_end - 1)] == pyr.gates3[6][1]);
}

TEST_CASE("upsample_grid constants, shapes and ramps")
{
    Dims3 out_dims;
    const std::vector<double> c =
        upsample_grid(std::vector<double>(8, 0.42), {2, 2, 2}, 1, 2, out_dims);
    CHECK(out_dims == Dims3{4, 4, 4});
    for (const double v : c)
        CHECK(v == doctest::Approx(0.42).epsilon(1e-15));

    // align-corners maps output i to input i*(n-1)/(2n-1), exact on ramps
    const Dims3 in{1, 1, 4};
    std::vector<double> ramp{0.0, 1.0, 2.0, 3.0};
    const std::vector<double> up = upsample_grid(ramp, in, 1, 2, out_dims);
    CHECK(out_dims == Dims3{2, 2, 8});
    for (int i = 0; i < 8; ++i)
        CHECK(up[static_cast<std::size_t>(i)]
              == doctest::Approx(3.0 * i / 7.0).epsilon(1e-13));

    CHECK_THROWS_AS(upsample_grid(ramp, in, 1, 3, out_dims), ConfigError);
}

TEST_CASE("upsample_adjoint_grid is the transpose")
{
    Rng rng(21);
    const Dims3 in{3, 4, 2};
    Dims3 out_dims;
    std::vector<double> x(static_cast<std::size_t>(voxel_count(in)) * 3);
    for (double& v : x)
        v = rng.uniform(-1.0, 1.0);
    const std::vector<double> ux = upsample_grid(x, in, 3, 2, out_dims);
    std::vector<double> y(ux.size());
    for (double& v : y)
        v = rng.uniform(-1.0, 1.0);
    const std::vector<double> aty = upsample_adjoint_grid(y, in, 3, 2);
    REQUIRE(aty.size() == x.size());
    CHECK(testutil::close_rel(testutil::dot(ux, y), testutil::dot(x, aty), 1e-12));
}

TEST_CASE("refine_subband blends per the gates")
{
    Rng rng(22);
    std::vector<double> up(64), res(64);
    for (double& v : up)
        v = rng.uniform(-1.0, 1.0);
    for (double& v : res)
        v = rng.uniform(-1.0, 1.0);

    CHECK(testutil::max_abs_diff(
              refine_subband(up, std::vector<double>(64, 0.0), 1.0, 1.0), up)
          == 0.0);
    CHECK(testutil::max_abs_diff(
              refine_subband(std::vector<double>(64, 0.0), res, 1.0, 1.0), res)
          == 0.0);

    const std::vector<double> mix = refine_subband(up, res, 2.0, -1.0);
    for (std::size_t i = 0; i < 64; ++i)
        CHECK(mix[i] == 2.0 * up[i] - res[i]);
}

TEST_CASE("reconstruct_flow is linear in the coefficients at fixed gates")
{
    Rng rng(23);
    const Dims3 dims{16, 16, 16};
    CoefficientPyramid p1 = random_pyramid(dims, WaveletKind::haar, rng);
    CoefficientPyramid p2 = random_pyramid(dims, WaveletKind::haar, rng);
    set_gates(p1, 0.8, 1.3);
    set_gates(p2, 0.8, 1.3);

    CoefficientPyramid sum = p1;
    for (int b = 0; b < 8; ++b)
        for (std::size_t i = 0; i < sum.phi1.bands[0].size(); ++i)
            sum.phi1.bands[static_cast<std::size_t>(b)][i] +=
                p2.phi1.bands[static_cast<std::size_t>(b)][i];
    for (int b = 0; b < 7; ++b)
        for (std::size_t i = 0; i < sum.res2[0].size(); ++i)
            sum.res2[static_cast<std::size_t>(b)][i] +=
                p2.res2[static_cast<std::size_t>(b)][i];
    for (int b = 0; b < 7; ++b)
        for (std::size_t i = 0; i < sum.res3[0].size(); ++i)
            sum.res3[static_cast<std::size_t>(b)][i] +=
                p2.res3[static_cast<std::size_t>(b)][i];

    const VectorField f1 = reconstruct_flow(p1);
    const VectorField f2 = reconstruct_flow(p2);
    const VectorField fs = reconstruct_flow(sum);
    for (std::size_t i = 0; i < fs.data.size(); ++i)
        CHECK(testutil::close_rel(fs.data[i], f1.data[i] + f2.data[i], 1e-9, 1e-12));

    CoefficientPyramid scaled = p1;
    for (auto& band : scaled.phi1.bands)
        for (double& v : band)
            v *= -2.5;
    for (auto& band : scaled.res2)
        for (double& v : band)
            v *= -2.5;
    for (auto& band : scaled.res3)
        for (double& v : band)
            v *= -2.5;
    const VectorField fsc = reconstruct_flow(scaled);
    for (std::size_t i = 0; i < fsc.data.size(); ++i)
        CHECK(testutil::close_rel(fsc.data[i], -2.5 * f1.data[i], 1e-9, 1e-12));
}

TEST_CASE("gates (0,1) turn the chain into a plain 3-level synthesis")
{
    Rng rng(24);
    for (const WaveletKind kind : {WaveletKind::haar, WaveletKind::db2}) {
        const Dims3 dims = kind == WaveletKind::haar ? Dims3{16, 24, 16}
                                                     : Dims3{16, 16, 32};
        CoefficientPyramid pyr = random_pyramid(dims, kind, rng);
        set_gates(pyr, 0.0, 1.0);

        const VectorField flow = reconstruct_flow(pyr);
        const VectorField ref = oracle::reconstruct_gates01(pyr);
        CHECK(testutil::max_abs_diff(flow.data, ref.data) < 1e-9);

        // disjoint orthonormal inputs: energies add
        const double energy = testutil::dot(flow.data, flow.data);
        CHECK(testutil::close_rel(energy, pyramid_energy(pyr), 1e-9));
    }
}

TEST_CASE("gradient pull-back: zero upstream and pure-DWT case")
{
    Rng rng(25);
    const Dims3 dims{16, 16, 16};
    CoefficientPyramid pyr = random_pyramid(dims, WaveletKind::haar, rng);

    const CoefficientPyramid g0 =
        flow_gradient_to_coeffs(pyr, make_field(dims));
    CHECK(testutil::max_abs(pyramid_flatten(g0)) == 0.0);

    // with gates (0,1) the coefficient slots receive the levelwise DWT of g
    set_gates(pyr, 0.0, 1.0);
    const VectorField g = testutil::random_field(dims, rng, 1.0);
    const CoefficientPyramid grad = flow_gradient_to_coeffs(pyr, g);

    const FilterBank fb = filter_bank(WaveletKind::haar);
    const SubbandSet t3 = dwt3(g, fb);
    for (int b = 1; b < 8; ++b)
        CHECK(testutil::max_abs_diff(grad.res3[static_cast<std::size_t>(b - 1)],
                                     t3.bands[static_cast<std::size_t>(b)])
              < 1e-10);
    const SubbandSet t2 = dwt3_grid(t3.bands[0], {8, 8, 8}, 3, fb);
    for (int b = 1; b < 8; ++b)
        CHECK(testutil::max_abs_diff(grad.res2[static_cast<std::size_t>(b - 1)],
                                     t2.bands[static_cast<std::size_t>(b)])
              < 1e-10);
    const SubbandSet t1 = dwt3_grid(t2.bands[0], {4, 4, 4}, 3, fb);
    for (int b = 0; b < 8; ++b)
        CHECK(testutil::max_abs_diff(grad.phi1.bands[static_cast<std::size_t>(b)],
                                     t1.bands[static_cast<std::size_t>(b)])
              < 1e-10);
}

TEST_CASE("adjoint consistency over the coefficient slots")
{
    Rng rng(26);
    const Dims3 dims{16, 16, 16};
    CoefficientPyramid pyr = random_pyramid(dims, WaveletKind::db2, rng);
    set_gates(pyr, 0.6, 1.4); // arbitrary fixed gates

    const VectorField g = testutil::random_field(dims, rng, 1.0);
    const double lhs = testutil::dot(reconstruct_flow(pyr).data, g.data);

    // the map is linear in coefficients (gates are multipliers, not linear
    // inputs), so the pairing runs over coefficient slots only
    const std::vector<double> theta = pyramid_flatten(pyr);
    const std::vector<double> grad = pyramid_flatten(flow_gradient_to_coeffs(pyr, g));
    const ParamLayout lay = pyramid_layout(pyr);
    double rhs = 0.0;
    for (std::int64_t i = 0; i < lay.gates2_begin; ++i)
        rhs += theta[static_cast<std::size_t>(i)] * grad[static_cast<std::size_t>(i)];
    CHECK(testutil::close_rel(lhs, rhs, 1e-8));
}

TEST_CASE("coefficient and gate gradients match finite differences")
{
    Rng rng(27);
    const Dims3 dims{16, 16, 16};
    CoefficientPyramid pyr = random_pyramid(dims, WaveletKind::haar, rng);
    set_gates(pyr, 1.1, 0.9);
    const VectorField g = testutil::random_field(dims, rng, 1.0);

    std::vector<double> flat = pyramid_flatten(pyr);
    const std::vector<double> grad =
        pyramid_flatten(flow_gradient_to_coeffs(pyr, g));
    const ParamLayout lay = pyramid_layout(pyr);

    const auto value_at = [&](const std::vector<double>& params) {
        CoefficientPyramid p = pyr;
        pyramid_unflatten(params, p);
        return testutil::dot(reconstruct_flow(p).data, g.data);
    };

    std::vector<std::int64_t> picks;
    Rng pick_rng(271);
    for (const auto& [begin, end] :
         {std::pair{lay.phi1_begin, lay.phi1_end}, {lay.res2_begin, lay.res2_end},
          {lay.res3_begin, lay.res3_end}})
        for (int k = 0; k < 6; ++k)
            picks.push_back(
                begin
                + static_cast<std::int64_t>(pick_rng.u01()
                                            * static_cast<double>(end - begin)));
    for (std::int64_t i = lay.gates2_begin; i < lay.gates3_end; ++i)
        picks.push_back(i); // all 28 gates

    const double eps = 1e-4;
    for (const std::int64_t i : picks) {
        std::vector<double> p = flat;
        p[static_cast<std::size_t>(i)] += eps;
        const double fp = value_at(p);
        p[static_cast<std::size_t>(i)] -= 2.0 * eps;
        const double fm = value_at(p);
        const double fd = (fp - fm) / (2.0 * eps);
        CHECK(testutil::close_rel(grad[static_cast<std::size_t>(i)], fd, 1e-5, 1e-9));
    }
}

TEST_CASE("zeroing res3 leaves only the gated upsample path at the finest bands")
{
    Rng rng(28);
    const Dims3 dims{16, 16, 16};
    CoefficientPyramid pyr = random_pyramid(dims, WaveletKind::haar, rng);
    for (auto& band : pyr.res3)
        band.assign(band.size(), 0.0);

    const VectorField flow = reconstruct_flow(pyr);
    const FilterBank fb = filter_bank(WaveletKind::haar);
    const SubbandSet spectrum = dwt3(flow, fb);

    // rebuild the bar2 path by hand: bar2 = a2 * up(phi1 high) + b2 * res2,
    // then bar3 = a3 * up(bar2); the finest detail bands of flow must equal
    // bar3 exactly.
    const Dims3 l1 = pyr.level1_dims();
    for (int b = 1; b < 8; ++b) {
        Dims3 up_dims;
        const std::vector<double> up1 = upsample_grid(
            pyr.phi1.bands[static_cast<std::size_t>(b)], l1, 3, 2, up_dims);
        const std::vector<double> bar2 =
            refine_subband(up1, pyr.res2[static_cast<std::size_t>(b - 1)],
                           pyr.gates2[static_cast<std::size_t>(b - 1)][0],
                           pyr.gates2[static_cast<std::size_t>(b - 1)][1]);
        const std::vector<double> up2 = upsample_grid(bar2, up_dims, 3, 2, up_dims);
        std::vector<double> bar3(up2.size());
        for (std::size_t i = 0; i < up2.size(); ++i)
            bar3[i] = pyr.gates3[static_cast<std::size_t>(b - 1)][0] * up2[i];
        CHECK(testutil::max_abs_diff(spectrum.bands[static_cast<std::size_t>(b)],
                                     bar3)
              < 1e-10);
    }
}
