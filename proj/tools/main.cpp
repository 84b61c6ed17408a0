#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wreg/diffeo.hpp"
#include "wreg/errors.hpp"
#include "wreg/io.hpp"
#include "wreg/metrics.hpp"
#include "wreg/optimizer.hpp"
#include "wreg/synth.hpp"

namespace {

using namespace wreg;

void normalize01(ScalarVolume& vol)
{
    const auto [lo, hi] = std::minmax_element(vol.data.begin(), vol.data.end());
    if (*hi > *lo) {
        const double min = *lo, range = *hi - *lo;
        for (double& v : vol.data)
            v = (v - min) / range;
    }
}

Dims3 to_dims(const std::vector<int>& v, const char* what)
{
    if (v.size() != 3)
        throw ConfigError(std::string(what) + " needs exactly three values");
    for (const int d : v)
        if (d <= 0)
            throw ConfigError(std::string(what) + " values must be positive");
    return {v[0], v[1], v[2]};
}

struct RegisterArgs {
    std::string moving, fixed, out, save_pyramid, history;
    std::string loss = "ncc", wavelet = "haar";
    std::vector<int> stages{200, 150, 150};
    double lambda = -1.0; // sentinel: default depends on the loss
    double lr = 0.3;
    int sq_steps = 7;
    bool diff = false;
};

void run_register(const RegisterArgs& args)
{
    ScalarVolume moving = read_volume(args.moving);
    ScalarVolume fixed = read_volume(args.fixed);
    if (moving.dims != fixed.dims)
        throw ShapeError("moving and fixed volumes have different dims");
    normalize01(moving);
    normalize01(fixed);

    const Dims3 orig_dims = moving.dims;
    CropRecord rec;
    moving = pad_to_multiple(moving, 8, rec);
    fixed = pad_to_multiple(fixed, 8, rec);

    RegistrationConfig config;
    config.loss.kind = loss_from_string(args.loss);
    config.loss.lambda =
        args.lambda >= 0.0 ? args.lambda
                           : (config.loss.kind == LossKind::ncc ? 2.0 : 0.01);
    config.diffeomorphic = args.diff;
    config.wavelet = wavelet_from_string(args.wavelet);
    if (args.stages.size() != 3)
        throw ConfigError("--stages needs exactly three values");
    config.stage_iterations = {args.stages[0], args.stages[1], args.stages[2]};
    config.lr = args.lr;
    config.sq_steps = args.sq_steps;

    const RegistrationResult result = register_volumes(moving, fixed, config);
    write_field(args.out, crop_field(result.flow, rec));
    if (!args.save_pyramid.empty())
        write_pyramid(args.save_pyramid, result.pyramid);
    if (!args.history.empty()) {
        std::ofstream f(args.history, std::ios::trunc);
        if (!f)
            throw IoError("cannot open " + args.history + " for writing");
        f << std::setprecision(17);
        for (const double v : result.loss_history)
            f << v << "\n";
    }

    const double final_loss = result.diagnostics.final_similarity
                            + config.loss.lambda * result.diagnostics.final_smoothness;
    std::cout << "dims " << orig_dims[0] << " " << orig_dims[1] << " " << orig_dims[2]
              << "\n";
    std::cout << "padded_dims " << moving.dims[0] << " " << moving.dims[1] << " "
              << moving.dims[2] << "\n";
    std::cout << "loss " << loss_to_string(config.loss.kind) << "\n";
    std::cout << "lambda " << config.loss.lambda << "\n";
    std::cout << "wavelet " << wavelet_to_string(config.wavelet) << "\n";
    std::cout << "diffeomorphic " << (config.diffeomorphic ? 1 : 0) << "\n";
    std::cout << "iterations " << result.loss_history.size() << "\n";
    if (!result.loss_history.empty())
        std::cout << "initial_loss " << result.loss_history.front() << "\n";
    std::cout << "final_loss " << final_loss << "\n";
    std::cout << "final_similarity " << result.diagnostics.final_similarity << "\n";
    std::cout << "final_smoothness " << result.diagnostics.final_smoothness << "\n";
    std::cout << "neg_jac_percent " << result.diagnostics.neg_jac_percent << "\n";
}

struct TransformArgs {
    std::string flow, in, out;
    bool labels = false;
};

void run_transform(const TransformArgs& args)
{
    const VectorField flow = read_field(args.flow);
    const bool as_labels = args.labels || peek_role(args.in) == VolumeRole::labels;
    if (as_labels) {
        const LabelVolume labels = read_labels(args.in);
        write_labels(args.out, warp_labels(labels, flow));
    } else {
        const ScalarVolume vol = read_volume(args.in);
        write_volume(args.out, warp(vol, flow));
    }
    std::cout << "output " << args.out << "\n";
    std::cout << "mode " << (as_labels ? "labels" : "image") << "\n";
}

struct MetricsArgs {
    std::string flow, seg_a, seg_b;
    std::vector<int> labels;
};

void run_metrics(const MetricsArgs& args)
{
    const VectorField flow = read_field(args.flow);
    std::cout << "neg_jac_percent " << neg_jac_fraction(flow) << "\n";

    if (args.seg_a.empty() != args.seg_b.empty())
        throw ConfigError("--seg-a and --seg-b must be given together");
    if (args.seg_a.empty())
        return;
    const LabelVolume a = read_labels(args.seg_a);
    const LabelVolume b = read_labels(args.seg_b);
    const std::map<int, double> scores =
        args.labels.empty() ? dice(a, b) : dice(a, b, args.labels);
    double sum = 0.0;
    for (const auto& [label, score] : scores) {
        std::cout << "dice_" << label << " " << score << "\n";
        sum += score;
    }
    if (!scores.empty())
        std::cout << "mean_dice " << sum / static_cast<double>(scores.size()) << "\n";
    for (const auto& [label, score] : scores)
        std::cout << "hd_" << label << " " << hausdorff(a, b, label) << "\n";
}

struct DwtArgs {
    std::string in, out_prefix;
    std::string wavelet = "haar";
};

void run_dwt(const DwtArgs& args)
{
    const ScalarVolume vol = read_volume(args.in);
    const SubbandSet bands = dwt3(vol, filter_bank(wavelet_from_string(args.wavelet)));
    std::cout << "dims " << bands.dims[0] << " " << bands.dims[1] << " "
              << bands.dims[2] << "\n";
    for (int b = 0; b < 8; ++b) {
        ScalarVolume band;
        band.dims = bands.dims;
        band.spacing = vol.spacing;
        band.data = bands.bands[static_cast<std::size_t>(b)];
        const std::string path =
            args.out_prefix + "_" + kSubbandNames[static_cast<std::size_t>(b)] + ".raw";
        write_volume(path, band);
        std::cout << "band_" << kSubbandNames[static_cast<std::size_t>(b)] << " "
                  << path << "\n";
    }
}

struct SynthArgs {
    std::string kind = "gaussian-bumps", out_prefix;
    std::vector<int> dims{48, 48, 48};
    double max_disp = 6.0;
    std::uint64_t seed = 0;
    bool labels = false;
};

void run_synth(const SynthArgs& args)
{
    SynthSpec spec;
    spec.kind = synth_kind_from_string(args.kind);
    spec.dims = to_dims(args.dims, "--dims");
    spec.max_disp = args.max_disp;
    spec.seed = args.seed;
    spec.with_labels = args.labels;

    const SynthPair pair = synth_pair(spec);
    write_volume(args.out_prefix + "_moving.raw", pair.moving);
    write_volume(args.out_prefix + "_fixed.raw", pair.fixed);
    write_field(args.out_prefix + "_flow.raw", pair.gt_flow);
    std::cout << "moving " << args.out_prefix + "_moving.raw" << "\n";
    std::cout << "fixed " << args.out_prefix + "_fixed.raw" << "\n";
    std::cout << "flow " << args.out_prefix + "_flow.raw" << "\n";
    if (spec.with_labels) {
        write_labels(args.out_prefix + "_labels_moving.raw", pair.labels_moving);
        write_labels(args.out_prefix + "_labels_fixed.raw", pair.labels_fixed);
        std::cout << "labels_moving " << args.out_prefix + "_labels_moving.raw" << "\n";
        std::cout << "labels_fixed " << args.out_prefix + "_labels_fixed.raw" << "\n";
    }
}

} // namespace

int main(int argc, char** argv)
{
    std::cout << std::setprecision(12);

    CLI::App app{"wavelet-parameterized deformable 3D registration"};
    app.require_subcommand(1);

    RegisterArgs reg;
    auto* reg_cmd = app.add_subcommand("register", "fit a flow aligning moving onto fixed");
    reg_cmd->add_option("--moving", reg.moving, "moving volume")->required();
    reg_cmd->add_option("--fixed", reg.fixed, "fixed volume")->required();
    reg_cmd->add_option("--out", reg.out, "output flow path")->required();
    reg_cmd->add_flag("--diff", reg.diff, "integrate the field as a stationary velocity");
    reg_cmd->add_option("--loss", reg.loss, "ncc or mse");
    reg_cmd->add_option("--lambda", reg.lambda, "smoothness weight (default 2 ncc, 0.01 mse)");
    reg_cmd->add_option("--wavelet", reg.wavelet, "haar or db2");
    reg_cmd->add_option("--stages", reg.stages, "iterations per stage")->delimiter(',');
    reg_cmd->add_option("--lr", reg.lr, "Adam step size");
    reg_cmd->add_option("--sq-steps", reg.sq_steps, "squaring steps for --diff");
    reg_cmd->add_option("--save-pyramid", reg.save_pyramid, "write final coefficients");
    reg_cmd->add_option("--history", reg.history, "write per-iteration losses");

    TransformArgs tr;
    auto* tr_cmd = app.add_subcommand("transform", "apply a flow to a volume");
    tr_cmd->add_option("--flow", tr.flow, "flow field")->required();
    tr_cmd->add_option("--in", tr.in, "input volume")->required();
    tr_cmd->add_option("--out", tr.out, "output volume")->required();
    tr_cmd->add_flag("--labels", tr.labels, "nearest-neighbour warp for segmentations");

    MetricsArgs me;
    auto* me_cmd = app.add_subcommand("metrics", "flow and overlap quality measures");
    me_cmd->add_option("--flow", me.flow, "flow field")->required();
    me_cmd->add_option("--seg-a", me.seg_a, "first segmentation");
    me_cmd->add_option("--seg-b", me.seg_b, "second segmentation");
    me_cmd->add_option("--labels", me.labels, "labels to score")->delimiter(',');

    DwtArgs dw;
    auto* dw_cmd = app.add_subcommand("dwt", "one analysis level of a volume");
    dw_cmd->add_option("--in", dw.in, "input volume")->required();
    dw_cmd->add_option("--out-prefix", dw.out_prefix, "band path prefix")->required();
    dw_cmd->add_option("--wavelet", dw.wavelet, "haar or db2");

    SynthArgs sy;
    auto* sy_cmd = app.add_subcommand("synth", "generate a ground-truth pair");
    sy_cmd->add_option("--kind", sy.kind, "translation, gaussian-bumps, or radial");
    sy_cmd->add_option("--dims", sy.dims, "volume dims D,H,W")->delimiter(',');
    sy_cmd->add_option("--max-disp", sy.max_disp, "peak displacement in voxels");
    sy_cmd->add_option("--seed", sy.seed, "random seed");
    sy_cmd->add_option("--out-prefix", sy.out_prefix, "output path prefix")->required();
    sy_cmd->add_flag("--labels", sy.labels, "also write sphere segmentations");

    try {
        app.parse(argc, argv);
        if (reg_cmd->parsed())
            run_register(reg);
        else if (tr_cmd->parsed())
            run_transform(tr);
        else if (me_cmd->parsed())
            run_metrics(me);
        else if (dw_cmd->parsed())
            run_dwt(dw);
        else if (sy_cmd->parsed())
            run_synth(sy);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
