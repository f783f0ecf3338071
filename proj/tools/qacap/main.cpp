#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "qacap/error.hpp"

namespace {

using qacap::cli::RunConfig;

// Flag values land here; only flags the user actually passed are applied on
// top of the config file.
struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string distribution, aggregation;
    std::size_t bins = 0, cases = 0, max_rows = 0, max_cols = 0;
    double lambda = 0;
    unsigned threads = 0;
    std::string dataset, predictions, image_root, features, out, svg;
    long long count = 0;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quality-agnostic captioning toolkit: noise augmentation, loss checks, caption "
                 "metrics and confidence calibration"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", qacap::cli::kToolVersion);

    Flags f;
    auto* o_config = app.add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    auto* o_seed = app.add_option("--seed", f.seed, "Random seed");
    auto* o_out = app.add_option("--out", f.out, "Output file (report) or directory (augment)");
    auto* o_quiet = app.add_flag("--quiet,-q", "Suppress progress output");

    auto* augment = app.add_subcommand("augment", "Apply sampled synthetic noise to every dataset image");
    auto* evaluate = app.add_subcommand("evaluate", "BLEU-1..4, ROUGE-L and CIDEr-D of predictions");
    auto* calibrate = app.add_subcommand("calibrate", "Word-level ECE and reliability bins of predictions");
    auto* bin = app.add_subcommand("bin-difficulty", "Easy/medium/hard bucket by caption count");
    auto* losscheck = app.add_subcommand("losscheck", "Finite-difference and property checks of the losses");
    auto* probe = app.add_subcommand("shift-probe", "Cosine-similarity histograms of a probe vs two feature sets");

    CLI::Option* o_dataset[4];
    int k = 0;
    for (auto* sub : {augment, evaluate, calibrate, bin})
        o_dataset[k++] = sub->add_option("--dataset", f.dataset, "Dataset JSON");
    auto* o_dist = augment->add_option("--dist,--distribution", f.distribution, "frequent | random | original");
    auto* o_threads = augment->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
    auto* o_root = augment->add_option("--image-root", f.image_root, "Base directory of image files");

    CLI::Option* o_preds[2];
    CLI::Option* o_bydiff[2];
    k = 0;
    for (auto* sub : {evaluate, calibrate}) {
        o_preds[k] = sub->add_option("--predictions", f.predictions, "Predictions JSONL");
        o_bydiff[k] = sub->add_flag("--by-difficulty", "Add per-difficulty sections");
        ++k;
    }
    auto* o_bins_cal = calibrate->add_option("--bins", f.bins, "Number of confidence bins");
    auto* o_agg = calibrate->add_option("--aggregation", f.aggregation, "mean | geomean");
    auto* o_svg = calibrate->add_option("--svg", f.svg, "Write a reliability diagram SVG");
    auto* o_count = bin->add_option("--count", f.count, "Caption count to bin");
    auto* o_cases = losscheck->add_option("--cases", f.cases, "Random shapes to test");
    auto* o_rows = losscheck->add_option("--max-rows", f.max_rows, "Largest row count");
    auto* o_cols = losscheck->add_option("--max-cols", f.max_cols, "Largest column count");
    auto* o_lambda = losscheck->add_option("--lambda", f.lambda, "Consistency weight in the dual-branch objective");
    auto* o_features = probe->add_option("--features", f.features, "JSON with probe, set_a, set_b");
    auto* o_bins_probe = probe->add_option("--bins", f.bins, "Histogram bins over [-1, 1]");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : qacap::cli::kFatal;
    }

    RunConfig cfg;
    try {
        if (*o_config) cfg = qacap::cli::load_config(f.config);
        if (*o_seed) cfg.seed = f.seed;
        if (*o_out) cfg.out = f.out;
        if (*o_quiet) cfg.quiet = true;
        for (auto* o : o_dataset)
            if (*o) cfg.dataset = f.dataset;
        for (auto* o : o_preds)
            if (*o) cfg.predictions = f.predictions;
        for (auto* o : o_bydiff)
            if (*o) cfg.by_difficulty = true;
        if (*o_dist) cfg.distribution = qacap::distribution_kind_from_string(f.distribution);
        if (*o_threads) cfg.threads = f.threads;
        if (*o_root) cfg.image_root = f.image_root;
        if (*o_bins_cal || *o_bins_probe) cfg.bins = f.bins;
        if (*o_agg) cfg.aggregation = qacap::calibration::aggregation_from_string(f.aggregation);
        if (*o_svg) cfg.svg = f.svg;
        if (*o_cases) cfg.cases = f.cases;
        if (*o_rows) cfg.max_rows = f.max_rows;
        if (*o_cols) cfg.max_cols = f.max_cols;
        if (*o_lambda) cfg.lambda = f.lambda;
        if (*o_features) cfg.features = f.features;
        if (cfg.bins == 0) throw qacap::ParameterError("--bins must be >= 1");
        if (cfg.lambda < 0) throw qacap::ParameterError("--lambda must be >= 0");
    } catch (const qacap::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return qacap::cli::kFatal;
    }

    qacap::cli::Streams io{std::cout, std::cerr};
    if (*augment) return qacap::cli::cmd_augment(cfg, io);
    if (*evaluate) return qacap::cli::cmd_evaluate(cfg, io);
    if (*calibrate) return qacap::cli::cmd_calibrate(cfg, io);
    if (*bin) {
        std::optional<long long> count;
        if (*o_count) count = f.count;
        return qacap::cli::cmd_bin_difficulty(cfg, count, io);
    }
    if (*losscheck) return qacap::cli::cmd_losscheck(cfg, io);
    return qacap::cli::cmd_shift_probe(cfg, io);
}
