#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "config.hpp"

namespace qacap::cli {

enum ExitCode : int { kSuccess = 0, kFatal = 1, kPartial = 2 };

struct Streams {
    std::ostream& out;
    std::ostream& err;
};

// Each subcommand validates its inputs, writes its report to cfg.out (or
// `io.out` when unset) and returns the process exit code. Library errors are
// reported on `io.err` and mapped to kFatal.
int cmd_augment(const RunConfig& cfg, Streams io);
int cmd_evaluate(const RunConfig& cfg, Streams io);
int cmd_calibrate(const RunConfig& cfg, Streams io);
// With `count` set, prints the bucket for that caption count; otherwise bins
// every image of cfg.dataset.
int cmd_bin_difficulty(const RunConfig& cfg, std::optional<long long> count, Streams io);
int cmd_losscheck(const RunConfig& cfg, Streams io);
int cmd_shift_probe(const RunConfig& cfg, Streams io);

// Reliability diagram as a standalone SVG document.
std::string reliability_svg(const calibration::CalibrationReport& report);

}  // namespace qacap::cli
