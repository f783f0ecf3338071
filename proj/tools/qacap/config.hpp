#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "qacap/calibration.hpp"
#include "qacap/noise.hpp"

namespace qacap::cli {

inline constexpr const char* kToolName = "qacap";
inline constexpr const char* kToolVersion = "0.1.0";

// Every knob a subcommand reads. Defaults are the documented ones; a config
// file overrides them and command-line flags override the file.
struct RunConfig {
    std::uint64_t seed = 0;
    DistributionKind distribution = DistributionKind::Random;
    std::size_t bins = calibration::kDefaultBins;
    double lambda = 1.0;
    calibration::Aggregation aggregation = calibration::Aggregation::Mean;
    unsigned threads = 1;
    bool by_difficulty = false;
    bool quiet = false;

    // losscheck
    std::size_t cases = 100;
    std::size_t max_rows = 16;
    std::size_t max_cols = 32;

    std::string dataset;
    std::string predictions;
    std::string image_root;  // empty: directory of the dataset file
    std::string features;
    std::string out;
    std::string svg;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their current value in `base`; unknown keys are rejected.
RunConfig merge_json(RunConfig base, const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace qacap::cli
