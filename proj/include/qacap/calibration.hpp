#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qacap/dataset.hpp"
#include "qacap/metrics.hpp"

namespace qacap::calibration {

inline constexpr std::size_t kDefaultBins = 10;

struct ScoredWord {
    double confidence;  // (0, 1]
    bool correct;
};

struct ReliabilityBin {
    double lo = 0, hi = 0;
    std::size_t count = 0;
    std::optional<double> mean_confidence;  // absent for empty bins
    std::optional<double> accuracy;
};

struct CalibrationReport {
    std::vector<ReliabilityBin> bins;
    double ece = 0;
    std::size_t n = 0;
    std::map<Difficulty, double> per_difficulty;
};

enum class Aggregation { Mean, GeoMean };

std::string_view to_string(Aggregation a);  // "mean" | "geomean"
Aggregation aggregation_from_string(std::string_view s);

// Caption-level confidence from per-token probabilities.
double aggregate_confidence(const PredictedCaption& pred, Aggregation how = Aggregation::Mean);

// Index of the bin ((i-1)/m, i/m] holding `confidence`, using the same edge
// values reported in ReliabilityBin.
std::size_t bin_index(double confidence, std::size_t m);

// Expected calibration error over m equal-width bins of (0, 1].
CalibrationReport ece(std::span<const ScoredWord> words, std::size_t m = kDefaultBins);

struct ScoredCaption {
    std::string image_id;
    metrics::AlignmentResult alignment;
    std::size_t first_word = 0;  // offset of this caption's words in the flat list
};

struct ScoredPredictions {
    std::vector<ScoredWord> words;
    std::vector<ScoredCaption> captions;
};

// Aligns each prediction with its image's references and pairs every token's
// probability with its correctness. Output order follows `preds`.
ScoredPredictions score_predictions(const std::vector<DatasetRecord>& dataset,
                                    const std::vector<PredictedCaption>& preds);

// Per-bucket reports; buckets without any scored word are omitted.
std::map<Difficulty, CalibrationReport> ece_by_difficulty(const std::vector<DatasetRecord>& dataset,
                                                          const std::vector<PredictedCaption>& preds,
                                                          std::size_t m = kDefaultBins);

struct Histogram {
    std::vector<std::size_t> counts;
    std::vector<double> similarities;
    double mean = 0;
    double std = 0;  // population standard deviation
};

struct ShiftProbe {
    std::size_t bins = 0;
    Histogram set_a;
    Histogram set_b;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Bin of a similarity in [-1, 1] split into `bins` equal intervals; 1.0 falls
// in the top bin.
std::size_t similarity_bin(double s, std::size_t bins);

// Cosine similarity of `probe` against every vector of each set, histogrammed
// over [-1, 1].
ShiftProbe cosine_shift_probe(const std::vector<std::vector<double>>& features_a,
                              const std::vector<std::vector<double>>& features_b,
                              std::span<const double> probe, std::size_t bins);

nlohmann::json to_json(const ReliabilityBin& bin);
nlohmann::json to_json(const CalibrationReport& report);
nlohmann::json to_json(const ShiftProbe& probe);

}  // namespace qacap::calibration
