#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace qacap {

inline constexpr std::size_t kMaxCaptions = 5;

// Stratum of an image by how many annotators managed to caption it.
enum class Difficulty { Easy, Medium, Hard };

inline constexpr std::array<Difficulty, 3> kDifficulties = {Difficulty::Easy, Difficulty::Medium,
                                                            Difficulty::Hard};

std::string_view to_string(Difficulty d);  // "easy" | "medium" | "hard"
Difficulty difficulty_from_string(std::string_view s);

// 5 captions -> Easy, 3-4 -> Medium, 1-2 -> Hard. Throws ParameterError for
// counts outside [1, 5].
Difficulty bin_difficulty(std::size_t caption_count);

struct DatasetRecord {
    std::string image_id;
    std::optional<std::string> image_path;
    std::vector<std::string> captions;
    std::optional<Difficulty> difficulty;  // set iff captions is non-empty

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

// Builds a record and fills in `difficulty`. Validates id and caption count.
DatasetRecord make_record(std::string image_id, std::optional<std::string> image_path,
                          std::vector<std::string> captions);

// One generated caption with the probability of every emitted token.
struct PredictedCaption {
    std::string image_id;
    std::vector<std::string> tokens;
    std::vector<double> token_probs;

    friend bool operator==(const PredictedCaption&, const PredictedCaption&) = default;
};

// Throws DataError unless tokens/probs have equal non-zero length and every
// probability lies in (0, 1].
void validate(const PredictedCaption& pred);

enum class DatasetFormat { CaptionsJson };

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path,
                                        DatasetFormat format = DatasetFormat::CaptionsJson);
std::vector<DatasetRecord> parse_dataset(std::string_view text);
nlohmann::json dataset_to_json(const std::vector<DatasetRecord>& records);

std::vector<PredictedCaption> load_predictions(const std::filesystem::path& path);
std::vector<PredictedCaption> parse_predictions(std::string_view text);
nlohmann::json prediction_to_json(const PredictedCaption& pred);

struct Strata {
    std::vector<DatasetRecord> easy;
    std::vector<DatasetRecord> medium;
    std::vector<DatasetRecord> hard;

    const std::vector<DatasetRecord>& operator[](Difficulty d) const;
    std::vector<DatasetRecord>& operator[](Difficulty d);
    std::size_t total() const { return easy.size() + medium.size() + hard.size(); }
};

// Partitions captioned records by difficulty, preserving input order within
// each bucket. Records without captions are skipped.
Strata stratify(const std::vector<DatasetRecord>& records);

}  // namespace qacap
