#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qacap/dataset.hpp"
#include "qacap/raster.hpp"
#include "qacap/rng.hpp"

namespace qacap {

// Synthetic distortions, one per column of the real-flaw taxonomy:
//   blur -> MotionBlur, DefocusBlur     bright -> ContrastBright
//   dark -> ContrastDark                framing -> Crop
//   obscured -> Cutout                  rotation -> Rotation, Flip
enum class NoiseType {
    MotionBlur,
    DefocusBlur,
    ContrastBright,
    ContrastDark,
    Crop,
    Cutout,
    Rotation,
    Flip,
};

inline constexpr std::size_t kNoiseTypeCount = 8;
inline constexpr std::array<NoiseType, kNoiseTypeCount> kNoiseTypes = {
    NoiseType::MotionBlur, NoiseType::DefocusBlur, NoiseType::ContrastBright,
    NoiseType::ContrastDark, NoiseType::Crop,      NoiseType::Cutout,
    NoiseType::Rotation,   NoiseType::Flip};

std::string_view to_string(NoiseType t);
NoiseType noise_type_from_string(std::string_view s);

// Augmentation bounds.
namespace limits {
inline constexpr double kMaxCropFraction = 0.2;
inline constexpr double kMaxRotationDegrees = 45.0;
inline constexpr int kMinMotionKernel = 15;
inline constexpr int kMaxMotionKernel = 49;
inline constexpr int kMinSeverity = 1;
inline constexpr int kMaxSeverity = 5;
inline constexpr std::array<int, 5> kDefocusRadius = {3, 4, 6, 8, 10};
inline constexpr double kMinGamma = 0.5;
inline constexpr double kMaxGamma = 2.0;
inline constexpr double kMinCutoutFraction = 0.1;
inline constexpr double kMaxCutoutFraction = 0.5;
inline constexpr Rgb kCutoutFill = {128, 128, 128};
}  // namespace limits

struct MotionBlurParams {
    int kernel = 15;  // odd, [15, 49]
    int angle = 45;   // -45 or +45
    friend bool operator==(const MotionBlurParams&, const MotionBlurParams&) = default;
};
struct DefocusParams {
    int severity = 1;
    friend bool operator==(const DefocusParams&, const DefocusParams&) = default;
};
struct ContrastParams {
    double gamma = 1.0;
    friend bool operator==(const ContrastParams&, const ContrastParams&) = default;
};
struct CropParams {
    double left = 0, right = 0, top = 0, bottom = 0;
    friend bool operator==(const CropParams&, const CropParams&) = default;
};
struct CutoutParams {
    double frac_h = 0.1, frac_w = 0.1;
    friend bool operator==(const CutoutParams&, const CutoutParams&) = default;
};
struct RotationParams {
    double degrees = 0;
    friend bool operator==(const RotationParams&, const RotationParams&) = default;
};
struct FlipParams {
    friend bool operator==(const FlipParams&, const FlipParams&) = default;
};

using NoiseParams = std::variant<MotionBlurParams, DefocusParams, ContrastParams, CropParams,
                                 CutoutParams, RotationParams, FlipParams>;

// A sampled distortion. Applying it to a raster is a pure function of
// (raster, event); `seed` drives the only in-operation randomness (cutout
// placement).
struct NoiseEvent {
    NoiseType type = NoiseType::Flip;
    NoiseParams params = FlipParams{};
    std::uint64_t seed = 0;

    friend bool operator==(const NoiseEvent&, const NoiseEvent&) = default;
};

// Throws ParameterError if params do not belong to `type` or violate bounds.
void validate(const NoiseEvent& event);

nlohmann::json params_to_json(const NoiseParams& params);
nlohmann::json event_to_json(const NoiseEvent& event);
NoiseEvent event_from_json(const nlohmann::json& j);

// Square convolution kernel, row-major, odd side length.
struct Kernel {
    int size = 1;
    std::vector<double> weights;

    double at(int row, int col) const { return weights[static_cast<std::size_t>(row * size + col)]; }
    double sum() const;
};

// Line kernel of length `size` along the anti-diagonal (+45) or main
// diagonal (-45), each tap 1/size.
Kernel motion_blur_kernel(int size, int angle);
// Normalized disk of the radius tabulated for `severity`.
Kernel defocus_kernel(int severity);

// Correlates every channel with `kernel`, replicating edge pixels and
// rounding half-up.
Raster convolve(const Raster& img, const Kernel& kernel);

Raster crop(const Raster& img, double left, double right, double top, double bottom);
Raster rotate(const Raster& img, double degrees);
Raster flip_vertical(const Raster& img);
Raster motion_blur(const Raster& img, int kernel, int angle);
Raster defocus_blur(const Raster& img, int severity);
Raster contrast(const Raster& img, double gamma);
Raster cutout(const Raster& img, double frac_h, double frac_w, std::uint64_t pos_seed);

Raster apply(const Raster& img, const NoiseEvent& event);

enum class DistributionKind { Frequent, Random, Original };

std::string_view to_string(DistributionKind k);  // "frequent" | "random" | "original"
DistributionKind distribution_kind_from_string(std::string_view s);

struct NoiseDistribution {
    DistributionKind kind;
    std::array<double, kNoiseTypeCount> weights;  // indexed by NoiseType

    double weight(NoiseType t) const { return weights[static_cast<std::size_t>(t)]; }
};

// Frequent: blur and cutout at 1/2 each, blur split evenly between motion and
// defocus. Random: 1/8 each. Original: real-flaw shares (blur 41.0, bright
// 5.3, dark 5.6, framing 55.6, obscured 3.6, rotation 17.5) renormalized by
// their sum 128.6, with blur and rotation split evenly between their two
// synthetic types.
NoiseDistribution make_distribution(DistributionKind kind);

// Draws a type by weight, then type-specific parameters uniformly from their
// ranges, then a replay seed.
NoiseEvent sample_event(const NoiseDistribution& dist, Rng& rng);

struct ManifestEntry {
    std::string image_id;
    std::optional<NoiseEvent> event;  // absent when the record failed
    std::string output;               // file name inside the output directory
    std::optional<std::string> error;
};

struct Manifest {
    std::uint64_t seed = 0;
    DistributionKind distribution = DistributionKind::Random;
    std::vector<ManifestEntry> entries;

    std::size_t failures() const;
    nlohmann::json to_json() const;
};

struct AugmentOptions {
    std::filesystem::path image_root;  // base for relative image paths
    std::filesystem::path out_dir;
    unsigned threads = 1;              // 0 = hardware concurrency
};

// Samples one event per record from a generator seeded by
// derive_seed(seed, image_id), writes the distorted image as PNG into
// out_dir, and writes out_dir/manifest.json plus out_dir/dataset.json (the
// augmented images carrying the original captions). Per-record failures are
// recorded in the manifest; an unusable out_dir throws IoError.
Manifest augment_dataset(const std::vector<DatasetRecord>& records, const NoiseDistribution& dist,
                         std::uint64_t seed, const AugmentOptions& options);

// File name used for an image id inside the output directory.
std::string output_name(std::string_view image_id);

}  // namespace qacap
