#include <doctest.h>

#include <cmath>
#include <map>

#include "qacap/error.hpp"
#include "qacap/noise.hpp"
#include "support.hpp"

using namespace qacap;
namespace fs = std::filesystem;

namespace {

std::vector<DatasetRecord> fixture_records(const fs::path& dataset) { return load_dataset(dataset); }

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = testing::read_file(e.path());
    return out;
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("derive_seed depends on seed and key only") {
    CHECK(derive_seed(7, "a") == derive_seed(7, "a"));
    CHECK(derive_seed(7, "a") != derive_seed(8, "a"));
    CHECK(derive_seed(7, "a") != derive_seed(7, "b"));
    // FNV-1a 64 of the empty string is its offset basis.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("uniform_int stays in range and hits both ends") {
    Rng rng(5);
    bool lo = false, hi = false;
    for (int i = 0; i < 2000; ++i) {
        const auto v = rng.uniform_int(-3, 4);
        REQUIRE(v >= -3);
        REQUIRE(v <= 4);
        lo |= v == -3;
        hi |= v == 4;
    }
    CHECK(lo);
    CHECK(hi);
    CHECK(rng.uniform_int(9, 9) == 9);
}

TEST_CASE("output names are file-system safe and distinct") {
    CHECK(output_name("img_01") == "img_01.png");
    const auto a = output_name("a/b");
    const auto b = output_name("a_b");
    CHECK(a != b);
    CHECK(a.find('/') == std::string::npos);
    CHECK(output_name("..") != output_name("__"));
}

TEST_CASE("empty record list gives an empty manifest") {
    testing::TempDir dir("aug-empty");
    AugmentOptions opt;
    opt.out_dir = dir / "out";
    const auto m = augment_dataset({}, make_distribution(DistributionKind::Random), 1, opt);
    CHECK(m.entries.empty());
    CHECK(m.to_json()["events"].empty());
    CHECK(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("augmentation is byte-identical across runs and thread counts") {
    testing::TempDir dir("aug-det");
    const auto ds = testing::write_image_fixture(dir.path(), 24, 3);
    const auto recs = fixture_records(ds);
    const auto dist = make_distribution(DistributionKind::Random);
    AugmentOptions a{dir.path(), dir / "a", 1};
    AugmentOptions b{dir.path(), dir / "b", 4};
    const auto ma = augment_dataset(recs, dist, 42, a);
    const auto mb = augment_dataset(recs, dist, 42, b);
    CHECK(ma.failures() == 0);
    CHECK(ma.to_json() == mb.to_json());
    CHECK(directory_bytes(dir / "a") == directory_bytes(dir / "b"));

    // Record order does not change any image's event.
    auto reversed = recs;
    std::reverse(reversed.begin(), reversed.end());
    AugmentOptions c{dir.path(), dir / "c", 2};
    const auto mc = augment_dataset(reversed, dist, 42, c);
    std::map<std::string, NoiseEvent> by_id;
    for (const auto& e : ma.entries) by_id[e.image_id] = *e.event;
    for (const auto& e : mc.entries) CHECK(by_id.at(e.image_id) == *e.event);

    AugmentOptions d{dir.path(), dir / "d", 1};
    const auto md = augment_dataset(recs, dist, 43, d);
    CHECK(md.to_json() != ma.to_json());
}

TEST_CASE("augmented dataset keeps captions and outputs replay from the manifest") {
    testing::TempDir dir("aug-replay");
    const auto ds = testing::write_image_fixture(dir.path(), 10, 4);
    const auto recs = fixture_records(ds);
    AugmentOptions opt{dir.path(), dir / "out", 2};
    const auto m = augment_dataset(recs, make_distribution(DistributionKind::Original), 9, opt);
    const auto aug = load_dataset(dir / "out" / "dataset.json");
    REQUIRE(aug.size() == recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        CHECK(aug[i].captions == recs[i].captions);
        const auto& e = m.entries[i];
        const auto expect = apply(read_image(dir.path() / *recs[i].image_path), *e.event);
        CHECK(read_image(dir / "out" / e.output) == expect);
    }
}

TEST_CASE("unreadable images become manifest errors") {
    testing::TempDir dir("aug-partial");
    const auto ds = testing::write_image_fixture(dir.path(), 4, 5);
    auto recs = fixture_records(ds);
    recs.push_back(make_record("ghost", "ghost.png", {"nothing here"}));
    recs.push_back(make_record("nofile", std::nullopt, {"no path"}));
    AugmentOptions opt{dir.path(), dir / "out", 3};
    const auto m = augment_dataset(recs, make_distribution(DistributionKind::Random), 1, opt);
    CHECK(m.failures() == 2);
    const auto j = m.to_json();
    CHECK(j["events"][4].contains("error"));
    CHECK_FALSE(j["events"][0].contains("error"));
}

TEST_CASE("an unusable output directory is fatal") {
    testing::TempDir dir("aug-fatal");
    testing::write_file(dir / "file", "x");
    AugmentOptions opt{dir.path(), dir / "file" / "sub", 1};
    CHECK_THROWS_AS(augment_dataset({}, make_distribution(DistributionKind::Random), 1, opt), IoError);
}

TEST_CASE("frequent distribution only emits blur and cutout") {
    testing::TempDir dir("aug-freq");
    std::vector<DatasetRecord> recs;
    Rng rng(6);
    write_png(testing::random_raster(rng, 8, 8), dir / "one.png");
    for (int i = 0; i < 300; ++i) recs.push_back(make_record("r" + std::to_string(i), "one.png", {"x"}));
    AugmentOptions opt{dir.path(), dir / "out", 0};
    const auto m = augment_dataset(recs, make_distribution(DistributionKind::Frequent), 2, opt);
    for (const auto& e : m.entries) {
        REQUIRE(e.event);
        const auto t = e.event->type;
        CHECK((t == NoiseType::MotionBlur || t == NoiseType::DefocusBlur || t == NoiseType::Cutout));
    }
}

TEST_CASE("random distribution counts stay within three sigma") {
    testing::TempDir dir("aug-3sigma");
    Rng rng(7);
    write_png(testing::random_raster(rng, 4, 4), dir / "one.png");
    std::vector<DatasetRecord> recs;
    for (int i = 0; i < 1000; ++i) recs.push_back(make_record("img" + std::to_string(i), "one.png", {"x"}));
    AugmentOptions opt{dir.path(), dir / "out", 0};
    const auto m = augment_dataset(recs, make_distribution(DistributionKind::Random), 17, opt);
    // Binomial(1000, 1/8): mean 125, sigma sqrt(1000 * 1/8 * 7/8).
    const double sigma = std::sqrt(1000.0 * 0.125 * 0.875);
    std::map<NoiseType, int> counts;
    for (const auto& e : m.entries) ++counts[e.event->type];
    for (NoiseType t : kNoiseTypes) CHECK(std::abs(counts[t] - 125.0) <= 3 * sigma);
}

}
