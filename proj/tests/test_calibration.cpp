#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "qacap/calibration.hpp"
#include "qacap/error.hpp"
#include "qacap/rng.hpp"

using namespace qacap;
using namespace qacap::calibration;

namespace {

std::vector<ScoredWord> random_words(Rng& rng, std::size_t n) {
    std::vector<ScoredWord> w(n);
    for (auto& x : w) {
        x.confidence = 1.0 - rng.uniform();  // (0, 1]
        x.correct = rng.uniform() < x.confidence;
    }
    return w;
}

std::vector<oracle::Word> to_oracle(const std::vector<ScoredWord>& w) {
    std::vector<oracle::Word> out;
    for (const auto& x : w) out.push_back({x.confidence, x.correct});
    return out;
}

std::vector<DatasetRecord> small_dataset() {
    return {make_record("e1", std::nullopt, {"a red bus", "a bus", "red bus", "the bus", "a big red bus"}),
            make_record("m1", std::nullopt, {"two dogs", "dogs in snow", "two dogs playing"}),
            make_record("h1", std::nullopt, {"a can of beans"}),
            make_record("h2", std::nullopt, {"blurry photo", "a blurry image"}),
            make_record("none", std::nullopt, {})};
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("aggregated confidence") {
    CHECK(aggregate_confidence({"x", {"a", "b"}, {0.5, 0.5}}) == 0.5);
    CHECK(aggregate_confidence({"x", {"a"}, {0.9}}) == 0.9);
    PredictedCaption row{"x", std::vector<std::string>(9, "w"), {0.55, 0.18, 0.50, 0.96, 0.80, 0.59, 0.81, 0.71, 0.24}};
    CHECK(std::round(aggregate_confidence(row) * 1000) / 1000 == 0.593);
    const double geo = aggregate_confidence(row, Aggregation::GeoMean);
    double logs = 0;
    for (double p : row.token_probs) logs += std::log(p);
    CHECK(geo == doctest::Approx(std::exp(logs / 9)).epsilon(1e-12));
    CHECK(geo <= aggregate_confidence(row));
    CHECK_THROWS_AS(aggregate_confidence({"x", {}, {}}), Error);
    CHECK(aggregation_from_string(to_string(Aggregation::GeoMean)) == Aggregation::GeoMean);
}

TEST_CASE("bins are left-open and right-closed") {
    CHECK(bin_index(1.0, 10) == 9);
    CHECK(bin_index(0.1, 10) == 0);
    CHECK(bin_index(0.1000001, 10) == 1);
    CHECK(bin_index(0.3, 10) == 2);
    CHECK(bin_index(0.7, 10) == 6);
    CHECK(bin_index(1e-9, 10) == 0);
    CHECK(bin_index(0.5, 1) == 0);
    // Edge values reported in the bins are the same ones used for binning.
    const auto rep = ece(std::vector<ScoredWord>{{0.3, true}}, 10);
    CHECK(rep.bins[2].hi == 0.3);
    CHECK(rep.bins[2].count == 1);
}

TEST_CASE("ece reference cases") {
    std::vector<ScoredWord> two = {{0.8, true}, {0.8, false}};
    const auto r = ece(two, 1);
    CHECK(r.ece == doctest::Approx(0.3).epsilon(1e-15));
    REQUIRE(r.bins.size() == 1);
    CHECK(*r.bins[0].accuracy == 0.5);
    CHECK(*r.bins[0].mean_confidence == 0.8);

    std::vector<ScoredWord> perfect(20, {1.0, true});
    const auto p = ece(perfect, 10);
    CHECK(p.ece == 0.0);
    for (std::size_t i = 0; i + 1 < p.bins.size(); ++i) {
        CHECK(p.bins[i].count == 0);
        CHECK_FALSE(p.bins[i].accuracy);
    }
    CHECK(p.bins.back().count == 20);

    CHECK_THROWS_AS(ece(std::vector<ScoredWord>{}, 10), Error);
    CHECK_THROWS_AS(ece(two, 0), ParameterError);
    CHECK_THROWS_AS(ece(std::vector<ScoredWord>{{0.0, true}}, 10), Error);
    CHECK_THROWS_AS(ece(std::vector<ScoredWord>{{1.2, true}}, 10), Error);
}

TEST_CASE("ece matches the binning oracle and its invariants") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        auto words = random_words(rng, static_cast<std::size_t>(rng.uniform_int(1, 80)));
        const auto m = static_cast<std::size_t>(rng.uniform_int(1, 20));
        const auto rep = ece(words, m);
        CHECK(std::abs(rep.ece - oracle::ece(to_oracle(words), m)) <= 1e-12);
        CHECK(rep.ece >= 0);
        CHECK(rep.ece <= 1);
        std::size_t total = 0;
        for (const auto& b : rep.bins) total += b.count;
        CHECK(total == words.size());
        CHECK(rep.n == words.size());

        auto shuffled = words;
        std::reverse(shuffled.begin(), shuffled.end());
        CHECK(std::abs(ece(shuffled, m).ece - rep.ece) <= 1e-12);
    }
}

TEST_CASE("ece vanishes when every bin is calibrated") {
    // Each bin holds confidence 0.25 words with exactly a quarter correct.
    std::vector<ScoredWord> w;
    for (int i = 0; i < 8; ++i) w.push_back({0.25, i % 4 == 0});
    for (int i = 0; i < 4; ++i) w.push_back({0.75, i != 0});
    CHECK(ece(w, 4).ece == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("score_predictions pairs probabilities with alignment flags") {
    const std::vector<DatasetRecord> ds = {make_record("x", std::nullopt, {"a x c"})};
    const auto s = score_predictions(ds, {{"x", {"a", "b", "c"}, {0.9, 0.2, 0.8}}});
    REQUIRE(s.words.size() == 3);
    CHECK(s.words[0].confidence == 0.9);
    CHECK(s.words[0].correct);
    CHECK_FALSE(s.words[1].correct);
    CHECK(s.words[2].correct);
    CHECK(s.captions[0].alignment.ter == doctest::Approx(1.0 / 3.0));

    const auto same = score_predictions(ds, {{"x", {"A", "x", "c."}, {0.5, 0.6, 0.7}}});
    for (const auto& w : same.words) CHECK(w.correct);

    CHECK(score_predictions(ds, {}).words.empty());
    try {
        score_predictions(ds, {{"missing", {"a"}, {0.5}}});
        FAIL("expected an error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("missing") != std::string::npos);
    }
    const std::vector<DatasetRecord> uncaptioned = {make_record("u", std::nullopt, {})};
    CHECK_THROWS_AS(score_predictions(uncaptioned, {{"u", {"a"}, {0.5}}}), DataError);
}

TEST_CASE("per-difficulty reports restrict the word list") {
    const auto ds = small_dataset();
    const std::vector<PredictedCaption> preds = {{"e1", {"a", "red", "bus"}, {0.9, 0.8, 0.7}},
                                                 {"h1", {"a", "tin", "of", "beans"}, {0.6, 0.3, 0.9, 0.4}},
                                                 {"m1", {"two", "cats"}, {0.95, 0.5}},
                                                 {"h2", {"blurry", "photo"}, {0.2, 0.35}}};
    const auto all = score_predictions(ds, preds);
    std::size_t tokens = 0;
    for (const auto& p : preds) tokens += p.tokens.size();
    CHECK(all.words.size() == tokens);

    const auto per = ece_by_difficulty(ds, preds, 10);
    REQUIRE(per.size() == 3);
    std::size_t n = 0;
    for (const auto& [d, r] : per) n += r.n;
    CHECK(n == all.words.size());

    std::vector<PredictedCaption> hard;
    for (const auto& p : preds)
        if (p.image_id[0] == 'h') hard.push_back(p);
    CHECK(per.at(Difficulty::Hard).ece == doctest::Approx(ece(score_predictions(ds, hard).words, 10).ece).epsilon(1e-15));

    const auto easy_only = ece_by_difficulty(ds, {preds[0]}, 10);
    REQUIRE(easy_only.size() == 1);
    CHECK(easy_only.count(Difficulty::Easy) == 1);
}

TEST_CASE("a model whose confidence equals its correctness has zero ece") {
    const auto ds = small_dataset();
    const std::vector<PredictedCaption> a = {{"h1", {"a", "can", "of", "beans"}, {1.0, 1.0, 1.0, 1.0}}};
    const std::vector<PredictedCaption> b = {{"h1", {"a", "can", "of", "beans"}, {0.4, 0.6, 0.2, 0.9}}};
    const double ea = ece_by_difficulty(ds, a).at(Difficulty::Hard).ece;
    const double eb = ece_by_difficulty(ds, b).at(Difficulty::Hard).ece;
    CHECK(ea == 0.0);
    CHECK(ea <= eb);
}

TEST_CASE("cosine shift probe against the direct formula") {
    Rng rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        auto vec = [&] {
            std::vector<double> v(8);
            for (double& x : v) x = rng.uniform(-1, 1);
            return v;
        };
        const auto probe = vec();
        std::vector<std::vector<double>> a(20), b(15);
        for (auto& v : a) v = vec();
        for (auto& v : b) v = vec();
        const auto bins = static_cast<std::size_t>(rng.uniform_int(1, 12));
        const auto r = cosine_shift_probe(a, b, probe, bins);
        CHECK(r.bins == bins);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(std::abs(r.set_a.similarities[i] - oracle::cosine(probe, a[i])) <= 1e-12);
        std::vector<std::size_t> counts(bins, 0);
        double mean = 0;
        for (const auto& v : b) {
            const double s = oracle::cosine(probe, v);
            mean += s;
            auto k = static_cast<std::size_t>(std::floor((s + 1) / 2 * static_cast<double>(bins)));
            ++counts[std::min(k, bins - 1)];
        }
        mean /= static_cast<double>(b.size());
        CHECK(r.set_b.counts == counts);
        CHECK(std::abs(r.set_b.mean - mean) <= 1e-12);
    }
}

TEST_CASE("shift probe edge cases") {
    const std::vector<double> probe = {1, 0, 0};
    const auto same = cosine_shift_probe({probe, probe}, {{0, 1, 0}, {0, 0, 2}}, probe, 4);
    CHECK(same.set_a.counts == std::vector<std::size_t>{0, 0, 0, 2});
    CHECK(same.set_a.mean == 1.0);
    CHECK(same.set_a.std == 0.0);
    for (double s : same.set_b.similarities) CHECK(s == 0.0);
    CHECK(same.set_b.counts == std::vector<std::size_t>{0, 0, 2, 0});

    try {
        cosine_shift_probe({probe}, {probe, {0, 0, 0}}, probe, 4);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find('1') != std::string::npos);
    }
    CHECK_THROWS_AS(cosine_shift_probe({{1, 0}}, {probe}, probe, 4), ShapeError);
    CHECK_THROWS_AS(cosine_shift_probe({probe}, {probe}, probe, 0), ParameterError);
    CHECK(similarity_bin(1.0, 10) == 9);
    CHECK(similarity_bin(-1.0, 10) == 0);
}

TEST_CASE("report JSON shape") {
    const auto r = ece(std::vector<ScoredWord>{{0.8, true}, {0.8, false}}, 2);
    const auto j = to_json(r);
    CHECK(j["m"] == 2);
    CHECK(j["n"] == 2);
    CHECK(j["bins"].size() == 2);
    CHECK(j["bins"][0]["accuracy"].is_null());
    CHECK(j["bins"][1]["mean_conf"] == 0.8);
}

}
