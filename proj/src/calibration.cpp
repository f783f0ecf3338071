#include "qacap/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "qacap/error.hpp"

namespace qacap::calibration {

std::string_view to_string(Aggregation a) {
    return a == Aggregation::Mean ? "mean" : "geomean";
}

Aggregation aggregation_from_string(std::string_view s) {
    if (s == "mean") return Aggregation::Mean;
    if (s == "geomean") return Aggregation::GeoMean;
    throw ParameterError("unknown aggregation \"" + std::string(s) + "\" (expected mean or geomean)");
}

double aggregate_confidence(const PredictedCaption& pred, Aggregation how) {
    if (pred.token_probs.empty()) throw ParameterError("cannot aggregate an empty prediction");
    double acc = 0.0;
    for (double p : pred.token_probs) {
        if (!(p > 0.0 && p <= 1.0)) throw ParameterError("token probability outside (0, 1]");
        acc += how == Aggregation::Mean ? p : std::log(p);
    }
    acc /= static_cast<double>(pred.token_probs.size());
    return how == Aggregation::Mean ? acc : std::exp(acc);
}

std::size_t bin_index(double confidence, std::size_t m) {
    const double md = static_cast<double>(m);
    auto i = static_cast<std::size_t>(std::clamp(std::ceil(confidence * md) - 1.0, 0.0, md - 1.0));
    // Snap to the reported edges i/m so the binning agrees with them exactly.
    while (i > 0 && confidence <= static_cast<double>(i) / md) --i;
    while (i + 1 < m && confidence > static_cast<double>(i + 1) / md) ++i;
    return i;
}

CalibrationReport ece(std::span<const ScoredWord> words, std::size_t m) {
    if (m == 0) throw ParameterError("number of bins must be >= 1");
    if (words.empty()) throw ParameterError("ECE of an empty prediction set");
    std::vector<double> conf_sum(m, 0.0), correct(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    for (const auto& w : words) {
        if (!(w.confidence > 0.0 && w.confidence <= 1.0))
            throw ParameterError("confidence " + std::to_string(w.confidence) + " outside (0, 1]");
        const std::size_t b = bin_index(w.confidence, m);
        ++count[b];
        conf_sum[b] += w.confidence;
        correct[b] += w.correct ? 1.0 : 0.0;
    }
    CalibrationReport r;
    r.n = words.size();
    const double n = static_cast<double>(words.size());
    for (std::size_t b = 0; b < m; ++b) {
        ReliabilityBin bin;
        bin.lo = static_cast<double>(b) / static_cast<double>(m);
        bin.hi = static_cast<double>(b + 1) / static_cast<double>(m);
        bin.count = count[b];
        if (count[b] > 0) {
            const double c = static_cast<double>(count[b]);
            bin.mean_confidence = conf_sum[b] / c;
            bin.accuracy = correct[b] / c;
            r.ece += c / n * std::abs(*bin.accuracy - *bin.mean_confidence);
        }
        r.bins.push_back(bin);
    }
    return r;
}

namespace {

std::unordered_map<std::string, const DatasetRecord*> index_records(
    const std::vector<DatasetRecord>& dataset) {
    std::unordered_map<std::string, const DatasetRecord*> by_id;
    for (const auto& r : dataset) by_id.emplace(r.image_id, &r);
    return by_id;
}

std::vector<metrics::TokenSeq> reference_tokens(const DatasetRecord& rec) {
    std::vector<metrics::TokenSeq> refs;
    for (const auto& c : rec.captions)
        if (auto t = metrics::tokenize(c); !t.empty()) refs.push_back(std::move(t));
    return refs;
}

}  // namespace

ScoredPredictions score_predictions(const std::vector<DatasetRecord>& dataset,
                                    const std::vector<PredictedCaption>& preds) {
    const auto by_id = index_records(dataset);
    ScoredPredictions out;
    for (const auto& p : preds) {
        validate(p);
        auto it = by_id.find(p.image_id);
        if (it == by_id.end()) throw DataError("prediction for unknown image \"" + p.image_id + "\"");
        auto refs = reference_tokens(*it->second);
        if (refs.empty())
            throw DataError("image \"" + p.image_id + "\" has no usable reference captions");

        metrics::TokenSeq hyp;
        hyp.reserve(p.tokens.size());
        for (const auto& t : p.tokens) hyp.push_back(metrics::normalize_token(t));
        auto alignment = metrics::ter_align(hyp, refs);
        if (alignment.per_word_correct.size() != p.token_probs.size())
            throw Error("internal: alignment length differs from token count for \"" + p.image_id + "\"");

        ScoredCaption sc{p.image_id, alignment, out.words.size()};
        for (std::size_t i = 0; i < p.token_probs.size(); ++i)
            out.words.push_back({p.token_probs[i], alignment.per_word_correct[i]});
        out.captions.push_back(std::move(sc));
    }
    return out;
}

std::map<Difficulty, CalibrationReport> ece_by_difficulty(const std::vector<DatasetRecord>& dataset,
                                                          const std::vector<PredictedCaption>& preds,
                                                          std::size_t m) {
    const auto by_id = index_records(dataset);
    std::map<Difficulty, std::vector<PredictedCaption>> grouped;
    for (const auto& p : preds) {
        auto it = by_id.find(p.image_id);
        if (it == by_id.end()) throw DataError("prediction for unknown image \"" + p.image_id + "\"");
        const auto& rec = *it->second;
        if (rec.captions.empty())
            throw DataError("image \"" + p.image_id + "\" has no reference captions");
        grouped[rec.difficulty.value_or(bin_difficulty(rec.captions.size()))].push_back(p);
    }
    std::map<Difficulty, CalibrationReport> out;
    for (const auto& [d, group] : grouped) {
        auto scored = score_predictions(dataset, group);
        if (!scored.words.empty()) out.emplace(d, ece(scored.words, m));
    }
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine similarity of vectors with different dimensions");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw ParameterError("cosine similarity of a zero vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::size_t similarity_bin(double s, std::size_t bins) {
    const double pos = (std::clamp(s, -1.0, 1.0) + 1.0) / 2.0 * static_cast<double>(bins);
    return std::min(static_cast<std::size_t>(pos), bins - 1);
}

namespace {

Histogram probe_set(const std::vector<std::vector<double>>& set, std::span<const double> probe,
                    std::size_t bins, const char* name) {
    Histogram h;
    h.counts.assign(bins, 0);
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i].size() != probe.size())
            throw ShapeError(std::string(name) + "[" + std::to_string(i) + "] has dimension " +
                             std::to_string(set[i].size()) + ", probe has " +
                             std::to_string(probe.size()));
        double norm = 0;
        for (double v : set[i]) norm += v * v;
        if (norm == 0.0)
            throw ParameterError(std::string(name) + "[" + std::to_string(i) + "] has zero norm");
        const double s = cosine_similarity(probe, set[i]);
        h.similarities.push_back(s);
        ++h.counts[similarity_bin(s, bins)];
    }
    if (!h.similarities.empty()) {
        const double n = static_cast<double>(h.similarities.size());
        for (double s : h.similarities) h.mean += s;
        h.mean /= n;
        for (double s : h.similarities) h.std += (s - h.mean) * (s - h.mean);
        h.std = std::sqrt(h.std / n);
    }
    return h;
}

}  // namespace

ShiftProbe cosine_shift_probe(const std::vector<std::vector<double>>& features_a,
                              const std::vector<std::vector<double>>& features_b,
                              std::span<const double> probe, std::size_t bins) {
    if (bins == 0) throw ParameterError("number of bins must be >= 1");
    if (probe.empty()) throw ParameterError("empty probe vector");
    double norm = 0;
    for (double v : probe) norm += v * v;
    if (norm == 0.0) throw ParameterError("probe has zero norm");
    return {bins, probe_set(features_a, probe, bins, "set_a"), probe_set(features_b, probe, bins, "set_b")};
}

nlohmann::json to_json(const ReliabilityBin& bin) {
    nlohmann::json j{{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}};
    j["mean_conf"] = bin.mean_confidence ? nlohmann::json(*bin.mean_confidence) : nlohmann::json(nullptr);
    j["accuracy"] = bin.accuracy ? nlohmann::json(*bin.accuracy) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const CalibrationReport& report) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : report.bins) bins.push_back(to_json(b));
    return {{"m", report.bins.size()}, {"n", report.n}, {"ece", report.ece}, {"bins", std::move(bins)}};
}

nlohmann::json to_json(const ShiftProbe& probe) {
    auto set = [](const Histogram& h) {
        return nlohmann::json{{"counts", h.counts}, {"mean", h.mean}, {"std", h.std}, {"n", h.similarities.size()}};
    };
    return {{"bins", probe.bins}, {"set_a", set(probe.set_a)}, {"set_b", set(probe.set_b)}};
}

}  // namespace qacap::calibration
