#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "qacap/calibration.hpp"
#include "qacap/dataset.hpp"
#include "qacap/error.hpp"
#include "qacap/losscheck.hpp"
#include "qacap/metrics.hpp"
#include "qacap/noise.hpp"

namespace qacap::cli {

namespace {

namespace fs = std::filesystem;

void emit(const RunConfig& cfg, Streams io, const std::string& text) {
    if (cfg.out.empty()) {
        io.out << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + cfg.out);
    f << text;
    if (!f) throw IoError("cannot write " + cfg.out);
}

void emit_json(const RunConfig& cfg, Streams io, const nlohmann::json& j) {
    emit(cfg, io, j.dump(2) + "\n");
}

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw ParameterError(std::string("missing required ") + flag);
    if (!fs::exists(value)) throw IoError(std::string("no such file: ") + value);
}

nlohmann::json provenance(const char* command, const RunConfig& cfg,
                          std::initializer_list<std::pair<const char*, std::string>> inputs) {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [name, path] : inputs)
        if (!path.empty()) in[name] = {{"path", path}, {"sha256", sha256_file(path)}};
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command},
            {"config", to_json(cfg)},
            {"inputs", std::move(in)}};
}

template <typename F>
int guarded(Streams io, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        io.err << "error: " << e.what() << "\n";
    } catch (const nlohmann::json::exception& e) {
        io.err << "error: " << e.what() << "\n";
    }
    return kFatal;
}

// Tokenized reference captions, empty ones dropped.
std::vector<metrics::TokenSeq> references(const DatasetRecord& rec) {
    std::vector<metrics::TokenSeq> refs;
    for (const auto& c : rec.captions)
        if (auto t = metrics::tokenize(c); !t.empty()) refs.push_back(std::move(t));
    return refs;
}

metrics::TokenSeq hypothesis(const PredictedCaption& p) {
    std::string joined;
    for (const auto& t : p.tokens) {
        if (!joined.empty()) joined.push_back(' ');
        joined += t;
    }
    return metrics::tokenize(joined);
}

struct EvalItem {
    Difficulty difficulty;
    metrics::TokenSeq hyp;
    std::vector<metrics::TokenSeq> refs;
};

nlohmann::json metric_section(const std::vector<const EvalItem*>& items) {
    metrics::CaptionCorpus corpus;
    for (const auto* it : items) corpus.emplace_back(it->hyp, it->refs);
    nlohmann::json j;
    const auto bleu = metrics::corpus_bleu(corpus, metrics::kBleuMaxN);
    for (int n = 1; n <= metrics::kBleuMaxN; ++n)
        j["bleu" + std::to_string(n)] = 100.0 * bleu[static_cast<std::size_t>(n - 1)];
    double rouge = 0.0;
    for (const auto& [hyp, refs] : corpus) rouge += metrics::rouge_l(hyp, refs);
    j["rouge_l"] = corpus.empty() ? 0.0 : 100.0 * rouge / static_cast<double>(corpus.size());
    // CIDEr-D document frequencies need at least two images.
    j["cider_d"] = corpus.size() >= 2 ? nlohmann::json(100.0 * metrics::cider_d(corpus).mean)
                                      : nlohmann::json(nullptr);
    j["n_images"] = corpus.size();
    return j;
}

std::vector<PredictedCaption> load_nonempty_predictions(const std::string& path) {
    auto preds = load_predictions(path);
    if (preds.empty()) throw DataError("predictions file " + path + " is empty");
    return preds;
}

std::string fmt_double(double v, int precision) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(precision) << v;
    return ss.str();
}

}  // namespace

int cmd_augment(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        require_path(cfg.dataset, "--dataset");
        if (cfg.out.empty()) throw ParameterError("missing required --out directory");
        const auto records = load_dataset(cfg.dataset);
        AugmentOptions opt;
        opt.image_root = cfg.image_root.empty() ? fs::path(cfg.dataset).parent_path()
                                                : fs::path(cfg.image_root);
        opt.out_dir = cfg.out;
        opt.threads = cfg.threads;
        const auto manifest =
            augment_dataset(records, make_distribution(cfg.distribution), cfg.seed, opt);

        if (!cfg.quiet) {
            std::map<NoiseType, std::size_t> counts;
            for (const auto& e : manifest.entries)
                if (e.event) ++counts[e.event->type];
            io.out << "augmented " << manifest.entries.size() - manifest.failures() << " of "
                   << manifest.entries.size() << " images (" << to_string(cfg.distribution)
                   << ", seed " << cfg.seed << ")\n";
            for (NoiseType t : kNoiseTypes)
                io.out << "  " << std::left << std::setw(16) << to_string(t) << counts[t] << "\n";
        }
        for (const auto& e : manifest.entries)
            if (e.error) io.err << "warning: " << e.image_id << ": " << *e.error << "\n";
        return manifest.failures() > 0 ? kPartial : kSuccess;
    });
}

int cmd_evaluate(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        require_path(cfg.dataset, "--dataset");
        require_path(cfg.predictions, "--predictions");
        const auto records = load_dataset(cfg.dataset);
        const auto preds = load_nonempty_predictions(cfg.predictions);

        std::map<std::string, const DatasetRecord*> by_id;
        for (const auto& r : records) by_id.emplace(r.image_id, &r);

        std::vector<EvalItem> items;
        std::set<std::string> seen;
        for (const auto& p : preds) {
            auto it = by_id.find(p.image_id);
            if (it == by_id.end()) throw DataError("prediction for unknown image \"" + p.image_id + "\"");
            if (!seen.insert(p.image_id).second)
                throw DataError("more than one prediction for image \"" + p.image_id + "\"");
            auto refs = references(*it->second);
            if (refs.empty())
                throw DataError("image \"" + p.image_id + "\" has no usable reference captions");
            items.push_back({*it->second->difficulty, hypothesis(p), std::move(refs)});
        }

        std::vector<const EvalItem*> all;
        for (const auto& it : items) all.push_back(&it);
        nlohmann::json report = metric_section(all);
        if (cfg.by_difficulty) {
            nlohmann::json per = nlohmann::json::object();
            for (Difficulty d : kDifficulties) {
                std::vector<const EvalItem*> bucket;
                for (const auto& it : items)
                    if (it.difficulty == d) bucket.push_back(&it);
                per[std::string(to_string(d))] = metric_section(bucket);
            }
            report["per_difficulty"] = std::move(per);
        }
        report["provenance"] = provenance("evaluate", cfg,
                                          {{"dataset", cfg.dataset}, {"predictions", cfg.predictions}});
        emit_json(cfg, io, report);
        return kSuccess;
    });
}

int cmd_calibrate(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        require_path(cfg.dataset, "--dataset");
        require_path(cfg.predictions, "--predictions");
        const auto records = load_dataset(cfg.dataset);
        const auto preds = load_nonempty_predictions(cfg.predictions);

        const auto scored = calibration::score_predictions(records, preds);
        const auto overall = calibration::ece(scored.words, cfg.bins);
        const auto per = calibration::ece_by_difficulty(records, preds, cfg.bins);

        nlohmann::json report = calibration::to_json(overall);
        nlohmann::json per_json = nlohmann::json::object();
        for (const auto& [d, r] : per) per_json[std::string(to_string(d))] = calibration::to_json(r);
        report["per_difficulty"] = std::move(per_json);
        report["aggregation"] = calibration::to_string(cfg.aggregation);

        nlohmann::json captions = nlohmann::json::array();
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const auto& sc = scored.captions[i];
            captions.push_back({{"image_id", sc.image_id},
                                {"confidence", calibration::aggregate_confidence(preds[i], cfg.aggregation)},
                                {"ter", sc.alignment.ter},
                                {"reference", sc.alignment.chosen_ref_index},
                                {"words", preds[i].tokens.size()}});
        }
        report["captions"] = std::move(captions);
        report["provenance"] = provenance("calibrate", cfg,
                                          {{"dataset", cfg.dataset}, {"predictions", cfg.predictions}});
        if (!cfg.svg.empty()) {
            std::ofstream svg(cfg.svg, std::ios::binary | std::ios::trunc);
            if (!svg) throw IoError("cannot write " + cfg.svg);
            svg << reliability_svg(overall);
        }
        emit_json(cfg, io, report);
        return kSuccess;
    });
}

int cmd_bin_difficulty(const RunConfig& cfg, std::optional<long long> count, Streams io) {
    return guarded(io, [&] {
        if (count) {
            if (*count < 0) throw ParameterError("caption count must be non-negative");
            emit(cfg, io, std::string(to_string(bin_difficulty(static_cast<std::size_t>(*count)))) + "\n");
            return kSuccess;
        }
        require_path(cfg.dataset, "--dataset or --count");
        const auto records = load_dataset(cfg.dataset);
        const auto strata = stratify(records);
        nlohmann::json images = nlohmann::json::array();
        for (const auto& r : records) {
            images.push_back({{"id", r.image_id},
                              {"captions", r.captions.size()},
                              {"difficulty", r.difficulty ? nlohmann::json(std::string(to_string(*r.difficulty)))
                                                          : nlohmann::json(nullptr)}});
        }
        nlohmann::json counts{{"easy", strata.easy.size()},
                              {"medium", strata.medium.size()},
                              {"hard", strata.hard.size()},
                              {"excluded", records.size() - strata.total()}};
        emit_json(cfg, io,
                  {{"counts", std::move(counts)},
                   {"images", std::move(images)},
                   {"provenance", provenance("bin-difficulty", cfg, {{"dataset", cfg.dataset}})}});
        return kSuccess;
    });
}

int cmd_losscheck(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        loss::CheckOptions opt;
        opt.seed = cfg.seed;
        opt.cases = cfg.cases;
        opt.max_rows = cfg.max_rows;
        opt.max_cols = cfg.max_cols;
        opt.lambda = cfg.lambda;
        if (opt.cases == 0 || opt.max_rows == 0 || opt.max_cols < 2)
            throw ParameterError("losscheck needs cases >= 1, max_rows >= 1 and max_cols >= 2");
        const auto results = loss::run_loss_checks(opt);

        std::ostringstream table;
        table << "losscheck seed=" << opt.seed << " cases=" << opt.cases << " shapes<=" << opt.max_rows
              << "x" << opt.max_cols << " lambda=" << cfg.lambda << "\n";
        bool ok = true;
        for (const auto& r : results) {
            ok &= r.passed;
            char worst[32];
            std::snprintf(worst, sizeof worst, "%.3e", r.worst);
            char tol[32];
            std::snprintf(tol, sizeof tol, "%.0e", r.tolerance);
            table << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(46) << r.name
                  << " worst=" << std::setw(10) << worst << " tol=" << tol << " n=" << r.trials << "\n";
        }
        table << (ok ? "all checks passed\n" : "some checks FAILED\n");
        if (!cfg.quiet || !ok) emit(cfg, io, table.str());
        if (!ok)
            for (const auto& r : results)
                if (!r.passed) io.err << "failed: " << r.name << "\n";
        return ok ? kSuccess : kFatal;
    });
}

int cmd_shift_probe(const RunConfig& cfg, Streams io) {
    return guarded(io, [&] {
        require_path(cfg.features, "--features");
        std::ifstream in(cfg.features);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("features JSON: " + std::string(e.what()), ParseError::Unit::Byte, e.byte);
        }
        const auto probe = doc.at("probe").get<std::vector<double>>();
        const auto a = doc.at("set_a").get<std::vector<std::vector<double>>>();
        const auto b = doc.at("set_b").get<std::vector<std::vector<double>>>();
        const auto result = calibration::cosine_shift_probe(a, b, probe, cfg.bins);
        nlohmann::json report = calibration::to_json(result);
        report["provenance"] = provenance("shift-probe", cfg, {{"features", cfg.features}});
        emit_json(cfg, io, report);
        return kSuccess;
    });
}

std::string reliability_svg(const calibration::CalibrationReport& report) {
    constexpr double W = 420, H = 420, pad = 50;
    const double plot = W - 2 * pad;
    const double bw = plot / static_cast<double>(report.bins.size());
    std::ostringstream s;
    s << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << W << R"(" height=")" << H
      << R"(" font-family="sans-serif" font-size="12">)" << "\n";
    s << R"(<rect x="0" y="0" width=")" << W << R"(" height=")" << H << R"(" fill="white"/>)" << "\n";
    for (std::size_t i = 0; i < report.bins.size(); ++i) {
        const auto& b = report.bins[i];
        if (!b.accuracy) continue;
        const double x = pad + bw * static_cast<double>(i);
        const double acc_h = plot * *b.accuracy, conf_h = plot * *b.mean_confidence;
        s << R"(<rect x=")" << fmt_double(x, 2) << R"(" y=")" << fmt_double(pad + plot - acc_h, 2)
          << R"(" width=")" << fmt_double(bw, 2) << R"(" height=")" << fmt_double(acc_h, 2)
          << R"(" fill="#3b6fb6" stroke="#1d3b66"/>)" << "\n";
        const double top = pad + plot - std::max(acc_h, conf_h);
        s << R"(<rect x=")" << fmt_double(x, 2) << R"(" y=")" << fmt_double(top, 2) << R"(" width=")"
          << fmt_double(bw, 2) << R"(" height=")" << fmt_double(std::abs(acc_h - conf_h), 2)
          << R"(" fill="#e07b39" fill-opacity="0.35" stroke="#e07b39"/>)" << "\n";
    }
    s << R"(<line x1=")" << pad << R"(" y1=")" << pad + plot << R"(" x2=")" << pad + plot
      << R"(" y2=")" << pad << R"(" stroke="gray" stroke-dasharray="4 4"/>)" << "\n";
    s << R"(<rect x=")" << pad << R"(" y=")" << pad << R"(" width=")" << plot << R"(" height=")" << plot
      << R"(" fill="none" stroke="black"/>)" << "\n";
    s << R"(<text x=")" << W / 2 << R"(" y=")" << H - 12 << R"(" text-anchor="middle">confidence</text>)"
      << "\n";
    s << R"(<text x="14" y=")" << H / 2 << R"(" transform="rotate(-90 14 )" << H / 2
      << R"x()" text-anchor="middle">accuracy</text>)x" << "\n";
    s << R"(<text x=")" << W / 2 << R"(" y="30" text-anchor="middle">ECE = )" << fmt_double(100 * report.ece, 2)
      << " (n = " << report.n << ")</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace qacap::cli
