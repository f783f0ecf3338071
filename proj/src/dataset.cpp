#include "qacap/dataset.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <json.hpp>

#include "qacap/error.hpp"

namespace qacap {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) throw DataError(ctx + ": missing field \"" + key + "\"");
    return *it;
}

}  // namespace

std::string_view to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Medium: return "medium";
        case Difficulty::Hard: return "hard";
    }
    return "unknown";
}

Difficulty difficulty_from_string(std::string_view s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "medium") return Difficulty::Medium;
    if (s == "hard") return Difficulty::Hard;
    throw ParameterError("unknown difficulty \"" + std::string(s) + "\"");
}

Difficulty bin_difficulty(std::size_t caption_count) {
    if (caption_count == 0 || caption_count > kMaxCaptions)
        throw ParameterError("caption count " + std::to_string(caption_count) +
                             " outside [1, 5]");
    if (caption_count == 5) return Difficulty::Easy;
    if (caption_count >= 3) return Difficulty::Medium;
    return Difficulty::Hard;
}

DatasetRecord make_record(std::string image_id, std::optional<std::string> image_path,
                          std::vector<std::string> captions) {
    if (image_id.empty()) throw DataError("empty image id");
    if (captions.size() > kMaxCaptions)
        throw DataError("image \"" + image_id + "\" has " + std::to_string(captions.size()) +
                        " captions, at most 5 allowed");
    DatasetRecord r{std::move(image_id), std::move(image_path), std::move(captions), std::nullopt};
    if (!r.captions.empty()) r.difficulty = bin_difficulty(r.captions.size());
    return r;
}

void validate(const PredictedCaption& pred) {
    if (pred.image_id.empty()) throw DataError("prediction with empty image_id");
    if (pred.tokens.size() != pred.token_probs.size())
        throw DataError("prediction for \"" + pred.image_id + "\": " +
                        std::to_string(pred.tokens.size()) + " tokens but " +
                        std::to_string(pred.token_probs.size()) + " probabilities");
    if (pred.tokens.empty()) throw DataError("prediction for \"" + pred.image_id + "\" is empty");
    for (double p : pred.token_probs) {
        if (!(p > 0.0 && p <= 1.0))
            throw DataError("prediction for \"" + pred.image_id + "\": probability " +
                            std::to_string(p) + " outside (0, 1]");
    }
}

std::vector<DatasetRecord> parse_dataset(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("dataset JSON: ") + e.what(), ParseError::Unit::Byte, e.byte);
    }
    if (!doc.is_object()) throw DataError("dataset JSON: top level must be an object");
    const auto& images = require(doc, "images", "dataset JSON");
    if (!images.is_array()) throw DataError("dataset JSON: \"images\" must be an array");

    std::vector<DatasetRecord> out;
    out.reserve(images.size());
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        const std::string ctx = "images[" + std::to_string(i) + "]";
        if (!img.is_object()) throw DataError(ctx + ": must be an object");
        const auto& id = require(img, "id", ctx);
        if (!id.is_string()) throw DataError(ctx + ": \"id\" must be a string");

        std::optional<std::string> file;
        if (auto it = img.find("file"); it != img.end() && !it->is_null()) {
            if (!it->is_string()) throw DataError(ctx + ": \"file\" must be a string or null");
            file = it->get<std::string>();
        }

        std::vector<std::string> captions;
        if (auto it = img.find("captions"); it != img.end()) {
            if (!it->is_array()) throw DataError(ctx + ": \"captions\" must be an array");
            for (const auto& c : *it) {
                if (!c.is_string()) throw DataError(ctx + ": captions must be strings");
                captions.push_back(c.get<std::string>());
            }
        }

        auto rec = make_record(id.get<std::string>(), std::move(file), std::move(captions));
        if (!seen.insert(rec.image_id).second)
            throw DataError("duplicate image id \"" + rec.image_id + "\"");
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, DatasetFormat) {
    return parse_dataset(read_file(path));
}

nlohmann::json dataset_to_json(const std::vector<DatasetRecord>& records) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json img;
        img["id"] = r.image_id;
        img["file"] = r.image_path ? nlohmann::json(*r.image_path) : nlohmann::json(nullptr);
        img["captions"] = r.captions;
        images.push_back(std::move(img));
    }
    return nlohmann::json{{"images", std::move(images)}};
}

std::vector<PredictedCaption> parse_predictions(std::string_view text) {
    std::vector<PredictedCaption> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

        auto fail = [&](const std::string& msg) -> ParseError {
            return ParseError("predictions line " + std::to_string(line_no) + ": " + msg,
                              ParseError::Unit::Line, line_no);
        };
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw fail(e.what());
        }
        if (!obj.is_object()) throw fail("expected a JSON object");
        PredictedCaption p;
        try {
            p.image_id = obj.at("image_id").get<std::string>();
            p.tokens = obj.at("tokens").get<std::vector<std::string>>();
            p.token_probs = obj.at("token_probs").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
        try {
            validate(p);
        } catch (const DataError& e) {
            throw fail(e.what());
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<PredictedCaption> load_predictions(const std::filesystem::path& path) {
    return parse_predictions(read_file(path));
}

nlohmann::json prediction_to_json(const PredictedCaption& pred) {
    return nlohmann::json{
        {"image_id", pred.image_id}, {"tokens", pred.tokens}, {"token_probs", pred.token_probs}};
}

const std::vector<DatasetRecord>& Strata::operator[](Difficulty d) const {
    switch (d) {
        case Difficulty::Easy: return easy;
        case Difficulty::Medium: return medium;
        case Difficulty::Hard: break;
    }
    return hard;
}

std::vector<DatasetRecord>& Strata::operator[](Difficulty d) {
    return const_cast<std::vector<DatasetRecord>&>(std::as_const(*this)[d]);
}

Strata stratify(const std::vector<DatasetRecord>& records) {
    Strata s;
    for (const auto& r : records) {
        if (r.captions.empty()) continue;
        s[r.difficulty.value_or(bin_difficulty(r.captions.size()))].push_back(r);
    }
    return s;
}

}  // namespace qacap
