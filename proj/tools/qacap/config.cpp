#include "config.hpp"

#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "qacap/error.hpp"

namespace qacap::cli {

nlohmann::json to_json(const RunConfig& c) {
    return {{"seed", c.seed},
            {"distribution", to_string(c.distribution)},
            {"bins", c.bins},
            {"lambda", c.lambda},
            {"aggregation", calibration::to_string(c.aggregation)},
            {"threads", c.threads},
            {"by_difficulty", c.by_difficulty},
            {"quiet", c.quiet},
            {"cases", c.cases},
            {"max_rows", c.max_rows},
            {"max_cols", c.max_cols},
            {"dataset", c.dataset},
            {"predictions", c.predictions},
            {"image_root", c.image_root},
            {"features", c.features},
            {"out", c.out},
            {"svg", c.svg}};
}

RunConfig merge_json(RunConfig c, const nlohmann::json& j) {
    if (!j.is_object()) throw DataError("config must be a JSON object");
    static const std::set<std::string> known = {
        "seed",  "distribution", "bins",     "lambda",   "aggregation", "threads",
        "by_difficulty", "quiet", "cases",   "max_rows", "max_cols",    "dataset",
        "predictions",   "image_root", "features", "out", "svg"};
    for (const auto& [k, v] : j.items())
        if (!known.contains(k)) throw DataError("unknown config key \"" + k + "\"");
    try {
        auto get = [&](const char* key, auto& field) {
            if (auto it = j.find(key); it != j.end()) it->get_to(field);
        };
        get("seed", c.seed);
        if (auto it = j.find("distribution"); it != j.end())
            c.distribution = distribution_kind_from_string(it->get<std::string>());
        get("bins", c.bins);
        get("lambda", c.lambda);
        if (auto it = j.find("aggregation"); it != j.end())
            c.aggregation = calibration::aggregation_from_string(it->get<std::string>());
        get("threads", c.threads);
        get("by_difficulty", c.by_difficulty);
        get("quiet", c.quiet);
        get("cases", c.cases);
        get("max_rows", c.max_rows);
        get("max_cols", c.max_cols);
        get("dataset", c.dataset);
        get("predictions", c.predictions);
        get("image_root", c.image_root);
        get("features", c.features);
        get("out", c.out);
        get("svg", c.svg);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("config " + path.string() + ": " + e.what(), ParseError::Unit::Byte, e.byte);
    }
    return merge_json(std::move(base), j);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

}  // namespace qacap::cli
