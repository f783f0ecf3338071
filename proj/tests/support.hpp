#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qacap/dataset.hpp"
#include "qacap/raster.hpp"
#include "qacap/rng.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        const auto stamp = qacap::mix64((std::uint64_t{std::random_device{}()} << 32) ^ ++counter);
        path_ = fs::temp_directory_path() / ("qacap-" + tag + "-" + std::to_string(stamp));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

// Noise-textured raster with a few smooth gradients so blurs have work to do.
inline qacap::Raster random_raster(qacap::Rng& rng, std::size_t w, std::size_t h) {
    qacap::Raster img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            auto c = [&](std::size_t base) {
                return static_cast<std::uint8_t>((base + static_cast<std::size_t>(rng.uniform_int(0, 63))) % 256);
            };
            img.at(x, y) = {c(x * 5), c(y * 7), c((x + y) * 3)};
        }
    return img;
}

// Writes `n` random PNGs and a dataset JSON next to them. Caption counts cycle
// through 5..1 so every difficulty bucket is populated.
inline fs::path write_image_fixture(const fs::path& dir, std::size_t n, std::uint64_t seed,
                                    std::size_t w = 24, std::size_t h = 18) {
    qacap::Rng rng(seed);
    std::vector<qacap::DatasetRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "img" + std::to_string(i);
        const std::string file = id + ".png";
        qacap::write_png(random_raster(rng, w + i % 5, h + i % 3), dir / file);
        std::vector<std::string> caps;
        for (std::size_t k = 0; k < 5 - i % 5; ++k)
            caps.push_back("a photo of object " + std::to_string(i) + " number " + std::to_string(k));
        records.push_back(qacap::make_record(id, file, caps));
    }
    const auto path = dir / "dataset.json";
    write_file(path, qacap::dataset_to_json(records).dump(2));
    return path;
}

using Corpus = std::vector<std::pair<std::vector<std::string>, std::vector<std::vector<std::string>>>>;

// Random captions over a small vocabulary so n-grams repeat across images.
inline Corpus toy_corpus(std::uint64_t seed, std::size_t images, std::size_t vocab = 10) {
    qacap::Rng rng(seed);
    auto word = [&] { return "w" + std::to_string(rng.uniform_int(0, static_cast<std::int64_t>(vocab) - 1)); };
    auto sentence = [&](std::int64_t lo, std::int64_t hi) {
        std::vector<std::string> s(static_cast<std::size_t>(rng.uniform_int(lo, hi)));
        for (auto& w : s) w = word();
        return s;
    };
    Corpus c;
    for (std::size_t i = 0; i < images; ++i) {
        std::vector<std::vector<std::string>> refs(static_cast<std::size_t>(rng.uniform_int(1, 5)));
        for (auto& r : refs) r = sentence(3, 12);
        // Half the hypotheses borrow a slice of a reference so higher orders match.
        std::vector<std::string> hyp;
        if (rng.uniform() < 0.5) {
            const auto& r = refs[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(refs.size()) - 1))];
            const auto a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(r.size()) - 2));
            hyp.assign(r.begin() + static_cast<long>(a), r.end());
            if (rng.uniform() < 0.5) hyp.push_back(word());
        } else {
            hyp = sentence(2, 10);
        }
        c.emplace_back(std::move(hyp), std::move(refs));
    }
    return c;
}

}  // namespace testing
