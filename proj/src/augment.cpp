#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "qacap/error.hpp"
#include "qacap/noise.hpp"

namespace qacap {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("cannot write " + path.string());
}

ManifestEntry process(const DatasetRecord& rec, const NoiseDistribution& dist, std::uint64_t seed,
                      const AugmentOptions& options) {
    ManifestEntry entry;
    entry.image_id = rec.image_id;
    try {
        if (!rec.image_path) throw DataError("record has no image file");
        Rng rng(derive_seed(seed, rec.image_id));
        NoiseEvent event = sample_event(dist, rng);
        const auto src = options.image_root / *rec.image_path;
        Raster img = read_image(src);
        Raster distorted = apply(img, event);
        entry.output = output_name(rec.image_id);
        write_png(distorted, options.out_dir / entry.output);
        entry.event = event;
    } catch (const Error& e) {
        entry.event.reset();
        entry.output.clear();
        entry.error = e.what();
    }
    return entry;
}

}  // namespace

std::string output_name(std::string_view image_id) {
    std::string name;
    bool changed = false;
    for (char c : image_id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        name.push_back(ok ? c : '_');
        changed |= !ok;
    }
    if (name.empty() || name.front() == '.') {
        name.insert(name.begin(), '_');
        changed = true;
    }
    // Sanitized ids could collide; disambiguate with a hash of the original.
    if (changed) {
        char suffix[20];
        std::snprintf(suffix, sizeof suffix, "-%016llx",
                      static_cast<unsigned long long>(fnv1a64(image_id)));
        name += suffix;
    }
    return name + ".png";
}

std::size_t Manifest::failures() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.error.has_value(); }));
}

nlohmann::json Manifest::to_json() const {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : entries) {
        nlohmann::json row;
        row["image_id"] = e.image_id;
        if (e.event) {
            row["type"] = to_string(e.event->type);
            row["params"] = params_to_json(e.event->params);
            row["seed"] = e.event->seed;
            row["output"] = e.output;
        } else {
            row["error"] = e.error.value_or("unknown error");
        }
        events.push_back(std::move(row));
    }
    return {{"seed", seed}, {"distribution", to_string(distribution)}, {"events", std::move(events)}};
}

Manifest augment_dataset(const std::vector<DatasetRecord>& records, const NoiseDistribution& dist,
                         std::uint64_t seed, const AugmentOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec || !std::filesystem::is_directory(options.out_dir))
        throw IoError("cannot create output directory " + options.out_dir.string());

    Manifest manifest;
    manifest.seed = seed;
    manifest.distribution = dist.kind;
    manifest.entries.resize(records.size());

    unsigned threads = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(records.size(), 1)));

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++)
            manifest.entries[i] = process(records[i], dist, seed, options);
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }

    // The augmented copy of each image keeps the original captions.
    std::vector<DatasetRecord> augmented;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& entry = manifest.entries[i];
        if (!entry.event) continue;
        augmented.push_back(records[i]);
        augmented.back().image_path = entry.output;
    }

    write_text(options.out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    write_text(options.out_dir / "dataset.json", dataset_to_json(augmented).dump(2) + "\n");
    return manifest;
}

}  // namespace qacap
