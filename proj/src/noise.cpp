#include "qacap/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qacap/error.hpp"

namespace qacap {

namespace {

std::uint8_t quantize(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

void check_range(double v, double lo, double hi, const char* what) {
    if (!(v >= lo && v <= hi))
        throw ParameterError(std::string(what) + " " + std::to_string(v) + " outside [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

void check_motion(int kernel, int angle) {
    if (kernel < limits::kMinMotionKernel || kernel > limits::kMaxMotionKernel || kernel % 2 == 0)
        throw ParameterError("motion blur kernel " + std::to_string(kernel) +
                             " must be odd and in [15, 49]");
    if (angle != 45 && angle != -45)
        throw ParameterError("motion blur angle " + std::to_string(angle) + " must be -45 or 45");
}

void check_severity(int severity) {
    if (severity < limits::kMinSeverity || severity > limits::kMaxSeverity)
        throw ParameterError("defocus severity " + std::to_string(severity) + " outside [1, 5]");
}

// Separate stream for cutout placement so it does not alias the sampling
// stream that produced the event seed.
constexpr std::uint64_t kCutoutStream = 0x6375746f75742d31ULL;

}  // namespace

std::string_view to_string(NoiseType t) {
    switch (t) {
        case NoiseType::MotionBlur: return "motion_blur";
        case NoiseType::DefocusBlur: return "defocus_blur";
        case NoiseType::ContrastBright: return "contrast_bright";
        case NoiseType::ContrastDark: return "contrast_dark";
        case NoiseType::Crop: return "crop";
        case NoiseType::Cutout: return "cutout";
        case NoiseType::Rotation: return "rotation";
        case NoiseType::Flip: return "flip";
    }
    return "unknown";
}

NoiseType noise_type_from_string(std::string_view s) {
    for (NoiseType t : kNoiseTypes)
        if (to_string(t) == s) return t;
    throw ParameterError("unknown noise type \"" + std::string(s) + "\"");
}

void validate(const NoiseEvent& event) {
    auto mismatch = [&] {
        return ParameterError("parameters do not match noise type " +
                              std::string(to_string(event.type)));
    };
    switch (event.type) {
        case NoiseType::MotionBlur: {
            auto* p = std::get_if<MotionBlurParams>(&event.params);
            if (!p) throw mismatch();
            check_motion(p->kernel, p->angle);
            return;
        }
        case NoiseType::DefocusBlur: {
            auto* p = std::get_if<DefocusParams>(&event.params);
            if (!p) throw mismatch();
            check_severity(p->severity);
            return;
        }
        case NoiseType::ContrastBright:
        case NoiseType::ContrastDark: {
            auto* p = std::get_if<ContrastParams>(&event.params);
            if (!p) throw mismatch();
            check_range(p->gamma, limits::kMinGamma, limits::kMaxGamma, "gamma");
            if (event.type == NoiseType::ContrastBright && !(p->gamma < 1.0))
                throw ParameterError("contrast_bright requires gamma < 1");
            if (event.type == NoiseType::ContrastDark && !(p->gamma > 1.0))
                throw ParameterError("contrast_dark requires gamma > 1");
            return;
        }
        case NoiseType::Crop: {
            auto* p = std::get_if<CropParams>(&event.params);
            if (!p) throw mismatch();
            for (double f : {p->left, p->right, p->top, p->bottom})
                check_range(f, 0.0, limits::kMaxCropFraction, "crop fraction");
            return;
        }
        case NoiseType::Cutout: {
            auto* p = std::get_if<CutoutParams>(&event.params);
            if (!p) throw mismatch();
            check_range(p->frac_h, limits::kMinCutoutFraction, limits::kMaxCutoutFraction,
                        "cutout fraction");
            check_range(p->frac_w, limits::kMinCutoutFraction, limits::kMaxCutoutFraction,
                        "cutout fraction");
            return;
        }
        case NoiseType::Rotation: {
            auto* p = std::get_if<RotationParams>(&event.params);
            if (!p) throw mismatch();
            check_range(p->degrees, -limits::kMaxRotationDegrees, limits::kMaxRotationDegrees,
                        "rotation");
            return;
        }
        case NoiseType::Flip:
            if (!std::holds_alternative<FlipParams>(event.params)) throw mismatch();
            return;
    }
}

nlohmann::json params_to_json(const NoiseParams& params) {
    struct Visitor {
        nlohmann::json operator()(const MotionBlurParams& p) const {
            return {{"kernel", p.kernel}, {"angle", p.angle}};
        }
        nlohmann::json operator()(const DefocusParams& p) const {
            nlohmann::json j{{"severity", p.severity}};
            if (p.severity >= limits::kMinSeverity && p.severity <= limits::kMaxSeverity)
                j["radius"] = limits::kDefocusRadius[static_cast<std::size_t>(p.severity - 1)];
            return j;
        }
        nlohmann::json operator()(const ContrastParams& p) const { return {{"gamma", p.gamma}}; }
        nlohmann::json operator()(const CropParams& p) const {
            return {{"left", p.left}, {"right", p.right}, {"top", p.top}, {"bottom", p.bottom}};
        }
        nlohmann::json operator()(const CutoutParams& p) const {
            return {{"frac_h", p.frac_h}, {"frac_w", p.frac_w}};
        }
        nlohmann::json operator()(const RotationParams& p) const {
            return {{"degrees", p.degrees}};
        }
        nlohmann::json operator()(const FlipParams&) const { return nlohmann::json::object(); }
    };
    return std::visit(Visitor{}, params);
}

nlohmann::json event_to_json(const NoiseEvent& event) {
    return {{"type", to_string(event.type)},
            {"params", params_to_json(event.params)},
            {"seed", event.seed}};
}

NoiseEvent event_from_json(const nlohmann::json& j) {
    NoiseEvent e;
    try {
        e.type = noise_type_from_string(j.at("type").get<std::string>());
        e.seed = j.at("seed").get<std::uint64_t>();
        const auto& p = j.at("params");
        switch (e.type) {
            case NoiseType::MotionBlur:
                e.params = MotionBlurParams{p.at("kernel").get<int>(), p.at("angle").get<int>()};
                break;
            case NoiseType::DefocusBlur:
                e.params = DefocusParams{p.at("severity").get<int>()};
                break;
            case NoiseType::ContrastBright:
            case NoiseType::ContrastDark:
                e.params = ContrastParams{p.at("gamma").get<double>()};
                break;
            case NoiseType::Crop:
                e.params = CropParams{p.at("left").get<double>(), p.at("right").get<double>(),
                                      p.at("top").get<double>(), p.at("bottom").get<double>()};
                break;
            case NoiseType::Cutout:
                e.params = CutoutParams{p.at("frac_h").get<double>(), p.at("frac_w").get<double>()};
                break;
            case NoiseType::Rotation:
                e.params = RotationParams{p.at("degrees").get<double>()};
                break;
            case NoiseType::Flip:
                e.params = FlipParams{};
                break;
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed noise event: ") + ex.what());
    }
    validate(e);
    return e;
}

double Kernel::sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

Kernel motion_blur_kernel(int size, int angle) {
    check_motion(size, angle);
    Kernel k{size, std::vector<double>(static_cast<std::size_t>(size * size), 0.0)};
    const double w = 1.0 / size;
    for (int i = 0; i < size; ++i) {
        const int col = angle == 45 ? size - 1 - i : i;
        k.weights[static_cast<std::size_t>(i * size + col)] = w;
    }
    return k;
}

Kernel defocus_kernel(int severity) {
    check_severity(severity);
    const int radius = limits::kDefocusRadius[static_cast<std::size_t>(severity - 1)];
    const int size = 2 * radius + 1;
    Kernel k{size, std::vector<double>(static_cast<std::size_t>(size * size), 0.0)};
    int taps = 0;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) ++taps;
    const double w = 1.0 / taps;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius)
                k.weights[static_cast<std::size_t>((dy + radius) * size + dx + radius)] = w;
    return k;
}

Raster convolve(const Raster& img, const Kernel& kernel) {
    struct Tap {
        int dx, dy;
        double w;
    };
    std::vector<Tap> taps;
    const int c = kernel.size / 2;
    for (int r = 0; r < kernel.size; ++r)
        for (int col = 0; col < kernel.size; ++col)
            if (double w = kernel.at(r, col); w != 0.0) taps.push_back({col - c, r - c, w});

    const auto w = static_cast<std::ptrdiff_t>(img.width());
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    Raster out(img.width(), img.height());
    for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t x = 0; x < w; ++x) {
            double r = 0, g = 0, b = 0;
            for (const Tap& t : taps) {
                const auto sx = std::clamp<std::ptrdiff_t>(x + t.dx, 0, w - 1);
                const auto sy = std::clamp<std::ptrdiff_t>(y + t.dy, 0, h - 1);
                const Rgb& p = img.at(static_cast<std::size_t>(sx), static_cast<std::size_t>(sy));
                r += t.w * p.r;
                g += t.w * p.g;
                b += t.w * p.b;
            }
            out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = {
                quantize(r), quantize(g), quantize(b)};
        }
    }
    return out;
}

Raster crop(const Raster& img, double left, double right, double top, double bottom) {
    for (double f : {left, right, top, bottom})
        check_range(f, 0.0, limits::kMaxCropFraction, "crop fraction");
    const std::size_t w = img.width(), h = img.height();
    const auto cut_w = static_cast<std::size_t>(std::floor((left + right) * static_cast<double>(w)));
    const auto cut_h = static_cast<std::size_t>(std::floor((top + bottom) * static_cast<double>(h)));
    if (cut_w >= w || cut_h >= h) throw GeometryError("crop leaves an empty image");
    const auto x0 = static_cast<std::size_t>(std::floor(left * static_cast<double>(w)));
    const auto y0 = static_cast<std::size_t>(std::floor(top * static_cast<double>(h)));
    Raster out(w - cut_w, h - cut_h);
    for (std::size_t y = 0; y < out.height(); ++y) {
        auto src = img.row(y0 + y).subspan(x0, out.width());
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

Raster rotate(const Raster& img, double degrees) {
    check_range(degrees, -limits::kMaxRotationDegrees, limits::kMaxRotationDegrees, "rotation");
    if (degrees == 0.0) return img;
    const double theta = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(theta), sn = std::sin(theta);
    const double w = static_cast<double>(img.width()), h = static_cast<double>(img.height());
    const double cx = (w - 1.0) / 2.0, cy = (h - 1.0) / 2.0;
    constexpr double eps = 1e-9;

    // Positive angles turn the content counter-clockwise as displayed (y down).
    Raster out(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t x = 0; x < img.width(); ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            double sx = cx + cs * dx - sn * dy;
            double sy = cy + sn * dx + cs * dy;
            if (sx < -eps || sy < -eps || sx > w - 1.0 + eps || sy > h - 1.0 + eps) continue;
            sx = std::clamp(sx, 0.0, w - 1.0);
            sy = std::clamp(sy, 0.0, h - 1.0);
            const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
            const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
            const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
            const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
            const Rgb &p00 = img.at(x0, y0), &p10 = img.at(x1, y0), &p01 = img.at(x0, y1),
                      &p11 = img.at(x1, y1);
            auto lerp = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
                const double top = a + fx * (b - a);
                const double bot = c + fx * (d - c);
                return quantize(top + fy * (bot - top));
            };
            out.at(x, y) = {lerp(p00.r, p10.r, p01.r, p11.r), lerp(p00.g, p10.g, p01.g, p11.g),
                            lerp(p00.b, p10.b, p01.b, p11.b)};
        }
    }
    return out;
}

Raster flip_vertical(const Raster& img) {
    Raster out(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y) {
        auto src = img.row(img.height() - 1 - y);
        std::copy(src.begin(), src.end(), out.row(y).begin());
    }
    return out;
}

Raster motion_blur(const Raster& img, int kernel, int angle) {
    return convolve(img, motion_blur_kernel(kernel, angle));
}

Raster defocus_blur(const Raster& img, int severity) {
    return convolve(img, defocus_kernel(severity));
}

Raster contrast(const Raster& img, double gamma) {
    check_range(gamma, limits::kMinGamma, limits::kMaxGamma, "gamma");
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) lut[v] = quantize(255.0 * std::pow(v / 255.0, gamma));
    Raster out = img;
    for (Rgb& p : out.pixels()) p = {lut[p.r], lut[p.g], lut[p.b]};
    return out;
}

Raster cutout(const Raster& img, double frac_h, double frac_w, std::uint64_t pos_seed) {
    check_range(frac_h, limits::kMinCutoutFraction, limits::kMaxCutoutFraction, "cutout fraction");
    check_range(frac_w, limits::kMinCutoutFraction, limits::kMaxCutoutFraction, "cutout fraction");
    const auto rect_h = static_cast<std::size_t>(std::floor(frac_h * static_cast<double>(img.height())));
    const auto rect_w = static_cast<std::size_t>(std::floor(frac_w * static_cast<double>(img.width())));
    Raster out = img;
    if (rect_h == 0 || rect_w == 0) return out;
    Rng rng(mix64(pos_seed ^ kCutoutStream));
    const auto y0 = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(img.height() - rect_h)));
    const auto x0 = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(img.width() - rect_w)));
    for (std::size_t y = y0; y < y0 + rect_h; ++y) {
        auto row = out.row(y).subspan(x0, rect_w);
        std::fill(row.begin(), row.end(), limits::kCutoutFill);
    }
    return out;
}

Raster apply(const Raster& img, const NoiseEvent& event) {
    validate(event);
    switch (event.type) {
        case NoiseType::MotionBlur: {
            const auto& p = std::get<MotionBlurParams>(event.params);
            return motion_blur(img, p.kernel, p.angle);
        }
        case NoiseType::DefocusBlur:
            return defocus_blur(img, std::get<DefocusParams>(event.params).severity);
        case NoiseType::ContrastBright:
        case NoiseType::ContrastDark:
            return contrast(img, std::get<ContrastParams>(event.params).gamma);
        case NoiseType::Crop: {
            const auto& p = std::get<CropParams>(event.params);
            return crop(img, p.left, p.right, p.top, p.bottom);
        }
        case NoiseType::Cutout: {
            const auto& p = std::get<CutoutParams>(event.params);
            return cutout(img, p.frac_h, p.frac_w, event.seed);
        }
        case NoiseType::Rotation:
            return rotate(img, std::get<RotationParams>(event.params).degrees);
        case NoiseType::Flip:
            return flip_vertical(img);
    }
    return img;
}

std::string_view to_string(DistributionKind k) {
    switch (k) {
        case DistributionKind::Frequent: return "frequent";
        case DistributionKind::Random: return "random";
        case DistributionKind::Original: return "original";
    }
    return "unknown";
}

DistributionKind distribution_kind_from_string(std::string_view s) {
    if (s == "frequent") return DistributionKind::Frequent;
    if (s == "random") return DistributionKind::Random;
    if (s == "original") return DistributionKind::Original;
    throw ParameterError("unknown distribution \"" + std::string(s) +
                         "\" (expected frequent, random or original)");
}

NoiseDistribution make_distribution(DistributionKind kind) {
    NoiseDistribution d{kind, {}};
    auto set = [&](NoiseType t, double w) { d.weights[static_cast<std::size_t>(t)] = w; };
    switch (kind) {
        case DistributionKind::Frequent:
            set(NoiseType::MotionBlur, 0.25);
            set(NoiseType::DefocusBlur, 0.25);
            set(NoiseType::Cutout, 0.5);
            break;
        case DistributionKind::Random:
            d.weights.fill(1.0 / kNoiseTypeCount);
            break;
        case DistributionKind::Original: {
            constexpr double blur = 41.0, bright = 5.3, dark = 5.6, framing = 55.6,
                             obscured = 3.6, rotation = 17.5;
            constexpr double total = blur + bright + dark + framing + obscured + rotation;
            set(NoiseType::MotionBlur, blur / total / 2);
            set(NoiseType::DefocusBlur, blur / total / 2);
            set(NoiseType::ContrastBright, bright / total);
            set(NoiseType::ContrastDark, dark / total);
            set(NoiseType::Crop, framing / total);
            set(NoiseType::Cutout, obscured / total);
            set(NoiseType::Rotation, rotation / total / 2);
            set(NoiseType::Flip, rotation / total / 2);
            break;
        }
    }
    return d;
}

NoiseEvent sample_event(const NoiseDistribution& dist, Rng& rng) {
    const double u = rng.uniform();
    NoiseType type = NoiseType::Flip;
    double acc = 0.0;
    for (NoiseType t : kNoiseTypes) {
        const double w = dist.weight(t);
        if (w <= 0.0) continue;
        type = t;  // rounding fallback: last type with positive weight
        acc += w;
        if (u < acc) break;
    }

    NoiseEvent e;
    e.type = type;
    switch (type) {
        case NoiseType::MotionBlur: {
            const int steps = (limits::kMaxMotionKernel - limits::kMinMotionKernel) / 2;
            const int kernel = limits::kMinMotionKernel + 2 * static_cast<int>(rng.uniform_int(0, steps));
            const int angle = rng.uniform() < 0.5 ? -45 : 45;
            e.params = MotionBlurParams{kernel, angle};
            break;
        }
        case NoiseType::DefocusBlur:
            e.params = DefocusParams{static_cast<int>(
                rng.uniform_int(limits::kMinSeverity, limits::kMaxSeverity))};
            break;
        case NoiseType::ContrastBright:
            e.params = ContrastParams{rng.uniform(limits::kMinGamma, 1.0)};
            break;
        case NoiseType::ContrastDark:
            // (1, 2]: reflect the half-open draw so 1 itself is excluded.
            e.params = ContrastParams{limits::kMaxGamma - rng.uniform() * (limits::kMaxGamma - 1.0)};
            break;
        case NoiseType::Crop: {
            CropParams p;
            p.left = rng.uniform(0.0, limits::kMaxCropFraction);
            p.right = rng.uniform(0.0, limits::kMaxCropFraction);
            p.top = rng.uniform(0.0, limits::kMaxCropFraction);
            p.bottom = rng.uniform(0.0, limits::kMaxCropFraction);
            e.params = p;
            break;
        }
        case NoiseType::Cutout: {
            const double fh = rng.uniform(limits::kMinCutoutFraction, limits::kMaxCutoutFraction);
            const double fw = rng.uniform(limits::kMinCutoutFraction, limits::kMaxCutoutFraction);
            e.params = CutoutParams{fh, fw};
            break;
        }
        case NoiseType::Rotation:
            e.params = RotationParams{
                rng.uniform(-limits::kMaxRotationDegrees, limits::kMaxRotationDegrees)};
            break;
        case NoiseType::Flip:
            e.params = FlipParams{};
            break;
    }
    e.seed = rng.next_u64();
    return e;
}

}  // namespace qacap
