#include <doctest.h>

#include <array>
#include <cmath>
#include <map>

#include "qacap/error.hpp"
#include "qacap/noise.hpp"
#include "support.hpp"

using namespace qacap;

namespace {

Raster gray(std::size_t w, std::size_t h, std::uint8_t v) { return Raster(w, h, Rgb{v, v, v}); }

std::size_t count_pixels(const Raster& img, Rgb c) {
    std::size_t n = 0;
    for (const auto& p : img.pixels()) n += p == c;
    return n;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("noise type and distribution names round-trip") {
    for (NoiseType t : kNoiseTypes) CHECK(noise_type_from_string(to_string(t)) == t);
    for (auto k : {DistributionKind::Frequent, DistributionKind::Random, DistributionKind::Original})
        CHECK(distribution_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(noise_type_from_string("sepia"), ParameterError);
    CHECK_THROWS_AS(distribution_kind_from_string("uniform"), ParameterError);
}

TEST_CASE("crop dimensions follow the floor rule") {
    testing::TempDir dir("crop");
    Rng rng(1);
    const Raster img = testing::random_raster(rng, 100, 100);
    auto c = crop(img, 0.2, 0.2, 0.2, 0.2);
    CHECK(c.width() == 60);
    CHECK(c.height() == 60);
    CHECK(crop(img, 0, 0, 0, 0) == img);

    const Raster small = testing::random_raster(rng, 4, 4);
    auto s = crop(small, 0.2, 0.2, 0, 0);
    CHECK(s.width() == 3);
    CHECK(s.height() == 4);

    // Retained pixels are an exact sub-rectangle.
    auto sub = crop(img, 0.13, 0.05, 0.07, 0.11);
    const std::size_t x0 = static_cast<std::size_t>(std::floor(0.13 * 100));
    const std::size_t y0 = static_cast<std::size_t>(std::floor(0.07 * 100));
    CHECK(sub.width() == 100 - static_cast<std::size_t>(std::floor(0.18 * 100)));
    for (std::size_t y = 0; y < sub.height(); ++y)
        for (std::size_t x = 0; x < sub.width(); ++x) REQUIRE(sub.at(x, y) == img.at(x + x0, y + y0));

    CHECK_THROWS_AS(crop(img, 0.25, 0, 0, 0), ParameterError);
    CHECK_THROWS_AS(crop(img, -0.01, 0, 0, 0), ParameterError);
    CHECK(crop(gray(1, 1, 0), 0.2, 0.2, 0.2, 0.2) == gray(1, 1, 0));
}

TEST_CASE("rotation") {
    Rng rng(2);
    const Raster img = testing::random_raster(rng, 17, 11);
    CHECK(rotate(img, 0) == img);
    const auto r = rotate(img, 30);
    CHECK(r.width() == img.width());
    CHECK(r.height() == img.height());

    const auto g = rotate(gray(21, 13, 77), -37.5);
    for (const auto& p : g.pixels()) CHECK((p == Rgb{77, 77, 77} || p == Rgb{0, 0, 0}));

    Raster dot = gray(3, 3, 0);
    dot.at(1, 1) = {255, 255, 255};
    CHECK(rotate(dot, 45).at(1, 1) == Rgb{255, 255, 255});

    CHECK(rotate(rotate(dot, 45), -45).at(1, 1) == Rgb{255, 255, 255});
    CHECK_THROWS_AS(rotate(img, 45.5), ParameterError);
}

TEST_CASE("vertical flip") {
    Rng rng(3);
    const Raster img = testing::random_raster(rng, 9, 7);
    CHECK(flip_vertical(flip_vertical(img)) == img);
    const Raster one = testing::random_raster(rng, 9, 1);
    CHECK(flip_vertical(one) == one);
    Raster two(1, 2);
    two.at(0, 0) = {10, 10, 10};
    two.at(0, 1) = {20, 20, 20};
    const auto f = flip_vertical(two);
    CHECK(f.at(0, 0) == Rgb{20, 20, 20});
    CHECK(f.at(0, 1) == Rgb{10, 10, 10});
}

TEST_CASE("blur kernels are normalized") {
    for (int k = limits::kMinMotionKernel; k <= limits::kMaxMotionKernel; k += 2)
        for (int a : {-45, 45}) CHECK(std::abs(motion_blur_kernel(k, a).sum() - 1.0) <= 1e-12);
    for (int s = 1; s <= 5; ++s) {
        const auto k = defocus_kernel(s);
        CHECK(std::abs(k.sum() - 1.0) <= 1e-12);
        CHECK(k.size == 2 * limits::kDefocusRadius[static_cast<std::size_t>(s - 1)] + 1);
    }
    CHECK_THROWS_AS(motion_blur_kernel(16, 45), ParameterError);
    CHECK_THROWS_AS(motion_blur_kernel(13, 45), ParameterError);
    CHECK_THROWS_AS(motion_blur_kernel(51, 45), ParameterError);
    CHECK_THROWS_AS(motion_blur_kernel(15, 30), ParameterError);
    CHECK_THROWS_AS(defocus_kernel(0), ParameterError);
    CHECK_THROWS_AS(defocus_kernel(6), ParameterError);
}

TEST_CASE("motion blur spreads a point along the chosen diagonal") {
    Raster img = gray(31, 31, 0);
    img.at(15, 15) = {255, 255, 255};
    const auto out = motion_blur(img, 15, 45);
    std::size_t lit = 0;
    for (std::size_t y = 0; y < 31; ++y)
        for (std::size_t x = 0; x < 31; ++x) {
            const auto v = out.at(x, y).r;
            if (v == 0) continue;
            ++lit;
            CHECK(v == 17);
            // Anti-diagonal through the center: x + y constant.
            CHECK(x + y == 30);
        }
    CHECK(lit == 15);

    const auto other = motion_blur(img, 15, -45);
    for (std::size_t y = 0; y < 31; ++y)
        for (std::size_t x = 0; x < 31; ++x)
            if (other.at(x, y).r != 0) CHECK(x == y);
}

TEST_CASE("constant images are blur invariant") {
    const auto c = Raster(23, 19, Rgb{12, 200, 97});
    for (int k : {15, 27, 49}) CHECK(motion_blur(c, k, 45) == c);
    for (int s = 1; s <= 5; ++s) CHECK(defocus_blur(c, s) == c);
}

TEST_CASE("defocus of a step edge matches direct disk convolution") {
    const std::size_t w = 40, h = 9, edge = 20;
    Raster img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = edge; x < w; ++x) img.at(x, y) = {255, 255, 255};

    for (int severity = 1; severity <= 5; ++severity) {
        const int r = limits::kDefocusRadius[static_cast<std::size_t>(severity - 1)];
        const auto out = defocus_blur(img, severity);
        // Edge replication keeps the profile constant down each column, so
        // only horizontal offsets matter.
        int taps = 0;
        std::map<int, int> column_taps;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy <= r * r) {
                    ++taps;
                    ++column_taps[dx];
                }
        std::size_t transition = 0;
        for (std::size_t x = 0; x < w; ++x) {
            int bright = 0;
            for (const auto& [dx, n] : column_taps) {
                const long sx = std::clamp<long>(static_cast<long>(x) + dx, 0, static_cast<long>(w) - 1);
                if (static_cast<std::size_t>(sx) >= edge) bright += n;
            }
            const auto expect = static_cast<std::uint8_t>(std::floor(255.0 * bright / taps + 0.5));
            for (std::size_t y = 0; y < h; ++y) REQUIRE(out.at(x, y).r == expect);
            transition += expect != 0 && expect != 255;
        }
        // Every column within r of the edge is mixed.
        CHECK(transition == static_cast<std::size_t>(2 * r));
    }
}

TEST_CASE("contrast lookup") {
    Raster img(3, 1);
    img.at(0, 0) = {0, 0, 0};
    img.at(1, 0) = {64, 64, 64};
    img.at(2, 0) = {255, 255, 255};
    CHECK(contrast(img, 1.0) == img);
    const auto dark = contrast(img, 2.0);
    CHECK(dark.at(0, 0).r == 0);
    CHECK(dark.at(1, 0).r == 16);
    CHECK(dark.at(2, 0).r == 255);
    for (double g : {0.5, 0.7, 1.3, 2.0}) {
        const auto o = contrast(img, g);
        CHECK(o.at(0, 0).r == 0);
        CHECK(o.at(2, 0).r == 255);
    }
    CHECK(contrast(img, 0.5).at(1, 0).r > 64);
    CHECK_THROWS_AS(contrast(img, 0.4), ParameterError);
    CHECK_THROWS_AS(contrast(img, 2.1), ParameterError);
}

TEST_CASE("cutout geometry") {
    const Raster img = gray(100, 100, 10);
    const auto o = cutout(img, 0.5, 0.5, 99);
    CHECK(count_pixels(o, limits::kCutoutFill) == 2500);
    CHECK(cutout(img, 0.5, 0.5, 99) == o);

    const auto g = gray(40, 30, 128);
    CHECK(cutout(g, 0.3, 0.4, 5) == g);

    const auto r = cutout(gray(37, 23, 0), 0.27, 0.41, 1234);
    CHECK(count_pixels(r, limits::kCutoutFill) ==
          static_cast<std::size_t>(std::floor(0.27 * 23)) * static_cast<std::size_t>(std::floor(0.41 * 37)));

    // Different seeds move the rectangle somewhere.
    bool moved = false;
    for (std::uint64_t s = 0; s < 10 && !moved; ++s) moved = cutout(img, 0.2, 0.2, s) != cutout(img, 0.2, 0.2, 100 + s);
    CHECK(moved);
    CHECK_THROWS_AS(cutout(img, 0.05, 0.2, 1), ParameterError);
}

TEST_CASE("events validate and round-trip through JSON") {
    Rng rng(11);
    for (auto kind : {DistributionKind::Frequent, DistributionKind::Random, DistributionKind::Original}) {
        const auto dist = make_distribution(kind);
        for (int i = 0; i < 500; ++i) {
            const auto ev = sample_event(dist, rng);
            CHECK_NOTHROW(validate(ev));
            CHECK(event_from_json(event_to_json(ev)) == ev);
        }
    }
    NoiseEvent bad{NoiseType::MotionBlur, ContrastParams{1.0}, 0};
    CHECK_THROWS_AS(validate(bad), ParameterError);
    NoiseEvent bright{NoiseType::ContrastBright, ContrastParams{1.5}, 0};
    CHECK_THROWS_AS(validate(bright), ParameterError);
    NoiseEvent dark{NoiseType::ContrastDark, ContrastParams{0.8}, 0};
    CHECK_THROWS_AS(validate(dark), ParameterError);
}

TEST_CASE("sampled parameters stay in range") {
    Rng rng(12);
    const auto dist = make_distribution(DistributionKind::Random);
    for (int i = 0; i < 4000; ++i) {
        const auto ev = sample_event(dist, rng);
        std::visit(
            [&](const auto& p) {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, MotionBlurParams>) {
                    CHECK(p.kernel % 2 == 1);
                    CHECK(p.kernel >= 15);
                    CHECK(p.kernel <= 49);
                    CHECK((p.angle == 45 || p.angle == -45));
                } else if constexpr (std::is_same_v<P, ContrastParams>) {
                    if (ev.type == NoiseType::ContrastBright) {
                        CHECK(p.gamma >= 0.5);
                        CHECK(p.gamma < 1.0);
                    } else {
                        CHECK(p.gamma > 1.0);
                        CHECK(p.gamma <= 2.0);
                    }
                } else if constexpr (std::is_same_v<P, CropParams>) {
                    for (double f : {p.left, p.right, p.top, p.bottom}) {
                        CHECK(f >= 0);
                        CHECK(f <= 0.2);
                    }
                } else if constexpr (std::is_same_v<P, RotationParams>) {
                    CHECK(std::abs(p.degrees) <= 45);
                }
            },
            ev.params);
    }
}

TEST_CASE("distribution weights") {
    const auto f = make_distribution(DistributionKind::Frequent);
    const auto r = make_distribution(DistributionKind::Random);
    const auto o = make_distribution(DistributionKind::Original);
    for (const auto* d : {&f, &r, &o}) {
        double s = 0;
        for (double w : d->weights) s += w;
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
    for (NoiseType t : kNoiseTypes) {
        CHECK(r.weight(t) == 0.125);
        const bool kept = t == NoiseType::MotionBlur || t == NoiseType::DefocusBlur || t == NoiseType::Cutout;
        if (!kept) CHECK(f.weight(t) == 0.0);
    }
    CHECK(f.weight(NoiseType::Cutout) == doctest::Approx(0.5));
    // Shares of each real flaw in the original data, renormalized.
    const double total = 41.0 + 5.3 + 5.6 + 55.6 + 3.6 + 17.5;
    CHECK(o.weight(NoiseType::Crop) == doctest::Approx(55.6 / total).epsilon(1e-12));
    CHECK(o.weight(NoiseType::MotionBlur) == doctest::Approx(41.0 / total / 2).epsilon(1e-12));
    CHECK(o.weight(NoiseType::DefocusBlur) == doctest::Approx(41.0 / total / 2).epsilon(1e-12));
    CHECK(o.weight(NoiseType::Rotation) == doctest::Approx(17.5 / total / 2).epsilon(1e-12));
    CHECK(o.weight(NoiseType::Flip) == doctest::Approx(17.5 / total / 2).epsilon(1e-12));
    CHECK(o.weight(NoiseType::ContrastBright) == doctest::Approx(5.3 / total).epsilon(1e-12));
    CHECK(o.weight(NoiseType::ContrastDark) == doctest::Approx(5.6 / total).epsilon(1e-12));
    CHECK(o.weight(NoiseType::Cutout) == doctest::Approx(3.6 / total).epsilon(1e-12));
    CHECK(o.weight(NoiseType::Crop) == doctest::Approx(0.4324).epsilon(1e-3));
}

TEST_CASE("apply is deterministic and replays from the event") {
    Rng rng(13);
    const Raster img = testing::random_raster(rng, 40, 30);
    const auto dist = make_distribution(DistributionKind::Random);
    for (int i = 0; i < 40; ++i) {
        const auto ev = sample_event(dist, rng);
        CHECK(apply(img, ev) == apply(img, event_from_json(event_to_json(ev))));
    }
}

TEST_CASE("PNG round-trip is lossless and deterministic") {
    testing::TempDir dir("png");
    Rng rng(14);
    const Raster img = testing::random_raster(rng, 33, 21);
    write_png(img, dir / "a.png");
    write_png(img, dir / "b.png");
    CHECK(read_image(dir / "a.png") == img);
    CHECK(testing::read_file(dir / "a.png") == testing::read_file(dir / "b.png"));
    CHECK_THROWS_AS(read_image(dir / "missing.png"), IoError);
    testing::write_file(dir / "junk.png", "not an image at all");
    CHECK_THROWS_AS(read_image(dir / "junk.png"), Error);
}

}
