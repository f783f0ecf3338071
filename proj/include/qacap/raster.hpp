#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace qacap {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB image, row-major. Width and height are always >= 1.
class Raster {
public:
    Raster(std::size_t width, std::size_t height, Rgb fill = {});
    Raster(std::size_t width, std::size_t height, std::vector<Rgb> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    Rgb& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
    const Rgb& at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

    std::span<Rgb> row(std::size_t y) { return {pixels_.data() + y * width_, width_}; }
    std::span<const Rgb> row(std::size_t y) const { return {pixels_.data() + y * width_, width_}; }

    std::span<const Rgb> pixels() const noexcept { return pixels_; }
    std::span<Rgb> pixels() noexcept { return pixels_; }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t width_;
    std::size_t height_;
    std::vector<Rgb> pixels_;
};

// Decodes PNG or JPEG (sniffed from the file signature). Alpha is dropped,
// grayscale and palette images are expanded to RGB, 16-bit is reduced to 8.
Raster read_image(const std::filesystem::path& path);

// Writes an 8-bit RGB PNG with no timestamp or text chunks, so equal rasters
// produce equal files.
void write_png(const Raster& img, const std::filesystem::path& path);

}  // namespace qacap
