// Copyright 2026 The hqunet Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hqunet/data/raster.hpp"

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include <png.h>

namespace hqunet::data {

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f) {
            std::fclose(f);
        }
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path &path, const char *mode) {
    File f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    return f;
}

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) {
    throw std::runtime_error(std::string("libpng: ") + msg);
}

void png_warning_handler(png_structp, png_const_charp) {}

class PngReader {
  public:
    explicit PngReader(const std::filesystem::path &path) : path_{path}, file_{open_file(path, "rb")} {
        unsigned char sig[8];
        if (std::fread(sig, 1, 8, file_.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
            throw std::runtime_error("'" + path.string() + "' is not a PNG file");
        }
        png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                      png_warning_handler);
        info_ = png_create_info_struct(png_);
        try {
            png_init_io(png_, file_.get());
            png_set_sig_bytes(png_, 8);
            png_read_info(png_, info_);
        } catch (...) {
            png_destroy_read_struct(&png_, &info_, nullptr);
            throw;
        }
    }
    ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
    PngReader(const PngReader &) = delete;
    PngReader &operator=(const PngReader &) = delete;

    [[nodiscard]] std::size_t width() const { return png_get_image_width(png_, info_); }
    [[nodiscard]] std::size_t height() const { return png_get_image_height(png_, info_); }
    [[nodiscard]] int color_type() const { return png_get_color_type(png_, info_); }
    [[nodiscard]] int bit_depth() const { return png_get_bit_depth(png_, info_); }

    std::vector<std::uint8_t> read_rows(std::size_t channels) {
        png_read_update_info(png_, info_);
        const std::size_t rowbytes = png_get_rowbytes(png_, info_);
        if (rowbytes != width() * channels) {
            throw std::runtime_error("'" + path_.string() + "': unexpected row layout");
        }
        std::vector<std::uint8_t> pixels(rowbytes * height());
        std::vector<png_bytep> rows(height());
        for (std::size_t y = 0; y < height(); ++y) {
            rows[y] = pixels.data() + y * rowbytes;
        }
        png_read_image(png_, rows.data());
        png_read_end(png_, nullptr);
        return pixels;
    }

    png_structp png() { return png_; }

  private:
    std::filesystem::path path_;
    File file_;
    png_structp png_ = nullptr;
    png_infop info_ = nullptr;
};

void write_png(const std::filesystem::path &path, std::size_t width, std::size_t height,
               int color_type, const std::vector<std::uint8_t> &pixels, std::size_t channels,
               const png_color *palette, int palette_size) {
    File file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                              png_warning_handler);
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, file.get());
        png_set_compression_level(png, 6);
        png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                     8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                     PNG_FILTER_TYPE_DEFAULT);
        if (palette != nullptr) {
            png_set_PLTE(png, info, palette, palette_size);
        }
        png_write_info(png, info);
        for (std::size_t y = 0; y < height; ++y) {
            png_write_row(png, pixels.data() + y * width * channels);
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

} // namespace

RgbImage read_rgb_png(const std::filesystem::path &path) {
    PngReader reader(path);
    png_structp png = reader.png();
    const int ct = reader.color_type();
    if (reader.bit_depth() == 16) {
        png_set_strip_16(png);
    }
    if (ct == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(png);
    }
    if ((ct == PNG_COLOR_TYPE_GRAY || ct == PNG_COLOR_TYPE_GRAY_ALPHA) && reader.bit_depth() < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    if (ct == PNG_COLOR_TYPE_GRAY || ct == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(png);
    }
    if (ct & PNG_COLOR_MASK_ALPHA) {
        png_set_strip_alpha(png);
    }
    RgbImage img;
    img.width = reader.width();
    img.height = reader.height();
    img.rgb = reader.read_rows(3);
    return img;
}

void write_rgb_png(const std::filesystem::path &path, const RgbImage &image) {
    if (image.rgb.size() != image.width * image.height * 3) {
        throw std::invalid_argument("write_rgb_png: pixel buffer does not match extents");
    }
    write_png(path, image.width, image.height, PNG_COLOR_TYPE_RGB, image.rgb, 3, nullptr, 0);
}

RasterInfo read_png_info(const std::filesystem::path &path) {
    PngReader reader(path);
    return {reader.width(), reader.height()};
}

LabelMap read_mask_png(const std::filesystem::path &path, std::size_t num_classes) {
    PngReader reader(path);
    const int ct = reader.color_type();
    if ((ct != PNG_COLOR_TYPE_GRAY && ct != PNG_COLOR_TYPE_PALETTE) || reader.bit_depth() != 8) {
        throw std::runtime_error("'" + path.string() +
                                 "': masks must be 8-bit single-channel (grey or palette) PNGs");
    }
    LabelMap mask;
    mask.batch = 1;
    mask.width = reader.width();
    mask.height = reader.height();
    mask.ids = reader.read_rows(1);
    for (std::size_t i = 0; i < mask.ids.size(); ++i) {
        if (mask.ids[i] >= num_classes) {
            throw std::runtime_error("'" + path.string() + "': class id " +
                                     std::to_string(mask.ids[i]) + " at (x=" +
                                     std::to_string(i % mask.width) + ", y=" +
                                     std::to_string(i / mask.width) + ") is not below " +
                                     std::to_string(num_classes));
        }
    }
    return mask;
}

void write_mask_png(const std::filesystem::path &path, const LabelMap &mask) {
    if (mask.batch != 1 || mask.ids.size() != mask.width * mask.height) {
        throw std::invalid_argument("write_mask_png: expected a single [H, W] mask");
    }
    for (std::size_t i = 0; i < mask.ids.size(); ++i) {
        if (mask.ids[i] >= kNumClasses) {
            throw std::invalid_argument("write_mask_png: class id " + std::to_string(mask.ids[i]) +
                                        " at (x=" + std::to_string(i % mask.width) + ", y=" +
                                        std::to_string(i / mask.width) + ") has no palette entry");
        }
    }
    std::array<png_color, kNumClasses> palette{};
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        palette[k] = {kPalette[k][0], kPalette[k][1], kPalette[k][2]};
    }
    write_png(path, mask.width, mask.height, PNG_COLOR_TYPE_PALETTE, mask.ids, 1, palette.data(),
              static_cast<int>(kNumClasses));
}

} // namespace hqunet::data
