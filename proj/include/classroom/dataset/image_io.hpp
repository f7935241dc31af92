#pragma once

#include <png.h>

#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "classroom/emotion/image.hpp"
#include "classroom/error.hpp"

namespace classroom::io {

namespace fs = std::filesystem;

namespace detail {

inline void skip_pnm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

inline std::size_t read_pnm_number(std::istream& in, const std::string& path) {
  skip_pnm_space(in);
  std::size_t v = 0;
  if (!(in >> v)) throw Error(ErrorCode::IOFailure, "bad PGM header in " + path);
  return v;
}

}  // namespace detail

/// Reads binary (P5) or ASCII (P2) PGM with maxval <= 255.
inline RawImage read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOFailure, "cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5" && magic != "P2") throw Error(ErrorCode::IOFailure, path.string() + " is not a PGM");
  RawImage img;
  img.width = detail::read_pnm_number(in, path.string());
  img.height = detail::read_pnm_number(in, path.string());
  const std::size_t maxval = detail::read_pnm_number(in, path.string());
  if (maxval == 0 || maxval > 255) throw Error(ErrorCode::IOFailure, "unsupported PGM maxval in " + path.string());
  img.channels = 1;
  img.pixels.resize(img.width * img.height);
  if (magic == "P5") {
    in.get();
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
      throw Error(ErrorCode::IOFailure, "truncated PGM " + path.string());
    }
  } else {
    for (auto& p : img.pixels) {
      unsigned v = 0;
      if (!(in >> v)) throw Error(ErrorCode::IOFailure, "truncated PGM " + path.string());
      p = static_cast<std::uint8_t>(v);
    }
  }
  if (maxval != 255) {
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>((p * 255u + maxval / 2) / maxval);
  }
  return img;
}

inline void write_pgm(const fs::path& path, const RawImage& img) {
  if (img.channels != 1) throw Error(ErrorCode::ShapeMismatch, "PGM output must be single-channel");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IOFailure, "cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!out) throw Error(ErrorCode::IOFailure, "write failed: " + path.string());
}

/// Decodes any PNG to 8-bit gray or RGB (alpha dropped, palettes expanded).
inline RawImage read_png(const fs::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!file) throw Error(ErrorCode::IOFailure, "cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png != nullptr ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IOFailure, "libpng init failed");
  }
  RawImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IOFailure, "corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = png_get_image_width(png, info);
  img.height = png_get_image_height(png, info);
  img.channels = png_get_channels(png, info);
  img.pixels.resize(img.width * img.height * img.channels);
  rows.resize(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = img.pixels.data() + y * img.width * img.channels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

/// ITU-R BT.601 luma for multi-channel input; single-channel passes through.
inline RawImage to_grayscale(const RawImage& img) {
  if (img.channels == 1) return img;
  RawImage out{img.height, img.width, 1, std::vector<std::uint8_t>(img.height * img.width)};
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const auto* p = img.pixels.data() + i * img.channels;
    const double y = img.channels >= 3 ? 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2] : p[0];
    out.pixels[i] = static_cast<std::uint8_t>(std::min(255.0, y + 0.5));
  }
  return out;
}

inline bool is_image_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".pgm" || ext == ".PGM" || ext == ".png" || ext == ".PNG";
}

inline RawImage read_image(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  return read_pgm(path);
}

}  // namespace classroom::io
