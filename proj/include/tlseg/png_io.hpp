#pragma once

// 8-bit single-channel PNG rasters. Masks are stored as 0 / 255 and read
// back with any nonzero value as foreground.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "tlseg/error.hpp"
#include "tlseg/mask.hpp"

namespace tlseg {

namespace detail {

inline const char* png_color_type_name(int type) {
  switch (type) {
    case 0: return "grayscale";
    case 2: return "RGB";
    case 3: return "palette";
    case 4: return "grayscale+alpha";
    case 6: return "RGBA";
    default: return "unknown";
  }
}

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Decodes an 8-bit grayscale PNG; other encodings are rejected by
// inspecting the IHDR chunk before decoding.
inline Grid<std::uint8_t> decode_gray8(const std::vector<std::uint8_t>& bytes,
                                       const std::string& name) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 33 || std::memcmp(bytes.data(), kSignature, 8) != 0 ||
      std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw FormatError(name + ": not a PNG file");
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (color_type != 0) {
    throw FormatError(name + ": unsupported color type " + png_color_type_name(color_type) +
                      " (expected single-channel grayscale)");
  }
  if (bit_depth != 8) {
    throw FormatError(name + ": unsupported bit depth " + std::to_string(bit_depth) +
                      " (expected 8)");
  }

  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(name + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    throw FormatError(name + ": empty image");
  }
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(name + ": " + msg);
  }
  return Grid<std::uint8_t>(static_cast<int>(image.width), static_cast<int>(image.height),
                            std::move(pixels));
}

inline std::vector<std::uint8_t> encode_gray8(const Grid<std::uint8_t>& pixels) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(pixels.width());
  image.height = static_cast<png_uint_32>(pixels.height());
  image.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data().data(), 0, nullptr)) {
    throw DataError(std::string("PNG encoding failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data().data(), 0, nullptr)) {
    throw DataError(std::string("PNG encoding failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline BinaryMask decode_mask(const std::vector<std::uint8_t>& png_bytes,
                              const std::string& name = "<memory>") {
  auto gray = detail::decode_gray8(png_bytes, name);
  for (auto& v : gray.data()) v = v ? 1 : 0;
  return gray;
}

inline std::vector<std::uint8_t> encode_mask(const BinaryMask& mask) {
  Grid<std::uint8_t> gray(mask.width(), mask.height());
  for (std::size_t i = 0; i < mask.size(); ++i) gray[i] = mask[i] ? 255 : 0;
  return detail::encode_gray8(gray);
}

inline BinaryMask read_mask(const std::filesystem::path& path) {
  return decode_mask(detail::slurp(path), path.string());
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  detail::write_bytes(path, encode_mask(mask));
}

inline GrayImage read_gray(const std::filesystem::path& path) {
  const auto gray = detail::decode_gray8(detail::slurp(path), path.string());
  GrayImage out(gray.width(), gray.height());
  for (std::size_t i = 0; i < gray.size(); ++i) out[i] = static_cast<float>(gray[i] / 255.0);
  return out;
}

inline void write_gray(const std::filesystem::path& path, const GrayImage& image) {
  Grid<std::uint8_t> gray(image.width(), image.height());
  for (std::size_t i = 0; i < image.size(); ++i) {
    gray[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image[i], 0.0f, 1.0f) * 255.0f));
  }
  detail::write_bytes(path, detail::encode_gray8(gray));
}

/// Probabilities quantised to v / 255.
inline ProbMap read_probmap(const std::filesystem::path& path) {
  const auto gray = detail::decode_gray8(detail::slurp(path), path.string());
  std::vector<double> values(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) values[i] = gray[i] / 255.0;
  return ProbMap(gray.width(), gray.height(), std::move(values));
}

inline void write_probmap(const std::filesystem::path& path, const ProbMap& p) {
  Grid<std::uint8_t> gray(p.width(), p.height());
  for (std::size_t i = 0; i < p.size(); ++i) {
    gray[i] = static_cast<std::uint8_t>(std::lround(p[i] * 255.0));
  }
  detail::write_bytes(path, detail::encode_gray8(gray));
}

}  // namespace tlseg
