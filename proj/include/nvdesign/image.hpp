#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "nvdesign/binary_io.hpp"
#include "nvdesign/errors.hpp"
#include "nvdesign/prior.hpp"
#include "nvdesign/spin_types.hpp"

namespace nvdesign {

/// Ground-truth image geometry. Rows run along A_par (row 0 at az_extent.lo),
/// columns along A_perp (column 0 at aperp_extent.lo). Pixel (r, c) covers
/// the cell whose centre is lo + (index + 0.5) * pitch on each axis.
struct ImageSpec {
  int height = 204;
  int width = 160;
  Interval az_extent{units::khz(-50.0), units::khz(50.0)};
  Interval aperp_extent{units::khz(2.0), units::khz(80.0)};
  double peak_sigma = 1.0;

  void validate() const {
    if (height < 1 || width < 1) throw DomainError("image dimensions must be >= 1");
    if (!(peak_sigma > 0.0)) throw DomainError("peak sigma must be positive");
    if (!(az_extent.hi > az_extent.lo) || !(aperp_extent.hi > aperp_extent.lo)) {
      throw DomainError("image extents must have positive width");
    }
  }

  double az_pitch() const noexcept { return az_extent.width() / height; }
  double aperp_pitch() const noexcept { return aperp_extent.width() / width; }

  /// Fractional pixel coordinates of a coupling.
  double row_of(double a_par) const noexcept { return (a_par - az_extent.lo) / az_pitch() - 0.5; }
  double col_of(double a_perp) const noexcept { return (a_perp - aperp_extent.lo) / aperp_pitch() - 0.5; }
  double a_par_of(double row) const noexcept { return az_extent.lo + (row + 0.5) * az_pitch(); }
  double a_perp_of(double col) const noexcept { return aperp_extent.lo + (col + 0.5) * aperp_pitch(); }

  bool covers(const HyperfineCoupling& s) const noexcept {
    return az_extent.contains(s.a_par) && aperp_extent.contains(s.a_perp);
  }
};

/// Row-major single-channel image.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

/// Each spin inside the extents adds a unit-amplitude Gaussian of width
/// peak_sigma pixels at its mapped position; overlapping peaks add.
/// Peaks are truncated beyond 6 sigma.
inline Image rasterize_truth(const SpinCluster& cluster, const ImageSpec& spec) {
  spec.validate();
  Image img(spec.height, spec.width);
  const double inv2s2 = 1.0 / (2.0 * spec.peak_sigma * spec.peak_sigma);
  const int reach = static_cast<int>(std::ceil(6.0 * spec.peak_sigma));
  for (const auto& s : cluster.spins) {
    if (!spec.covers(s)) continue;
    const double r0 = spec.row_of(s.a_par);
    const double c0 = spec.col_of(s.a_perp);
    const int rc = static_cast<int>(std::lround(r0));
    const int cc = static_cast<int>(std::lround(c0));
    for (int r = std::max(0, rc - reach); r <= std::min(spec.height - 1, rc + reach); ++r) {
      const double dr = r - r0;
      for (int c = std::max(0, cc - reach); c <= std::min(spec.width - 1, cc + reach); ++c) {
        const double dc = c - c0;
        img.at(r, c) += std::exp(-(dr * dr + dc * dc) * inv2s2);
      }
    }
  }
  return img;
}

// Raster export ("SIGRS" v1, little-endian):
//   "SIGRS" u16 version, u32 count, u32 height, u32 width,
//   then per image: u64 sample_index, height*width f32 row-major.

inline constexpr char kRasterMagic[] = "SIGRS";
inline constexpr std::uint16_t kRasterVersion = 1;

struct IndexedImage {
  std::uint64_t sample_index = 0;
  Image image;
};

inline void write_raster_file(const std::string& path, const std::vector<IndexedImage>& images,
                              int height, int width) {
  ByteWriter w;
  w.raw(std::string_view(kRasterMagic, 5));
  w.put<std::uint16_t>(kRasterVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(images.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(height));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(width));
  for (const auto& im : images) {
    if (im.image.height != height || im.image.width != width) {
      throw DomainError("raster export: image dimensions differ from header");
    }
    w.put<std::uint64_t>(im.sample_index);
    for (double v : im.image.pixels) w.put<float>(static_cast<float>(v));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

inline std::vector<IndexedImage> read_raster_file(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  ByteReader r(bytes.data(), bytes.size());
  if (!r.can_read(5) || r.raw(5) != std::string_view(kRasterMagic, 5)) {
    throw FormatError("'" + path + "' is not a raster file");
  }
  const auto version = r.get<std::uint16_t>();
  if (version != kRasterVersion) throw FormatError("unsupported raster version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  const auto h = static_cast<int>(r.get<std::uint32_t>());
  const auto wd = static_cast<int>(r.get<std::uint32_t>());
  std::vector<IndexedImage> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t need = 8 + static_cast<std::size_t>(h) * wd * 4;
    if (!r.can_read(need)) {
      throw FormatError("raster '" + path + "' truncated at image " + std::to_string(i), i);
    }
    IndexedImage im{r.get<std::uint64_t>(), Image(h, wd)};
    for (double& v : im.image.pixels) v = r.get<float>();
    out.push_back(std::move(im));
  }
  if (r.remaining() != 0) throw FormatError("raster '" + path + "' has trailing bytes");
  return out;
}

inline void write_image_csv(std::ostream& os, const Image& img) {
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (c) os << ',';
      os << static_cast<float>(img.at(r, c));
    }
    os << '\n';
  }
}

}  // namespace nvdesign
