#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace panoqa {

enum class Projection { Erp, Cmp, Cpp, None };

std::string to_string(Projection p);
Projection projection_from_string(const std::string& s);

// Channel-planar raster with values in [0,1]. 8-bit is only an I/O format;
// everything downstream (DWT, metrics, the network) works on this.
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  Projection projection = Projection::None;
  std::vector<double> data;  // data[(c*height + y)*width + x]

  double& at(int c, int x, int y) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int x, int y) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  const double* plane(int c) const {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }
  double* plane(int c) {
    return data.data() + static_cast<std::size_t>(c) * height * width;
  }
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool same_shape(const RasterImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

RasterImage make_image(int width, int height, int channels, double fill = 0.0,
                       Projection projection = Projection::None);

// Loads PNG/JPEG through the codec, converting 8-bit samples to [0,1].
RasterImage load_image(const std::filesystem::path& path,
                       Projection projection = Projection::None);
void save_png(const RasterImage& image, const std::filesystem::path& path);
void save_jpeg(const RasterImage& image, const std::filesystem::path& path,
               int quality);

std::vector<unsigned char> encode_jpeg(const RasterImage& image, int quality);
RasterImage decode_image(const std::vector<unsigned char>& bytes,
                         Projection projection = Projection::None);

// Encode-decode through the JPEG codec at the given quality factor.
RasterImage jpeg_roundtrip(const RasterImage& image, int quality_factor);

// BT.601 luma plane: Y = 0.299 R + 0.587 G + 0.114 B. Grayscale passes through.
std::vector<double> luma(const RasterImage& image);

enum class PatchMode { RandomNonOverlap, TileAll };

struct PatchOrigin {
  int x = 0;
  int y = 0;
};

struct Patch {
  RasterImage image;
  PatchOrigin origin;
};

// Aligned-grid patch origins. RandomNonOverlap draws `count` distinct grid
// slots (deterministic under seed), so returned patches are pairwise disjoint;
// TileAll returns every slot in row-major order.
std::vector<PatchOrigin> patch_origins(int width, int height, int size,
                                       int count, std::uint64_t seed,
                                       PatchMode mode);

RasterImage crop(const RasterImage& image, int x0, int y0, int size);

std::vector<Patch> extract_patches(const RasterImage& image, int size,
                                   int count, std::uint64_t seed,
                                   PatchMode mode);

}  // namespace panoqa
