#include "panoqa/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace panoqa {

std::string to_string(Projection p) {
  switch (p) {
    case Projection::Erp: return "ERP";
    case Projection::Cmp: return "CMP";
    case Projection::Cpp: return "CPP";
    case Projection::None: return "NONE";
  }
  throw std::invalid_argument("unknown projection enum");
}

Projection projection_from_string(const std::string& s) {
  if (s == "ERP") return Projection::Erp;
  if (s == "CMP") return Projection::Cmp;
  if (s == "CPP") return Projection::Cpp;
  if (s == "NONE") return Projection::None;
  throw std::invalid_argument("unknown projection: " + s);
}

RasterImage make_image(int width, int height, int channels, double fill,
                       Projection projection) {
  if (width < 1 || height < 1 || (channels != 1 && channels != 3))
    throw std::invalid_argument("make_image: bad dimensions or channel count");
  RasterImage img;
  img.width = width;
  img.height = height;
  img.channels = channels;
  img.projection = projection;
  img.data.assign(static_cast<std::size_t>(width) * height * channels, fill);
  return img;
}

namespace {

RasterImage from_mat(const cv::Mat& mat, Projection projection) {
  cv::Mat m8 = mat;
  if (mat.depth() != CV_8U) {
    double scale = mat.depth() == CV_16U ? 255.0 / 65535.0 : 255.0;
    mat.convertTo(m8, CV_8U, scale);
  }
  if (m8.channels() == 4) cv::cvtColor(m8, m8, cv::COLOR_BGRA2BGR);
  const int channels = m8.channels() == 1 ? 1 : 3;
  RasterImage img = make_image(m8.cols, m8.rows, channels, 0.0, projection);
  for (int y = 0; y < img.height; ++y) {
    const unsigned char* row = m8.ptr<unsigned char>(y);
    for (int x = 0; x < img.width; ++x) {
      if (channels == 1) {
        img.at(0, x, y) = row[x] / 255.0;
      } else {
        // OpenCV row layout is BGR
        img.at(0, x, y) = row[3 * x + 2] / 255.0;
        img.at(1, x, y) = row[3 * x + 1] / 255.0;
        img.at(2, x, y) = row[3 * x + 0] / 255.0;
      }
    }
  }
  return img;
}

cv::Mat to_mat_8u(const RasterImage& img) {
  cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
  auto quant = [](double v) {
    double q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<unsigned char>(q);
  };
  for (int y = 0; y < img.height; ++y) {
    unsigned char* row = m.ptr<unsigned char>(y);
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 1) {
        row[x] = quant(img.at(0, x, y));
      } else {
        row[3 * x + 2] = quant(img.at(0, x, y));
        row[3 * x + 1] = quant(img.at(1, x, y));
        row[3 * x + 0] = quant(img.at(2, x, y));
      }
    }
  }
  return m;
}

}  // namespace

RasterImage load_image(const std::filesystem::path& path, Projection projection) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty())
    throw std::runtime_error("failed to read image: " + path.string());
  return from_mat(mat, projection);
}

void save_png(const RasterImage& image, const std::filesystem::path& path) {
  if (!cv::imwrite(path.string(), to_mat_8u(image)))
    throw std::runtime_error("failed to write PNG: " + path.string());
}

void save_jpeg(const RasterImage& image, const std::filesystem::path& path,
               int quality) {
  auto bytes = encode_jpeg(image, quality);
  std::FILE* f = std::fopen(path.string().c_str(), "wb");
  if (!f) throw std::runtime_error("failed to open for write: " + path.string());
  std::size_t n = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (n != bytes.size())
    throw std::runtime_error("short write: " + path.string());
}

std::vector<unsigned char> encode_jpeg(const RasterImage& image, int quality) {
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("JPEG quality factor must be in [1,100]");
  std::vector<unsigned char> bytes;
  std::vector<int> params = {cv::IMWRITE_JPEG_QUALITY, quality};
  if (!cv::imencode(".jpg", to_mat_8u(image), bytes, params))
    throw std::runtime_error("JPEG encode failed");
  return bytes;
}

RasterImage decode_image(const std::vector<unsigned char>& bytes,
                         Projection projection) {
  cv::Mat mat = cv::imdecode(bytes, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw std::runtime_error("image decode failed");
  return from_mat(mat, projection);
}

RasterImage jpeg_roundtrip(const RasterImage& image, int quality_factor) {
  if (image.channels != 3)
    throw std::invalid_argument("jpeg_roundtrip expects a 3-channel image");
  RasterImage out = decode_image(encode_jpeg(image, quality_factor),
                                 image.projection);
  return out;
}

std::vector<double> luma(const RasterImage& image) {
  std::vector<double> y(image.plane_size());
  if (image.channels == 1) {
    std::copy(image.plane(0), image.plane(0) + y.size(), y.begin());
    return y;
  }
  const double* r = image.plane(0);
  const double* g = image.plane(1);
  const double* b = image.plane(2);
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
  return y;
}

namespace {

// Portable Fisher-Yates, deterministic for a given seed regardless of stdlib.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::vector<PatchOrigin> patch_origins(int width, int height, int size,
                                       int count, std::uint64_t seed,
                                       PatchMode mode) {
  if (size < 1 || size > std::min(width, height))
    throw std::invalid_argument("patch size must be in [1, min(width,height)]");
  const int nx = width / size;
  const int ny = height / size;
  std::vector<PatchOrigin> slots;
  slots.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) slots.push_back({i * size, j * size});

  if (mode == PatchMode::TileAll) return slots;

  if (count < 1 || count > static_cast<int>(slots.size()))
    throw std::invalid_argument(
        "non-overlapping patch count exceeds available slots (" +
        std::to_string(slots.size()) + ")");
  seeded_shuffle(slots, seed);
  slots.resize(count);
  return slots;
}

RasterImage crop(const RasterImage& image, int x0, int y0, int size) {
  if (x0 < 0 || y0 < 0 || x0 + size > image.width || y0 + size > image.height)
    throw std::invalid_argument("crop out of bounds");
  RasterImage out = make_image(size, size, image.channels, 0.0, Projection::None);
  for (int c = 0; c < image.channels; ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        out.at(c, x, y) = image.at(c, x0 + x, y0 + y);
  return out;
}

std::vector<Patch> extract_patches(const RasterImage& image, int size,
                                   int count, std::uint64_t seed,
                                   PatchMode mode) {
  auto origins = patch_origins(image.width, image.height, size, count, seed, mode);
  std::vector<Patch> patches;
  patches.reserve(origins.size());
  for (const auto& o : origins)
    patches.push_back({crop(image, o.x, o.y, size), o});
  return patches;
}

}  // namespace panoqa
