#include "panoqa/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace panoqa {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
// CPP projection-plane half extents: x in [-sqrt(3*pi), sqrt(3*pi)],
// y in [-sqrt(3*pi)/2, sqrt(3*pi)/2].
const double kCppHalfWidth = std::sqrt(3.0 * kPi);
const double kCppScale = std::sqrt(3.0 / kPi);

double wrap_longitude(double lon) {
  lon = std::fmod(lon + kPi, kTwoPi);
  if (lon < 0) lon += kTwoPi;
  return lon - kPi;
}

struct Vec3 {
  double x, y, z;
};

// x toward (lat 0, lon 0), y toward lon +pi/2, z toward the north pole.
Vec3 to_cartesian(const SphericalPoint& p) {
  const double c = std::cos(p.lat);
  return {c * std::cos(p.lon), c * std::sin(p.lon), std::sin(p.lat)};
}

SphericalPoint to_spherical(const Vec3& v) {
  const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  return SphericalPoint(std::asin(std::clamp(v.z / n, -1.0, 1.0)),
                        std::atan2(v.y, v.x));
}

// CMP face order: front(+x), right(+y), back(-x), left(-y), top(+z), bottom(-z).
// Face-local (a,b) in [-1,1]^2 with a rightward and b downward in the raster.
Vec3 face_direction(int face, double a, double b) {
  switch (face) {
    case 0: return {1.0, a, -b};
    case 1: return {-a, 1.0, -b};
    case 2: return {-1.0, -a, -b};
    case 3: return {a, -1.0, -b};
    case 4: return {b, a, 1.0};
    default: return {-b, a, -1.0};
  }
}

void direction_to_face(const Vec3& v, int& face, double& a, double& b) {
  const double ax = std::abs(v.x), ay = std::abs(v.y), az = std::abs(v.z);
  if (ax >= ay && ax >= az) {
    if (v.x > 0) {
      face = 0; a = v.y / ax; b = -v.z / ax;
    } else {
      face = 2; a = -v.y / ax; b = -v.z / ax;
    }
  } else if (ay >= az) {
    if (v.y > 0) {
      face = 1; a = -v.x / ay; b = -v.z / ay;
    } else {
      face = 3; a = v.x / ay; b = -v.z / ay;
    }
  } else {
    if (v.z > 0) {
      face = 4; b = v.x / az; a = v.y / az;
    } else {
      face = 5; b = -v.x / az; a = v.y / az;
    }
  }
}

}  // namespace

SphericalPoint::SphericalPoint(double latitude, double longitude) {
  lat = std::clamp(latitude, -kPi / 2.0, kPi / 2.0);
  lon = wrap_longitude(longitude);
}

ProjectionGeometry::ProjectionGeometry(Projection k, int w, int h)
    : kind(k), width(w), height(h) {
  if (w < 1 || h < 1)
    throw std::invalid_argument("projection geometry must be positive");
  if (k == Projection::Cmp && (w % 3 != 0 || h % 2 != 0 || w / 3 != h / 2))
    throw std::invalid_argument("CMP raster must be 3x2 square faces");
}

ProjectionGeometry ProjectionGeometry::for_image(const RasterImage& image) {
  return ProjectionGeometry(image.projection, image.width, image.height);
}

std::optional<PlanePos> sphere_to_plane(const SphericalPoint& p,
                                        const ProjectionGeometry& geom) {
  switch (geom.kind) {
    case Projection::Erp: {
      return PlanePos{(p.lon / kTwoPi + 0.5) * geom.width,
                      (0.5 - p.lat / kPi) * geom.height, -1};
    }
    case Projection::Cmp: {
      int face;
      double a, b;
      direction_to_face(to_cartesian(p), face, a, b);
      const int fs = geom.face_size();
      const double u = (a + 1.0) * 0.5 * fs;
      const double v = (b + 1.0) * 0.5 * fs;
      const int col = face % 3, row = face / 3;
      return PlanePos{col * fs + u, row * fs + v, face};
    }
    case Projection::Cpp: {
      const double x = kCppScale * p.lon * (2.0 * std::cos(2.0 * p.lat / 3.0) - 1.0);
      const double y = kCppHalfWidth * std::sin(p.lat / 3.0);
      return PlanePos{(x / (2.0 * kCppHalfWidth) + 0.5) * geom.width,
                      (0.5 - y / kCppHalfWidth) * geom.height, -1};
    }
    default:
      throw std::invalid_argument("sphere_to_plane: unknown projection kind");
  }
}

std::optional<SphericalPoint> plane_to_sphere(double x, double y,
                                              const ProjectionGeometry& geom) {
  switch (geom.kind) {
    case Projection::Erp: {
      return SphericalPoint((0.5 - y / geom.height) * kPi,
                            (x / geom.width - 0.5) * kTwoPi);
    }
    case Projection::Cmp: {
      const int fs = geom.face_size();
      const int col = std::clamp(static_cast<int>(std::floor(x / fs)), 0, 2);
      const int row = std::clamp(static_cast<int>(std::floor(y / fs)), 0, 1);
      const double a = 2.0 * (x - col * fs) / fs - 1.0;
      const double b = 2.0 * (y - row * fs) / fs - 1.0;
      return to_spherical(face_direction(row * 3 + col, a, b));
    }
    case Projection::Cpp: {
      const double px = (x / geom.width - 0.5) * 2.0 * kCppHalfWidth;
      const double py = (0.5 - y / geom.height) * kCppHalfWidth;
      const double s = py / kCppHalfWidth;
      if (std::abs(s) > 0.5) return std::nullopt;  // beyond the poles
      const double lat = 3.0 * std::asin(s);
      const double denom = kCppScale * (2.0 * std::cos(2.0 * lat / 3.0) - 1.0);
      if (std::abs(denom) < 1e-14)
        return std::abs(px) < 1e-12 ? std::optional<SphericalPoint>(
                                          SphericalPoint(lat, 0.0))
                                    : std::nullopt;
      const double lon = px / denom;
      if (std::abs(lon) > kPi + 1e-12) return std::nullopt;
      return SphericalPoint(lat, lon);
    }
    default:
      throw std::invalid_argument("plane_to_sphere: unknown projection kind");
  }
}

bool pixel_valid(int x, int y, const ProjectionGeometry& geom) {
  if (x < 0 || y < 0 || x >= geom.width || y >= geom.height) return false;
  if (geom.kind != Projection::Cpp) return true;
  return plane_to_sphere(static_cast<double>(x), static_cast<double>(y), geom)
      .has_value();
}

SampleGrid uniform_sphere_samples(std::size_t n) {
  if (n < 12)
    throw std::invalid_argument("uniform_sphere_samples: n must be >= 12");
  SampleGrid grid;
  grid.points.reserve(n);
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / static_cast<double>(n);
    grid.points.emplace_back(std::asin(std::clamp(z, -1.0, 1.0)),
                             wrap_longitude(golden_angle * i));
  }
  return grid;
}

namespace {

struct Tap {
  int x, y;
  double w;
};

// Resolve the four bilinear taps plus wrap/clamp semantics for the projection.
int resolve_taps(const ProjectionGeometry& geom, double x, double y, Tap taps[4]) {
  int x0, x1, y0, y1;
  double fx, fy;
  if (geom.kind == Projection::Cmp) {
    const int fs = geom.face_size();
    const int col = std::clamp(static_cast<int>(std::floor(x / fs)), 0, 2);
    const int row = std::clamp(static_cast<int>(std::floor(y / fs)), 0, 1);
    // interpolate inside the face only; faces are not continuous neighbors
    const double lo_x = col * fs, lo_y = row * fs;
    x = std::clamp(x, lo_x, lo_x + fs - 1.0);
    y = std::clamp(y, lo_y, lo_y + fs - 1.0);
    x0 = static_cast<int>(std::floor(x));
    y0 = static_cast<int>(std::floor(y));
    fx = x - x0;
    fy = y - y0;
    x1 = std::min(x0 + 1, static_cast<int>(lo_x) + fs - 1);
    y1 = std::min(y0 + 1, static_cast<int>(lo_y) + fs - 1);
  } else if (geom.kind == Projection::Erp) {
    // longitude is periodic
    x = std::fmod(x, static_cast<double>(geom.width));
    if (x < 0) x += geom.width;
    y = std::clamp(y, 0.0, geom.height - 1.0);
    x0 = static_cast<int>(std::floor(x));
    y0 = static_cast<int>(std::floor(y));
    fx = x - x0;
    fy = y - y0;
    x0 %= geom.width;
    x1 = (x0 + 1) % geom.width;
    y1 = std::min(y0 + 1, geom.height - 1);
  } else {
    x = std::clamp(x, 0.0, geom.width - 1.0);
    y = std::clamp(y, 0.0, geom.height - 1.0);
    x0 = static_cast<int>(std::floor(x));
    y0 = static_cast<int>(std::floor(y));
    fx = x - x0;
    fy = y - y0;
    x1 = std::min(x0 + 1, geom.width - 1);
    y1 = std::min(y0 + 1, geom.height - 1);
  }
  taps[0] = {x0, y0, (1 - fx) * (1 - fy)};
  taps[1] = {x1, y0, fx * (1 - fy)};
  taps[2] = {x0, y1, (1 - fx) * fy};
  taps[3] = {x1, y1, fx * fy};

  if (geom.kind != Projection::Cpp) return 4;
  // drop taps outside the parabolic footprint and renormalize
  int kept = 0;
  double wsum = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (taps[i].w <= 0.0) continue;
    if (!pixel_valid(taps[i].x, taps[i].y, geom)) continue;
    taps[kept++] = taps[i];
    wsum += taps[i].w;
  }
  if (kept == 0 || wsum <= 0.0) return 0;
  for (int i = 0; i < kept; ++i) taps[i].w /= wsum;
  return kept;
}

}  // namespace

double bilinear_sample_plane(const double* plane, const ProjectionGeometry& geom,
                             double x, double y) {
  Tap taps[4];
  const int n = resolve_taps(geom, x, y, taps);
  double v = 0.0;
  for (int i = 0; i < n; ++i)
    v += taps[i].w * plane[static_cast<std::size_t>(taps[i].y) * geom.width +
                           taps[i].x];
  return v;
}

std::vector<double> bilinear_sample(const RasterImage& image, double x, double y) {
  const ProjectionGeometry geom = ProjectionGeometry::for_image(image);
  Tap taps[4];
  const int n = resolve_taps(geom, x, y, taps);
  std::vector<double> out(image.channels, 0.0);
  for (int c = 0; c < image.channels; ++c) {
    const double* plane = image.plane(c);
    double v = 0.0;
    for (int i = 0; i < n; ++i)
      v += taps[i].w *
           plane[static_cast<std::size_t>(taps[i].y) * image.width + taps[i].x];
    out[c] = v;
  }
  return out;
}

Reprojected reproject(const RasterImage& image, Projection dst_kind,
                      int dst_width, int dst_height) {
  const ProjectionGeometry src_geom = ProjectionGeometry::for_image(image);
  const ProjectionGeometry dst_geom(dst_kind, dst_width, dst_height);
  Reprojected out;
  out.image = make_image(dst_width, dst_height, image.channels, 0.0, dst_kind);
  out.valid.assign(static_cast<std::size_t>(dst_width) * dst_height, 0);

  std::vector<const double*> src_planes(image.channels);
  std::vector<double*> dst_planes(image.channels);
  for (int c = 0; c < image.channels; ++c) {
    src_planes[c] = image.plane(c);
    dst_planes[c] = out.image.plane(c);
  }

  for (int y = 0; y < dst_height; ++y) {
    for (int x = 0; x < dst_width; ++x) {
      const auto sp = plane_to_sphere(x, y, dst_geom);
      if (!sp) continue;
      const auto pos = sphere_to_plane(*sp, src_geom);
      if (!pos) continue;
      Tap taps[4];
      const int n = resolve_taps(src_geom, pos->x, pos->y, taps);
      if (n == 0) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * dst_width + x;
      for (int c = 0; c < image.channels; ++c) {
        double v = 0.0;
        for (int i = 0; i < n; ++i)
          v += taps[i].w *
               src_planes[c][static_cast<std::size_t>(taps[i].y) * image.width +
                             taps[i].x];
        dst_planes[c][idx] = v;
      }
      out.valid[idx] = 1;
    }
  }
  return out;
}

}  // namespace panoqa
