#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "panoqa/image.hpp"

namespace panoqa {

// Latitude in [-pi/2, pi/2], longitude in [-pi, pi); normalized on construction.
struct SphericalPoint {
  double lat = 0.0;
  double lon = 0.0;

  SphericalPoint() = default;
  SphericalPoint(double latitude, double longitude);
};

struct PlanePos {
  double x = 0.0;
  double y = 0.0;
  int face = -1;  // CMP only
};

// Raster geometry for one projection. CMP uses a 3x2 face layout
// {front, right, back, left / top, bottom}, so width = 3*face, height = 2*face.
struct ProjectionGeometry {
  Projection kind = Projection::Erp;
  int width = 0;
  int height = 0;

  ProjectionGeometry(Projection k, int w, int h);
  int face_size() const { return width / 3; }
  static ProjectionGeometry for_image(const RasterImage& image);
};

// Forward mapping; nullopt means the point falls outside the raster footprint
// (only possible for CPP out-of-raster queries).
std::optional<PlanePos> sphere_to_plane(const SphericalPoint& p,
                                        const ProjectionGeometry& geom);

// Inverse mapping; nullopt for pixels outside the valid footprint (CPP).
std::optional<SphericalPoint> plane_to_sphere(double x, double y,
                                              const ProjectionGeometry& geom);

// True when the integer pixel lies in the projection's valid footprint.
bool pixel_valid(int x, int y, const ProjectionGeometry& geom);

struct SampleGrid {
  std::vector<SphericalPoint> points;
};

inline constexpr std::size_t kDefaultSphereSamples = 655362;

// Deterministic spherical Fibonacci lattice of n points (n >= 12).
SampleGrid uniform_sphere_samples(std::size_t n);

// Bilinear interpolation with integer coordinates at pixel centers.
// ERP wraps horizontally and clamps vertically; CMP clamps within the face;
// CPP drops out-of-footprint neighbors and renormalizes; otherwise clamps.
double bilinear_sample_plane(const double* plane, const ProjectionGeometry& geom,
                             double x, double y);
std::vector<double> bilinear_sample(const RasterImage& image, double x, double y);

struct Reprojected {
  RasterImage image;
  std::vector<std::uint8_t> valid;  // per destination pixel
};

// Destination pixels pull through plane_to_sphere -> sphere_to_plane ->
// bilinear_sample; OUTSIDE destination pixels are zeroed and masked.
Reprojected reproject(const RasterImage& image, Projection dst_kind,
                      int dst_width, int dst_height);

}  // namespace panoqa
