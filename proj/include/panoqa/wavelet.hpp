#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "panoqa/image.hpp"

namespace panoqa {

// One DWT level's coefficient planes. Convention: LH is the horizontal
// high-pass (vertical-edge detail), HL the vertical high-pass, HH diagonal.
// Planes are channel-planar like RasterImage, at half the source resolution.
struct SubbandSet {
  int width = 0;   // sub-band dimensions
  int height = 0;
  int channels = 0;
  int level = 1;
  std::vector<double> ll, lh, hl, hh;

  std::size_t plane_size() const {
    return static_cast<std::size_t>(width) * height;
  }
};

inline constexpr std::array<const char*, 4> kSubbandNames = {"LL", "LH", "HL",
                                                             "HH"};

// Orthonormal Haar analysis (low = (a+b)/sqrt(2), high = (a-b)/sqrt(2) per
// axis). Level k consumes level k-1's LL. Dimensions must be divisible by
// 2^levels; there is no implicit padding.
std::vector<SubbandSet> dwt2(const RasterImage& image, int levels);

// Exact inverse of one dwt2 level.
RasterImage iwt2(const SubbandSet& subbands);

// Sum of squared coefficients per band, channels pooled.
std::array<double, 4> subband_energy(const SubbandSet& subbands);

struct EnergyPair {
  RasterImage reference;
  RasterImage impaired;
  int quality_factor = 0;
};

struct SubbandHistogram {
  std::string band;    // LL/LH/HL/HH
  std::string series;  // "ref" or "qf<k>"
  std::vector<double> bin_centers;
  std::vector<long long> counts;
};

struct EnergyLossReport {
  std::vector<int> quality_factors;  // ascending
  // loss_percent[band][qf index]; nullopt when the reference band carries no
  // energy for any contributing pair.
  std::array<std::vector<std::optional<double>>, 4> loss_percent;
  std::vector<SubbandHistogram> histograms;
  int levels = 0;

  std::optional<double> loss(int band, int qf) const;
};

inline constexpr int kHistogramBins = 64;

// Mean percentage energy loss per sub-band and quality factor over the final
// DWT level, plus 64-bin coefficient histograms per band and series.
EnergyLossReport energy_loss_report(const std::vector<EnergyPair>& pairs,
                                    int levels);

}  // namespace panoqa
