#include "panoqa/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace panoqa {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void check_even(int w, int h) {
  if (w < 2 || h < 2 || w % 2 != 0 || h % 2 != 0)
    throw std::invalid_argument("dwt2: dimensions must be even, got " +
                                std::to_string(w) + "x" + std::to_string(h));
}

// Single-level analysis of one plane into quadrant planes of size (w/2, h/2).
void analyze_plane(const double* src, int w, int h, double* ll, double* lh,
                   double* hl, double* hh) {
  const int hw = w / 2, hh_dim = h / 2;
  for (int j = 0; j < hh_dim; ++j) {
    for (int i = 0; i < hw; ++i) {
      const double a = src[(2 * j) * w + 2 * i];
      const double b = src[(2 * j) * w + 2 * i + 1];
      const double c = src[(2 * j + 1) * w + 2 * i];
      const double d = src[(2 * j + 1) * w + 2 * i + 1];
      const std::size_t k = static_cast<std::size_t>(j) * hw + i;
      ll[k] = 0.5 * (a + b + c + d);
      lh[k] = 0.5 * (a - b + c - d);
      hl[k] = 0.5 * (a + b - c - d);
      hh[k] = 0.5 * (a - b - c + d);
    }
  }
}

void synthesize_plane(const double* ll, const double* lh, const double* hl,
                      const double* hh, int hw, int hh_dim, double* dst) {
  const int w = 2 * hw;
  for (int j = 0; j < hh_dim; ++j) {
    for (int i = 0; i < hw; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * hw + i;
      dst[(2 * j) * w + 2 * i] = 0.5 * (ll[k] + lh[k] + hl[k] + hh[k]);
      dst[(2 * j) * w + 2 * i + 1] = 0.5 * (ll[k] - lh[k] + hl[k] - hh[k]);
      dst[(2 * j + 1) * w + 2 * i] = 0.5 * (ll[k] + lh[k] - hl[k] - hh[k]);
      dst[(2 * j + 1) * w + 2 * i + 1] = 0.5 * (ll[k] - lh[k] - hl[k] + hh[k]);
    }
  }
}

SubbandSet dwt2_once(const RasterImage& image, int level) {
  check_even(image.width, image.height);
  SubbandSet s;
  s.width = image.width / 2;
  s.height = image.height / 2;
  s.channels = image.channels;
  s.level = level;
  const std::size_t n = s.plane_size() * s.channels;
  s.ll.resize(n);
  s.lh.resize(n);
  s.hl.resize(n);
  s.hh.resize(n);
  for (int c = 0; c < image.channels; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * s.plane_size();
    analyze_plane(image.plane(c), image.width, image.height, s.ll.data() + off,
                  s.lh.data() + off, s.hl.data() + off, s.hh.data() + off);
  }
  return s;
}

}  // namespace

std::vector<SubbandSet> dwt2(const RasterImage& image, int levels) {
  if (levels < 1) throw std::invalid_argument("dwt2: levels must be >= 1");
  const int div = 1 << levels;
  if (image.width % div != 0 || image.height % div != 0)
    throw std::invalid_argument("dwt2: dimensions " + std::to_string(image.width) +
                                "x" + std::to_string(image.height) +
                                " not divisible by 2^" + std::to_string(levels));
  std::vector<SubbandSet> out;
  out.reserve(levels);
  RasterImage current = image;
  for (int l = 1; l <= levels; ++l) {
    SubbandSet s = dwt2_once(current, l);
    if (l < levels) {
      RasterImage next = make_image(s.width, s.height, s.channels);
      next.data = s.ll;
      current = std::move(next);
    }
    out.push_back(std::move(s));
  }
  return out;
}

RasterImage iwt2(const SubbandSet& s) {
  const std::size_t n = s.plane_size() * s.channels;
  if (s.width < 1 || s.height < 1 || s.channels < 1 || s.ll.size() != n ||
      s.lh.size() != n || s.hl.size() != n || s.hh.size() != n)
    throw std::invalid_argument("iwt2: mismatched sub-band plane dimensions");
  RasterImage out = make_image(2 * s.width, 2 * s.height, s.channels);
  for (int c = 0; c < s.channels; ++c) {
    const std::size_t off = static_cast<std::size_t>(c) * s.plane_size();
    synthesize_plane(s.ll.data() + off, s.lh.data() + off, s.hl.data() + off,
                     s.hh.data() + off, s.width, s.height, out.plane(c));
  }
  return out;
}

std::array<double, 4> subband_energy(const SubbandSet& s) {
  auto energy = [](const std::vector<double>& v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
  };
  return {energy(s.ll), energy(s.lh), energy(s.hl), energy(s.hh)};
}

std::optional<double> EnergyLossReport::loss(int band, int qf) const {
  for (std::size_t i = 0; i < quality_factors.size(); ++i)
    if (quality_factors[i] == qf) return loss_percent[band][i];
  return std::nullopt;
}

namespace {

const std::vector<double>& band_of(const SubbandSet& s, int b) {
  switch (b) {
    case 0: return s.ll;
    case 1: return s.lh;
    case 2: return s.hl;
    default: return s.hh;
  }
}

struct HistAccum {
  double max_abs = 0.0;
  std::vector<std::vector<double> const*> planes;  // borrowed
};

}  // namespace

EnergyLossReport energy_loss_report(const std::vector<EnergyPair>& pairs,
                                    int levels) {
  if (pairs.empty())
    throw std::invalid_argument("energy_loss_report: no image pairs");
  EnergyLossReport report;
  report.levels = levels;

  std::map<int, std::array<std::vector<double>, 4>> losses_by_qf;
  // Keep final-level sets for histogram accumulation; series keyed by label.
  std::map<std::string, std::vector<SubbandSet>> series_sets;

  for (const auto& p : pairs) {
    if (!p.reference.same_shape(p.impaired))
      throw std::invalid_argument("energy_loss_report: pair dimension mismatch");
    SubbandSet ref = dwt2(p.reference, levels).back();
    SubbandSet imp = dwt2(p.impaired, levels).back();
    const auto e_ref = subband_energy(ref);
    const auto e_imp = subband_energy(imp);
    auto& per_band = losses_by_qf[p.quality_factor];
    for (int b = 0; b < 4; ++b) {
      if (e_ref[b] > 0.0)
        per_band[b].push_back(100.0 * std::max(0.0, e_ref[b] - e_imp[b]) /
                              e_ref[b]);
      // zero reference energy: contributes nothing; band may end up undefined
    }
    series_sets["ref"].push_back(std::move(ref));
    series_sets["qf" + std::to_string(p.quality_factor)].push_back(std::move(imp));
  }

  for (const auto& [qf, per_band] : losses_by_qf)
    report.quality_factors.push_back(qf);
  for (int b = 0; b < 4; ++b) {
    for (int qf : report.quality_factors) {
      const auto& v = losses_by_qf[qf][b];
      if (v.empty()) {
        report.loss_percent[b].push_back(std::nullopt);
      } else {
        double mean = 0.0;
        for (double x : v) mean += x;
        report.loss_percent[b].push_back(mean / v.size());
      }
    }
  }

  // Histograms: symmetric 64-bin range per band, shared across series so the
  // Fig.3-style distributions are directly comparable.
  for (int b = 0; b < 4; ++b) {
    double max_abs = 0.0;
    for (const auto& [label, sets] : series_sets)
      for (const auto& s : sets)
        for (double x : band_of(s, b)) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0) max_abs = 1.0;
    const double lo = -max_abs, width = 2.0 * max_abs / kHistogramBins;
    for (const auto& [label, sets] : series_sets) {
      SubbandHistogram h;
      h.band = kSubbandNames[b];
      h.series = label;
      h.bin_centers.resize(kHistogramBins);
      h.counts.assign(kHistogramBins, 0);
      for (int k = 0; k < kHistogramBins; ++k)
        h.bin_centers[k] = lo + (k + 0.5) * width;
      for (const auto& s : sets) {
        for (double x : band_of(s, b)) {
          int k = static_cast<int>((x - lo) / width);
          k = std::clamp(k, 0, kHistogramBins - 1);
          ++h.counts[k];
        }
      }
      report.histograms.push_back(std::move(h));
    }
  }
  return report;
}

}  // namespace panoqa
