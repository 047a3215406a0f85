#pragma once

#include <string>
#include <vector>

#include "panoqa/image.hpp"
#include "panoqa/sphere.hpp"

namespace panoqa {

// Full-reference metrics; all computed on BT.601 luma over [0,1].
// Identical inputs yield +infinity for the PSNR family (see CorrelationReport
// for how infinities are kept out of fitting).

double psnr(const RasterImage& ref, const RasterImage& dist);

// MSE over luma sampled at the grid points through ERP geometry.
double s_psnr(const RasterImage& ref, const RasterImage& dist,
              const SampleGrid& grid);

// Both inputs reprojected to CPP; PSNR over the inside-parabola mask only.
// Zero cpp dims default to the reference dimensions.
double cpp_psnr(const RasterImage& ref, const RasterImage& dist,
                int cpp_width = 0, int cpp_height = 0);

// Standard SSIM: 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03, L=1,
// mean over valid window positions.
double ssim(const RasterImage& ref, const RasterImage& dist);

struct ScorePair {
  double objective = 0.0;
  double dmos = 0.0;
};
using ScoreSeries = std::vector<ScorePair>;

// Monotone 4-parameter logistic f(x) = b2 + (b1-b2) / (1 + exp(-(x-b3)/b4)).
struct LogisticParams {
  double b1 = 0.0, b2 = 0.0, b3 = 0.0, b4 = 1.0;
  bool converged = false;
  int iterations = 0;
};

double logistic_eval(const LogisticParams& p, double x);

// Damped Gauss-Newton (Levenberg-Marquardt) least squares mapping objective
// scores onto DMOS. Init: b1=max(dmos), b2=min(dmos), b3=median(score),
// b4=(max-min score)/4 signed by the raw correlation. At most 500 iterations;
// converged when the relative SSE change drops below 1e-10.
LogisticParams fit_logistic(const ScoreSeries& series);

struct CorrelationReport {
  double plcc = 0.0;   // Pearson between fitted scores and DMOS
  double srocc = 0.0;  // Spearman on raw scores, average ranks for ties
  double krocc = 0.0;  // Kendall tau-b on raw scores
  double rmse = 0.0;
  double mae = 0.0;
  LogisticParams logistic;
  int n_used = 0;
  int n_excluded = 0;  // non-finite objective scores (identical-pair sentinel)
};

CorrelationReport correlation_report(const ScoreSeries& series,
                                     const std::string& scorer_name = "scores");

double pearson(const std::vector<double>& x, const std::vector<double>& y);
double spearman(const std::vector<double>& x, const std::vector<double>& y);
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v);

}  // namespace panoqa
