#include "panoqa/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace panoqa {

namespace {

double mse_to_db(double mse) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

void check_same_dims(const RasterImage& a, const RasterImage& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument("metric inputs must share dimensions");
}

}  // namespace

double psnr(const RasterImage& ref, const RasterImage& dist) {
  check_same_dims(ref, dist);
  const auto ya = luma(ref);
  const auto yb = luma(dist);
  double acc = 0.0;
  for (std::size_t i = 0; i < ya.size(); ++i) {
    const double d = ya[i] - yb[i];
    acc += d * d;
  }
  return mse_to_db(acc / ya.size());
}

double s_psnr(const RasterImage& ref, const RasterImage& dist,
              const SampleGrid& grid) {
  check_same_dims(ref, dist);
  if (ref.projection != Projection::Erp || dist.projection != Projection::Erp)
    throw std::invalid_argument("s_psnr expects ERP inputs");
  if (grid.points.empty())
    throw std::invalid_argument("s_psnr: empty sample grid");
  const ProjectionGeometry geom = ProjectionGeometry::for_image(ref);
  const auto ya = luma(ref);
  const auto yb = luma(dist);
  double acc = 0.0;
  for (const auto& p : grid.points) {
    const auto pos = sphere_to_plane(p, geom);
    const double a = bilinear_sample_plane(ya.data(), geom, pos->x, pos->y);
    const double b = bilinear_sample_plane(yb.data(), geom, pos->x, pos->y);
    acc += (a - b) * (a - b);
  }
  return mse_to_db(acc / grid.points.size());
}

double cpp_psnr(const RasterImage& ref, const RasterImage& dist, int cpp_width,
                int cpp_height) {
  check_same_dims(ref, dist);
  if (ref.projection != Projection::Erp || dist.projection != Projection::Erp)
    throw std::invalid_argument("cpp_psnr expects ERP inputs");
  if (cpp_width <= 0) cpp_width = ref.width;
  if (cpp_height <= 0) cpp_height = ref.height;
  const Reprojected a = reproject(ref, Projection::Cpp, cpp_width, cpp_height);
  const Reprojected b = reproject(dist, Projection::Cpp, cpp_width, cpp_height);
  const auto ya = luma(a.image);
  const auto yb = luma(b.image);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ya.size(); ++i) {
    if (!a.valid[i]) continue;
    const double d = ya[i] - yb[i];
    acc += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("cpp_psnr: empty valid mask");
  return mse_to_db(acc / n);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> gaussian_kernel() {
  std::array<double, kSsimWindow> k{};
  const int half = kSsimWindow / 2;
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    k[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter, valid region only; output is (w-10) x (h-10).
std::vector<double> gauss_filter_valid(const std::vector<double>& src, int w,
                                       int h, int& out_w, int& out_h) {
  const auto k = gaussian_kernel();
  out_w = w - kSsimWindow + 1;
  out_h = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i)
        acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * out_w + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(out_w) * out_h, 0.0);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i)
        acc += k[i] * tmp[static_cast<std::size_t>(y + i) * out_w + x];
      out[static_cast<std::size_t>(y) * out_w + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const RasterImage& ref, const RasterImage& dist) {
  check_same_dims(ref, dist);
  if (ref.width < kSsimWindow || ref.height < kSsimWindow)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;

  const auto x = luma(ref);
  const auto y = luma(dist);
  const int w = ref.width, h = ref.height;
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  int ow = 0, oh = 0;
  const auto mu_x = gauss_filter_valid(x, w, h, ow, oh);
  const auto mu_y = gauss_filter_valid(y, w, h, ow, oh);
  const auto m_xx = gauss_filter_valid(xx, w, h, ow, oh);
  const auto m_yy = gauss_filter_valid(yy, w, h, ow, oh);
  const auto m_xy = gauss_filter_valid(xy, w, h, ow, oh);

  double acc = 0.0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double vx = m_xx[i] - mx * mx;
    const double vy = m_yy[i] - my * my;
    const double cxy = m_xy[i] - mx * my;
    acc += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) /
           ((mx * mx + my * my + kC1) * (vx + vy + kC2));
  }
  return acc / mu_x.size();
}

// ---------------------------------------------------------------------------
// correlation statistics

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * (i + j) + 1.0;  // mean of 1-based positions
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson: need two equally sized series");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw std::invalid_argument("pearson: degenerate (constant) series");
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

namespace {

// Merge sort counting strict inversions on y after sorting by (x, y).
long long count_inversions(std::vector<double>& v, std::vector<double>& buf,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long count = count_inversions(v, buf, lo, mid) +
                    count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      count += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
  return count;
}

long long tie_pair_count(const std::vector<double>& v) {
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  long long pairs = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j + 1 < s.size() && s[j + 1] == s[i]) ++j;
    const long long t = static_cast<long long>(j - i + 1);
    pairs += t * (t - 1) / 2;
    i = j + 1;
  }
  return pairs;
}

}  // namespace

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("kendall: need two equally sized series");
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  const long long n1 = tie_pair_count(x);
  const long long n2 = tie_pair_count(y);
  // pairs tied in both
  std::vector<std::pair<double, double>> xy(n);
  for (std::size_t i = 0; i < n; ++i) xy[i] = {x[i], y[i]};
  std::sort(xy.begin(), xy.end());
  long long n3 = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && xy[j + 1] == xy[i]) ++j;
      const long long t = static_cast<long long>(j - i + 1);
      n3 += t * (t - 1) / 2;
      i = j + 1;
    }
  }

  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const long long discordant = count_inversions(ys, buf, 0, n);

  const double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                       std::sqrt(static_cast<double>(n0 - n2));
  if (denom <= 0.0)
    throw std::invalid_argument("kendall: degenerate (constant) series");
  // concordant - discordant = n0 - n1 - n2 + n3 - 2*discordant
  return static_cast<double>(n0 - n1 - n2 + n3 - 2 * discordant) / denom;
}

// ---------------------------------------------------------------------------
// logistic fitting

double logistic_eval(const LogisticParams& p, double x) {
  const double t = (x - p.b3) / p.b4;
  const double s = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                            : std::exp(t) / (1.0 + std::exp(t));
  return p.b2 + (p.b1 - p.b2) * s;
}

namespace {

double sse_of(const LogisticParams& p, const ScoreSeries& s) {
  double acc = 0.0;
  for (const auto& pr : s) {
    const double r = logistic_eval(p, pr.objective) - pr.dmos;
    acc += r * r;
  }
  return acc;
}

// Gaussian elimination with partial pivoting for the 4x4 normal equations.
bool solve4(double a[4][4], double b[4], double out[4]) {
  int perm[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[perm[r]][col]) > std::abs(a[perm[piv]][col])) piv = r;
    std::swap(perm[col], perm[piv]);
    const double d = a[perm[col]][col];
    if (std::abs(d) < 1e-300) return false;
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[perm[r]][col] / d;
      for (int c = col; c < 4; ++c) a[perm[r]][c] -= f * a[perm[col]][c];
      b[perm[r]] -= f * b[perm[col]];
    }
  }
  for (int col = 3; col >= 0; --col) {
    double acc = b[perm[col]];
    for (int c = col + 1; c < 4; ++c) acc -= a[perm[col]][c] * out[c];
    out[col] = acc / a[perm[col]][col];
  }
  return true;
}

}  // namespace

LogisticParams fit_logistic(const ScoreSeries& series) {
  if (series.size() < 4)
    throw std::invalid_argument("fit_logistic: need at least 4 pairs");
  std::vector<double> xs(series.size()), ys(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    xs[i] = series[i].objective;
    ys[i] = series[i].dmos;
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw std::invalid_argument("fit_logistic: non-finite value in series");
  }
  const auto [min_x_it, max_x_it] = std::minmax_element(xs.begin(), xs.end());
  const auto [min_y_it, max_y_it] = std::minmax_element(ys.begin(), ys.end());
  if (*min_x_it == *max_x_it)
    throw std::invalid_argument("fit_logistic: objective scores are constant");

  std::vector<double> sorted_x = xs;
  std::sort(sorted_x.begin(), sorted_x.end());
  const double median_x = sorted_x.size() % 2 == 1
                              ? sorted_x[sorted_x.size() / 2]
                              : 0.5 * (sorted_x[sorted_x.size() / 2 - 1] +
                                       sorted_x[sorted_x.size() / 2]);

  LogisticParams p;
  p.b1 = *max_y_it;
  p.b2 = *min_y_it;
  p.b3 = median_x;
  p.b4 = (*max_x_it - *min_x_it) / 4.0;
  // a decreasing relation needs the opposite slope sign; b4=0 is singular
  if (*min_y_it != *max_y_it && pearson(xs, ys) < 0.0) p.b4 = -p.b4;

  double sse = sse_of(p, series);
  double mu = 1e-3;
  constexpr int kMaxIters = 500;
  for (int iter = 1; iter <= kMaxIters; ++iter) {
    p.iterations = iter;
    double jtj[4][4] = {};
    double jtr[4] = {};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double t = (xs[i] - p.b3) / p.b4;
      const double s = t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                                : std::exp(t) / (1.0 + std::exp(t));
      const double ds = s * (1.0 - s);
      const double f = p.b2 + (p.b1 - p.b2) * s;
      const double r = f - ys[i];
      const double j[4] = {s, 1.0 - s, -(p.b1 - p.b2) * ds / p.b4,
                           -(p.b1 - p.b2) * ds * t / p.b4};
      for (int a = 0; a < 4; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 4; ++b) jtj[a][b] += j[a] * j[b];
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
      double a[4][4];
      double b[4];
      for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) a[r][c] = jtj[r][c];
        a[r][r] += mu * std::max(jtj[r][r], 1e-12);
        b[r] = -jtr[r];
      }
      double delta[4];
      if (solve4(a, b, delta)) {
        LogisticParams trial = p;
        trial.b1 += delta[0];
        trial.b2 += delta[1];
        trial.b3 += delta[2];
        trial.b4 += delta[3];
        if (trial.b4 != 0.0) {
          const double trial_sse = sse_of(trial, series);
          if (trial_sse <= sse) {
            trial.iterations = p.iterations;
            p = trial;
            mu = std::max(mu * 0.3, 1e-12);
            if (sse - trial_sse < 1e-10 * std::max(sse, 1e-30)) {
              p.converged = true;
              sse = trial_sse;
              return p;
            }
            sse = trial_sse;
            stepped = true;
          }
        }
      }
      if (!stepped) mu *= 4.0;
    }
    if (!stepped) {
      // damping exhausted: local minimum within numeric resolution
      p.converged = true;
      return p;
    }
  }
  p.converged = false;
  return p;
}

CorrelationReport correlation_report(const ScoreSeries& series,
                                     const std::string& scorer_name) {
  ScoreSeries used;
  used.reserve(series.size());
  int excluded = 0;
  for (const auto& pr : series) {
    if (std::isfinite(pr.objective)) {
      used.push_back(pr);
    } else {
      ++excluded;  // identical-pair PSNR sentinel; kept out of fitting
    }
  }
  if (used.size() < 4)
    throw std::invalid_argument("correlation_report(" + scorer_name +
                                "): need at least 4 finite pairs");
  std::vector<double> xs(used.size()), ys(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) {
    xs[i] = used[i].objective;
    ys[i] = used[i].dmos;
  }
  if (*std::min_element(xs.begin(), xs.end()) ==
      *std::max_element(xs.begin(), xs.end()))
    throw std::invalid_argument("correlation_report(" + scorer_name +
                                "): objective scores are constant");

  CorrelationReport rep;
  rep.n_used = static_cast<int>(used.size());
  rep.n_excluded = excluded;
  rep.logistic = fit_logistic(used);
  std::vector<double> fitted(used.size());
  for (std::size_t i = 0; i < used.size(); ++i)
    fitted[i] = logistic_eval(rep.logistic, xs[i]);
  rep.plcc = pearson(fitted, ys);
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < used.size(); ++i) {
    const double d = fitted[i] - ys[i];
    se += d * d;
    ae += std::abs(d);
  }
  rep.rmse = std::sqrt(se / used.size());
  rep.mae = ae / used.size();
  rep.srocc = spearman(xs, ys);
  rep.krocc = kendall_tau_b(xs, ys);
  return rep;
}

}  // namespace panoqa
