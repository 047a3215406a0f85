#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "panoqa/metrics.hpp"
#include "support/synthetic.hpp"

using namespace panoqa;

namespace {

// O(n^2) rank oracle: rank = 1 + #smaller + (#equal - 1)/2
std::vector<double> brute_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int smaller = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    r[i] = 1.0 + smaller + (equal - 1) * 0.5;
  }
  return r;
}

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = brute_ranks(x);
  const auto ry = brute_ranks(y);
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += rx[i] * rx[i];
    syy += ry[i] * ry[i];
    sxy += rx[i] * ry[i];
  }
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  return cov / std::sqrt(vx * vy);
}

double brute_kendall(const std::vector<double>& x, const std::vector<double>& y) {
  long long concordant = 0, discordant = 0, tx = 0, ty = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++tx;
      } else if (dy == 0) {
        ++ty;
      } else if ((dx > 0) == (dy > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  long long joint = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (x[i] == x[j] && y[i] == y[j]) ++joint;
  // tx/ty counted x-only/y-only ties; totals include jointly tied pairs
  const long long n1 = tx + joint;
  const long long n2 = ty + joint;
  return static_cast<double>(concordant - discordant) /
         (std::sqrt(static_cast<double>(n0 - n1)) *
          std::sqrt(static_cast<double>(n0 - n2)));
}

RasterImage erp_tagged(RasterImage img) {
  img.projection = Projection::Erp;
  return img;
}

}  // namespace

TEST_CASE("psnr closed forms and symmetry") {
  RasterImage a = panoqa::testing::make_scene(1, 64, 32);
  CHECK(std::isinf(psnr(a, a)));

  RasterImage b = a;
  for (auto& v : b.data) v = std::min(1.0, v + 1.0 / 255.0);
  // keep the offset exact everywhere: rebuild from a clean ramp
  a = make_image(64, 32, 3, 0.3, Projection::Erp);
  b = make_image(64, 32, 3, 0.3 + 1.0 / 255.0, Projection::Erp);
  const double expected = 20.0 * std::log10(255.0);
  CHECK(psnr(a, b) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));

  RasterImage c = make_image(32, 32, 3);
  CHECK_THROWS_AS(psnr(a, c), std::invalid_argument);
}

TEST_CASE("psnr decreases as noise grows") {
  RasterImage ref = panoqa::testing::make_scene(2, 64, 32);
  std::mt19937_64 rng(5);
  auto unit = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
  RasterImage lo = ref, hi = ref;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const double n = unit() - 0.5;
    lo.data[i] = std::clamp(ref.data[i] + 0.01 * n, 0.0, 1.0);
    hi.data[i] = std::clamp(ref.data[i] + 0.10 * n, 0.0, 1.0);
  }
  CHECK(psnr(ref, lo) > psnr(ref, hi));
}

TEST_CASE("s_psnr: sentinel, constant offset, pole downweighting") {
  RasterImage ref = erp_tagged(panoqa::testing::make_scene(3, 128, 64));
  const auto grid = uniform_sphere_samples(4000);
  CHECK(std::isinf(s_psnr(ref, ref, grid)));

  RasterImage off = make_image(128, 64, 3, 0.4, Projection::Erp);
  RasterImage off2 = make_image(128, 64, 3, 0.4 + 1.0 / 255.0, Projection::Erp);
  CHECK(s_psnr(off, off2, grid) ==
        doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-9));

  // distortion confined to the top/bottom rows: sphere sampling downweights it
  RasterImage pole = ref;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 128; ++x) {
        pole.at(c, x, y) = std::clamp(pole.at(c, x, y) + 0.4, 0.0, 1.0);
        pole.at(c, x, 63 - y) = std::clamp(pole.at(c, x, 63 - y) + 0.4, 0.0, 1.0);
      }
  CHECK(s_psnr(ref, pole, grid) > psnr(ref, pole));

  RasterImage none = panoqa::testing::make_scene(3, 128, 64, Projection::None);
  CHECK_THROWS_AS(s_psnr(none, none, grid), std::invalid_argument);
}

TEST_CASE("cpp_psnr: sentinel, constant offset, mask exclusions") {
  RasterImage a = make_image(128, 64, 3, 0.5, Projection::Erp);
  CHECK(std::isinf(cpp_psnr(a, a)));

  RasterImage b = make_image(128, 64, 3, 0.5 + 1.0 / 255.0, Projection::Erp);
  CHECK(cpp_psnr(a, b) ==
        doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-6));
}

TEST_CASE("ssim closed forms") {
  RasterImage a = panoqa::testing::make_scene(4, 64, 64);
  CHECK(ssim(a, a) == doctest::Approx(1.0));

  RasterImage c1 = make_image(32, 32, 1, 0.5);
  RasterImage c2 = make_image(32, 32, 1, 0.25);
  // luminance term only: (2*0.5*0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4)
  const double expected = (0.25 + 1e-4) / (0.3125 + 1e-4);
  CHECK(ssim(c1, c2) == doctest::Approx(expected).epsilon(1e-9));

  CHECK_THROWS_AS(ssim(make_image(8, 8, 1), make_image(8, 8, 1)),
                  std::invalid_argument);
}

TEST_CASE("ssim of independent noise is near zero") {
  std::mt19937_64 rng(9);
  auto noise = [&rng]() {
    RasterImage img = make_image(96, 96, 1);
    for (auto& v : img.data)
      v = (rng() >> 11) * (1.0 / 9007199254740992.0);
    return img;
  };
  const double v = ssim(noise(), noise());
  CHECK(std::abs(v) < 0.2);
}

TEST_CASE("rank statistics match brute-force oracles on 200 random pairs") {
  std::mt19937_64 rng(123);
  auto unit = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
  std::vector<double> x(200), y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    x[i] = std::floor(unit() * 50.0);  // coarse grid forces ties
    y[i] = std::floor(unit() * 50.0);
  }
  CHECK(std::abs(spearman(x, y) - brute_spearman(x, y)) < 1e-9);
  CHECK(std::abs(kendall_tau_b(x, y) - brute_kendall(x, y)) < 1e-9);

  // and on continuous data without ties
  for (std::size_t i = 0; i < 200; ++i) {
    x[i] = unit();
    y[i] = unit();
  }
  CHECK(std::abs(spearman(x, y) - brute_spearman(x, y)) < 1e-9);
  CHECK(std::abs(kendall_tau_b(x, y) - brute_kendall(x, y)) < 1e-9);
}

TEST_CASE("rank statistics are invariant under increasing transforms") {
  std::mt19937_64 rng(77);
  auto unit = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
  std::vector<double> x(60), y(60), tx(60);
  for (std::size_t i = 0; i < 60; ++i) {
    x[i] = unit() * 40.0;
    y[i] = unit() * 100.0;
    tx[i] = std::exp(0.1 * x[i]) + 3.0;
  }
  CHECK(spearman(x, y) == doctest::Approx(spearman(tx, y)).epsilon(1e-12));
  CHECK(kendall_tau_b(x, y) ==
        doctest::Approx(kendall_tau_b(tx, y)).epsilon(1e-12));
}

TEST_CASE("logistic fit recovers planted parameters") {
  const LogisticParams truth{90.0, 10.0, 50.0, 8.0, true, 0};
  ScoreSeries series;
  for (int i = 0; i < 50; ++i) {
    const double x = 100.0 * i / 49.0;
    series.push_back({x, logistic_eval(truth, x)});
  }
  const auto fit = fit_logistic(series);
  CHECK(std::abs(fit.b1 - 90.0) / 90.0 < 0.01);
  CHECK(std::abs(fit.b2 - 10.0) / 10.0 < 0.01);
  CHECK(std::abs(fit.b3 - 50.0) / 50.0 < 0.01);
  CHECK(std::abs(fit.b4 - 8.0) / 8.0 < 0.01);
}

TEST_CASE("logistic fit approximates linear data") {
  ScoreSeries series;
  for (int i = 0; i < 50; ++i) {
    const double x = 100.0 * i / 49.0;
    series.push_back({x, x});
  }
  const auto fit = fit_logistic(series);
  double mae = 0.0;
  for (const auto& p : series)
    mae += std::abs(logistic_eval(fit, p.objective) - p.dmos);
  mae /= series.size();
  CHECK(mae < 1.0);
}

TEST_CASE("logistic fit preconditions") {
  ScoreSeries three = {{1, 2}, {2, 3}, {3, 4}};
  CHECK_THROWS_AS(fit_logistic(three), std::invalid_argument);
  ScoreSeries constant = {{1, 2}, {1, 3}, {1, 4}, {1, 5}};
  CHECK_THROWS_AS(fit_logistic(constant), std::invalid_argument);
}

TEST_CASE("correlation report on perfectly aligned scores") {
  std::mt19937_64 rng(31);
  auto unit = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
  ScoreSeries series;
  for (int i = 0; i < 40; ++i) {
    const double v = unit() * 100.0;
    series.push_back({v, v});
  }
  const auto rep = correlation_report(series, "identity");
  CHECK(rep.srocc == doctest::Approx(1.0));
  CHECK(rep.krocc == doctest::Approx(1.0));
  CHECK(rep.plcc >= 0.999);
  CHECK(rep.rmse <= 1.0);
  CHECK(rep.mae <= 1.0);
}

TEST_CASE("reverse-ordered scores fit a decreasing curve") {
  ScoreSeries series;
  for (int i = 0; i < 30; ++i) {
    const double x = i;
    series.push_back({x, 100.0 - 3.0 * i});
  }
  const auto rep = correlation_report(series, "reversed");
  CHECK(rep.srocc == doctest::Approx(-1.0));
  CHECK(rep.krocc == doctest::Approx(-1.0));
  CHECK(rep.plcc >= 0.999);  // after the monotone-decreasing fit
}

TEST_CASE("PLCC after fitting is invariant under affine score transforms") {
  std::mt19937_64 rng(55);
  auto unit = [&rng]() { return (rng() >> 11) * (1.0 / 9007199254740992.0); };
  ScoreSeries a, b;
  for (int i = 0; i < 60; ++i) {
    const double x = unit() * 30.0;
    const double d = std::clamp(3.0 * x + 8.0 * (unit() - 0.5), 0.0, 100.0);
    a.push_back({x, d});
    b.push_back({2.0 * x + 3.0, d});
  }
  const auto ra = correlation_report(a);
  const auto rb = correlation_report(b);
  CHECK(std::abs(ra.plcc - rb.plcc) < 1e-6);
  CHECK(std::abs(ra.srocc - rb.srocc) < 1e-12);
  CHECK(std::abs(ra.krocc - rb.krocc) < 1e-12);
}

TEST_CASE("infinite scores are excluded from fitting with a count") {
  ScoreSeries series;
  for (int i = 0; i < 20; ++i)
    series.push_back({static_cast<double>(i), 5.0 * i});
  series.push_back({std::numeric_limits<double>::infinity(), 0.0});
  const auto rep = correlation_report(series, "psnr");
  CHECK(rep.n_used == 20);
  CHECK(rep.n_excluded == 1);
}

TEST_CASE("degenerate series raise errors naming the scorer") {
  ScoreSeries constant;
  for (int i = 0; i < 10; ++i) constant.push_back({7.0, static_cast<double>(i)});
  CHECK_THROWS_WITH_AS(correlation_report(constant, "flat-metric"),
                       doctest::Contains("flat-metric"), std::invalid_argument);
}
