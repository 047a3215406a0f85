#include "panoqa/artifacts.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace panoqa {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_correlation_reports_csv(
    const fs::path& path,
    const std::vector<std::pair<std::string, CorrelationReport>>& reports) {
  auto out = open_out(path);
  out << "scorer,plcc,srocc,krocc,rmse,mae,n,excluded,"
         "logistic_b1,logistic_b2,logistic_b3,logistic_b4,converged\n";
  for (const auto& [name, r] : reports) {
    out << name << ',' << format_double(r.plcc) << ',' << format_double(r.srocc)
        << ',' << format_double(r.krocc) << ',' << format_double(r.rmse) << ','
        << format_double(r.mae) << ',' << r.n_used << ',' << r.n_excluded << ','
        << format_double(r.logistic.b1) << ',' << format_double(r.logistic.b2)
        << ',' << format_double(r.logistic.b3) << ','
        << format_double(r.logistic.b4) << ','
        << (r.logistic.converged ? 1 : 0) << '\n';
  }
}

void write_scatter_csv(const fs::path& path, const ScoreSeries& series,
                       const LogisticParams& fit) {
  auto out = open_out(path);
  out << "objective,fitted,dmos\n";
  for (const auto& p : series) {
    if (!std::isfinite(p.objective)) continue;
    out << format_double(p.objective) << ','
        << format_double(logistic_eval(fit, p.objective)) << ','
        << format_double(p.dmos) << '\n';
  }
}

void write_energy_report_csv(const fs::path& path,
                             const EnergyLossReport& report) {
  auto out = open_out(path);
  out << "subband";
  for (int qf : report.quality_factors) out << ",qf" << qf;
  out << '\n';
  for (int b = 0; b < 4; ++b) {
    out << kSubbandNames[b];
    for (std::size_t i = 0; i < report.quality_factors.size(); ++i) {
      out << ',';
      if (report.loss_percent[b][i])
        out << format_double(*report.loss_percent[b][i]);
    }
    out << '\n';
  }
}

void write_histogram_csvs(const fs::path& dir, const EnergyLossReport& report) {
  std::map<std::string, std::vector<const SubbandHistogram*>> by_series;
  for (const auto& h : report.histograms) by_series[h.series].push_back(&h);
  for (const auto& [series, hists] : by_series) {
    auto out = open_out(dir / ("histogram_" + series + ".csv"));
    out << "band,bin_center,count\n";
    for (const auto* h : hists)
      for (std::size_t i = 0; i < h->bin_centers.size(); ++i)
        out << h->band << ',' << format_double(h->bin_centers[i]) << ','
            << h->counts[i] << '\n';
  }
}

void write_boxplot_csv(const fs::path& path,
                       const std::map<std::string, BoxplotStats>& groups) {
  auto out = open_out(path);
  out << "group,n,median,q1,q3,whisker_low,whisker_high,outliers\n";
  for (const auto& [name, s] : groups) {
    out << name << ',' << s.n << ',' << format_double(s.median) << ','
        << format_double(s.q1) << ',' << format_double(s.q3) << ','
        << format_double(s.whisker_low) << ',' << format_double(s.whisker_high)
        << ',';
    for (std::size_t i = 0; i < s.outliers.size(); ++i) {
      if (i) out << ';';
      out << format_double(s.outliers[i]);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// renders

namespace {

constexpr int kPlotW = 880, kPlotH = 660;
constexpr int kMargin = 70;

struct Axis {
  double lo, hi;
  double scale(double v, int lo_px, int hi_px) const {
    if (hi == lo) return 0.5 * (lo_px + hi_px);
    return lo_px + (v - lo) / (hi - lo) * (hi_px - lo_px);
  }
};

cv::Mat blank_canvas(const std::string& title) {
  cv::Mat img(kPlotH, kPlotW, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::putText(img, title, {kMargin, 32}, cv::FONT_HERSHEY_SIMPLEX, 0.7,
              {30, 30, 30}, 1, cv::LINE_AA);
  cv::rectangle(img, {kMargin, kMargin}, {kPlotW - kMargin, kPlotH - kMargin},
                {120, 120, 120});
  return img;
}

int px(double v) { return static_cast<int>(std::lround(v)); }

}  // namespace

void render_scatter_png(const fs::path& path, const ScoreSeries& series,
                        const LogisticParams& fit, const std::string& title) {
  double lo_x = std::numeric_limits<double>::max(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = -lo_x;
  for (const auto& p : series) {
    if (!std::isfinite(p.objective)) continue;
    lo_x = std::min(lo_x, p.objective);
    hi_x = std::max(hi_x, p.objective);
    lo_y = std::min(lo_y, p.dmos);
    hi_y = std::max(hi_y, p.dmos);
  }
  if (lo_x > hi_x) throw std::invalid_argument("render_scatter: empty series");
  const Axis ax{lo_x, hi_x}, ay{lo_y, hi_y};
  cv::Mat img = blank_canvas(title);
  for (const auto& p : series) {
    if (!std::isfinite(p.objective)) continue;
    const int x = px(ax.scale(p.objective, kMargin, kPlotW - kMargin));
    const int y = px(ay.scale(p.dmos, kPlotH - kMargin, kMargin));
    cv::circle(img, {x, y}, 3, {180, 90, 20}, cv::FILLED, cv::LINE_AA);
  }
  cv::Point prev;
  for (int i = 0; i <= 200; ++i) {
    const double v = lo_x + (hi_x - lo_x) * i / 200.0;
    const cv::Point pt(px(ax.scale(v, kMargin, kPlotW - kMargin)),
                       px(ay.scale(logistic_eval(fit, v), kPlotH - kMargin,
                                   kMargin)));
    if (i) cv::line(img, prev, pt, {40, 40, 200}, 2, cv::LINE_AA);
    prev = pt;
  }
  cv::imwrite(path.string(), img);
}

void render_boxplot_png(const fs::path& path,
                        const std::map<std::string, BoxplotStats>& groups,
                        const std::string& title) {
  if (groups.empty()) throw std::invalid_argument("render_boxplot: no groups");
  double lo = std::numeric_limits<double>::max(), hi = -lo;
  for (const auto& [name, s] : groups) {
    lo = std::min({lo, s.whisker_low});
    hi = std::max({hi, s.whisker_high});
    for (double o : s.outliers) {
      lo = std::min(lo, o);
      hi = std::max(hi, o);
    }
  }
  const Axis ay{lo, hi};
  cv::Mat img = blank_canvas(title);
  const int n = static_cast<int>(groups.size());
  const int span = (kPlotW - 2 * kMargin) / n;
  int i = 0;
  for (const auto& [name, s] : groups) {
    const int cx = kMargin + span * i + span / 2;
    const int half = std::max(10, span / 6);
    auto ypix = [&](double v) {
      return px(ay.scale(v, kPlotH - kMargin, kMargin));
    };
    cv::rectangle(img, {cx - half, ypix(s.q3)}, {cx + half, ypix(s.q1)},
                  {160, 90, 30}, 2);
    cv::line(img, {cx - half, ypix(s.median)}, {cx + half, ypix(s.median)},
             {30, 30, 200}, 2);
    cv::line(img, {cx, ypix(s.q3)}, {cx, ypix(s.whisker_high)}, {90, 90, 90}, 1);
    cv::line(img, {cx, ypix(s.q1)}, {cx, ypix(s.whisker_low)}, {90, 90, 90}, 1);
    for (double o : s.outliers)
      cv::drawMarker(img, {cx, ypix(o)}, {60, 60, 60}, cv::MARKER_CROSS, 8);
    cv::putText(img, name, {cx - half, kPlotH - kMargin + 24},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, {30, 30, 30}, 1, cv::LINE_AA);
    ++i;
  }
  cv::imwrite(path.string(), img);
}

void render_histogram_png(const fs::path& path, const EnergyLossReport& report,
                          const std::string& band) {
  std::vector<const SubbandHistogram*> series;
  long long peak = 1;
  for (const auto& h : report.histograms) {
    if (h.band != band) continue;
    series.push_back(&h);
    for (long long c : h.counts) peak = std::max(peak, c);
  }
  if (series.empty())
    throw std::invalid_argument("render_histogram: unknown band " + band);
  cv::Mat img = blank_canvas("wavelet coefficients, band " + band);
  const cv::Scalar palette[] = {{30, 30, 30},   {200, 60, 30}, {30, 160, 30},
                                {30, 60, 200},  {160, 30, 160}, {30, 160, 200}};
  int si = 0;
  for (const auto* h : series) {
    const cv::Scalar color = palette[si % 6];
    cv::Point prev;
    for (std::size_t i = 0; i < h->counts.size(); ++i) {
      // log-compressed counts: the LL band dwarfs the detail bands otherwise
      const double t = std::log1p(static_cast<double>(h->counts[i])) /
                       std::log1p(static_cast<double>(peak));
      const cv::Point pt(
          px(kMargin + (kPlotW - 2.0 * kMargin) * i / (h->counts.size() - 1)),
          px(kPlotH - kMargin - t * (kPlotH - 2.0 * kMargin)));
      if (i) cv::line(img, prev, pt, color, 2, cv::LINE_AA);
      prev = pt;
    }
    cv::putText(img, h->series, {kPlotW - kMargin + 4, kMargin + 18 * si},
                cv::FONT_HERSHEY_SIMPLEX, 0.45, color, 1, cv::LINE_AA);
    ++si;
  }
  cv::imwrite(path.string(), img);
}

}  // namespace panoqa
