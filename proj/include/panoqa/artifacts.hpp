#pragma once

// Plot-ready artifact emission: deterministic CSV always, rendered PNG charts
// behind the CLI --render flag.

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panoqa/metrics.hpp"
#include "panoqa/subjective.hpp"
#include "panoqa/wavelet.hpp"

namespace panoqa {

// Fixed %.9g formatting so reruns byte-match.
std::string format_double(double v);

// One row per scorer with the five statistics and the fitted logistic.
void write_correlation_reports_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, CorrelationReport>>& reports);

// objective,fitted,dmos rows for one scorer.
void write_scatter_csv(const std::filesystem::path& path,
                       const ScoreSeries& series, const LogisticParams& fit);

// rows = sub-band, columns = quality factors; undefined cells stay empty.
void write_energy_report_csv(const std::filesystem::path& path,
                             const EnergyLossReport& report);

// histogram_<series>.csv files with band,bin_center,count rows.
void write_histogram_csvs(const std::filesystem::path& dir,
                          const EnergyLossReport& report);

void write_boxplot_csv(const std::filesystem::path& path,
                       const std::map<std::string, BoxplotStats>& groups);

// -- optional renders ---------------------------------------------------------

void render_scatter_png(const std::filesystem::path& path,
                        const ScoreSeries& series, const LogisticParams& fit,
                        const std::string& title);
void render_boxplot_png(const std::filesystem::path& path,
                        const std::map<std::string, BoxplotStats>& groups,
                        const std::string& title);
void render_histogram_png(const std::filesystem::path& path,
                          const EnergyLossReport& report,
                          const std::string& band);

}  // namespace panoqa
