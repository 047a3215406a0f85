#include "panoqa/subjective.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace panoqa {

std::vector<SubjectiveRecord> load_subjective_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<SubjectiveRecord> records;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("subject_id", 0) == 0) continue;  // header
    }
    std::stringstream ss(line);
    SubjectiveRecord r;
    std::string score;
    if (!std::getline(ss, r.subject_id, ',') ||
        !std::getline(ss, r.stimulus_id, ',') || !std::getline(ss, score))
      throw std::runtime_error("malformed subjective CSV line: " + line);
    r.score = std::stod(score);
    if (r.score < 0.0 || r.score > 100.0)
      throw std::invalid_argument("subjective score out of [0,100]: " + line);
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

using ScoreMap = std::map<std::string, std::map<std::string, double>>;

// stimulus -> subject -> score, rejecting duplicate (subject, stimulus) pairs.
ScoreMap index_scores(const std::vector<SubjectiveRecord>& records) {
  ScoreMap by_stimulus;
  for (const auto& r : records) {
    auto [it, inserted] = by_stimulus[r.stimulus_id].emplace(r.subject_id, r.score);
    if (!inserted)
      throw std::invalid_argument("duplicate score for subject " + r.subject_id +
                                  " on stimulus " + r.stimulus_id);
  }
  return by_stimulus;
}

}  // namespace

std::map<std::string, std::pair<double, int>> compute_mos(
    const std::vector<SubjectiveRecord>& records) {
  std::map<std::string, std::pair<double, int>> out;
  for (const auto& [stimulus, scores] : index_scores(records)) {
    if (scores.size() < 2) {
      std::cerr << "warning: stimulus " << stimulus << " has "
                << scores.size() << " score(s); excluded from MOS\n";
      continue;
    }
    double sum = 0.0;
    for (const auto& [subject, s] : scores) sum += s;
    out[stimulus] = {sum / scores.size(), static_cast<int>(scores.size())};
  }
  return out;
}

MosTable compute_dmos(const std::vector<SubjectiveRecord>& records,
                      const std::map<std::string, std::string>& ref_map) {
  const ScoreMap by_stimulus = index_scores(records);
  const auto mos = compute_mos(records);

  std::vector<std::string> missing;
  MosTable table;
  for (const auto& [stimulus, scores] : by_stimulus) {
    if (scores.size() < 2) continue;  // already warned in compute_mos
    MosEntry e;
    e.mos = mos.at(stimulus).first;
    e.n_subjects = mos.at(stimulus).second;
    const auto ref_it = ref_map.find(stimulus);
    if (ref_it == ref_map.end()) {
      e.is_reference = true;
      e.dmos = 0.0;
      table.per_stimulus[stimulus] = e;
      continue;
    }
    const auto ref_scores_it = by_stimulus.find(ref_it->second);
    if (ref_scores_it == by_stimulus.end()) {
      missing.push_back(stimulus);
      continue;
    }
    double diff_sum = 0.0;
    int n = 0;
    bool incomplete = false;
    for (const auto& [subject, s] : scores) {
      const auto rs = ref_scores_it->second.find(subject);
      if (rs == ref_scores_it->second.end()) {
        incomplete = true;
        break;
      }
      diff_sum += rs->second - s;
      ++n;
    }
    if (incomplete || n == 0) {
      missing.push_back(stimulus);
      continue;
    }
    e.dmos = std::clamp(diff_sum / n, 0.0, 100.0);
    table.per_stimulus[stimulus] = e;
  }
  if (!missing.empty()) {
    std::string msg = "missing reference scores for:";
    for (const auto& s : missing) msg += " " + s;
    throw std::invalid_argument(msg);
  }
  return table;
}

namespace {

// type-7 quantile (linear interpolation between order statistics)
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

BoxplotStats boxplot_stats(std::vector<double> values) {
  if (values.empty())
    throw std::invalid_argument("boxplot_stats: empty group");
  std::sort(values.begin(), values.end());
  BoxplotStats s;
  s.n = static_cast<int>(values.size());
  s.median = quantile_sorted(values, 0.5);
  s.q1 = quantile_sorted(values, 0.25);
  s.q3 = quantile_sorted(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = values.back();
  s.whisker_high = values.front();
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

std::map<std::string, BoxplotStats> grouped_boxplots(
    const std::map<std::string, std::vector<double>>& groups) {
  std::map<std::string, BoxplotStats> out;
  for (const auto& [name, values] : groups) {
    if (values.empty()) {
      std::cerr << "warning: empty group " << name << " omitted\n";
      continue;
    }
    out[name] = boxplot_stats(values);
  }
  return out;
}

}  // namespace panoqa
