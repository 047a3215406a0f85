#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace panoqa {

struct SubjectiveRecord {
  std::string subject_id;
  std::string stimulus_id;
  double score = 0.0;  // [0,100]
};

// CSV with header subject_id,stimulus_id,score.
std::vector<SubjectiveRecord> load_subjective_csv(
    const std::filesystem::path& path);

struct MosEntry {
  double mos = 0.0;
  double dmos = 0.0;
  int n_subjects = 0;
  bool is_reference = false;
};

struct MosTable {
  std::map<std::string, MosEntry> per_stimulus;
};

// Arithmetic mean per stimulus; stimuli with fewer than two scores are
// excluded with a warning. Returns stimulus -> (mos, n_subjects).
std::map<std::string, std::pair<double, int>> compute_mos(
    const std::vector<SubjectiveRecord>& records);

// Per-subject difference scores against the mapped reference, averaged and
// clamped to [0,100]; reference stimuli carry DMOS 0 by definition.
// ref_map: impaired stimulus id -> reference stimulus id.
MosTable compute_dmos(const std::vector<SubjectiveRecord>& records,
                      const std::map<std::string, std::string>& ref_map);

struct BoxplotStats {
  double median = 0.0;
  double q1 = 0.0;  // type-7 (linear interpolation) quartiles
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // beyond 1.5*IQR
  int n = 0;
};

BoxplotStats boxplot_stats(std::vector<double> values);

// Per-group Tukey statistics; empty groups are omitted with a warning.
std::map<std::string, BoxplotStats> grouped_boxplots(
    const std::map<std::string, std::vector<double>>& groups);

}  // namespace panoqa
