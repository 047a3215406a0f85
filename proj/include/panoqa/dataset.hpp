#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "panoqa/image.hpp"

namespace panoqa {

enum class ImpairmentMode { JpegOnly, ProjectionRoundTrip };

std::string to_string(ImpairmentMode m);
ImpairmentMode impairment_mode_from_string(const std::string& s);

inline constexpr std::array<int, 4> kQualityFactors = {5, 15, 35, 60};

// Mode 1: JPEG at qf in {5,15,35,60} on the ERP raster.
// Mode 2: projection round trip (ERP -> CMP/CPP -> ERP), then JPEG at qf 15.
struct ImpairmentSpec {
  ImpairmentMode mode = ImpairmentMode::JpegOnly;
  int quality_factor = 15;
  Projection projection = Projection::Erp;

  void validate() const;
  std::string tag() const;  // stable id fragment, e.g. "m1_qf05" / "m2_cmp"
};

// The full in-scope impairment grid: 4 JPEG levels + CMP and CPP round trips.
std::vector<ImpairmentSpec> default_impairments();

enum class Split { Train, Test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ManifestRecord {
  std::string stimulus_id;
  std::string source_id;
  ImpairmentSpec spec;
  std::string path;  // relative to the manifest directory
  std::optional<double> dmos;
  Split split = Split::Train;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;  // sorted by stimulus_id

  // stimulus_id -> source_id, the ref_map consumed by compute_dmos
  std::map<std::string, std::string> reference_map() const;
};

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Pristine source for a record, stored by build_dataset under
// <manifest_dir>/references/<source_id>.png.
std::filesystem::path reference_path(const std::filesystem::path& manifest_dir,
                                     const std::string& source_id);
std::filesystem::path record_path(const std::filesystem::path& manifest_dir,
                                  const ManifestRecord& record);

// Synthesizes the impaired corpus: every source x spec pair is written as a
// JPEG under out_dir/images plus the pristine PNG under out_dir/references,
// with a source-disjoint train/test split. Unreadable sources are skipped
// with a warning. Deterministic under seed.
DatasetManifest build_dataset(const std::vector<std::filesystem::path>& sources,
                              const std::vector<ImpairmentSpec>& specs,
                              double split_ratio, std::uint64_t seed,
                              const std::filesystem::path& out_dir);

// Overwrites dmos per stimulus_id; unknown ids are an error.
void merge_dmos(DatasetManifest& manifest,
                const std::map<std::string, double>& dmos_by_stimulus);

}  // namespace panoqa
