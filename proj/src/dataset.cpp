#include "panoqa/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "panoqa/sphere.hpp"

namespace panoqa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string to_string(ImpairmentMode m) {
  return m == ImpairmentMode::JpegOnly ? "JPEG_ONLY" : "PROJECTION";
}

ImpairmentMode impairment_mode_from_string(const std::string& s) {
  if (s == "JPEG_ONLY") return ImpairmentMode::JpegOnly;
  if (s == "PROJECTION") return ImpairmentMode::ProjectionRoundTrip;
  throw std::invalid_argument("unknown impairment mode: " + s);
}

std::string to_string(Split s) {
  return s == Split::Train ? "TRAIN" : "TEST";
}

Split split_from_string(const std::string& s) {
  if (s == "TRAIN") return Split::Train;
  if (s == "TEST") return Split::Test;
  throw std::invalid_argument("unknown split: " + s);
}

void ImpairmentSpec::validate() const {
  if (std::find(kQualityFactors.begin(), kQualityFactors.end(), quality_factor) ==
      kQualityFactors.end())
    throw std::invalid_argument("quality factor must be one of {5,15,35,60}");
  if (mode == ImpairmentMode::JpegOnly && projection != Projection::Erp)
    throw std::invalid_argument("JPEG_ONLY impairment keeps ERP projection");
  if (mode == ImpairmentMode::ProjectionRoundTrip) {
    if (quality_factor != 15)
      throw std::invalid_argument("PROJECTION impairment uses quality factor 15");
    if (projection != Projection::Cmp && projection != Projection::Cpp)
      throw std::invalid_argument("PROJECTION impairment supports CMP and CPP");
  }
}

std::string ImpairmentSpec::tag() const {
  std::ostringstream os;
  if (mode == ImpairmentMode::JpegOnly) {
    os << "m1_qf" << (quality_factor < 10 ? "0" : "") << quality_factor;
  } else {
    std::string p = to_string(projection);
    std::transform(p.begin(), p.end(), p.begin(), ::tolower);
    os << "m2_" << p;
  }
  return os.str();
}

std::vector<ImpairmentSpec> default_impairments() {
  std::vector<ImpairmentSpec> specs;
  for (int qf : kQualityFactors)
    specs.push_back({ImpairmentMode::JpegOnly, qf, Projection::Erp});
  specs.push_back({ImpairmentMode::ProjectionRoundTrip, 15, Projection::Cmp});
  specs.push_back({ImpairmentMode::ProjectionRoundTrip, 15, Projection::Cpp});
  return specs;
}

std::map<std::string, std::string> DatasetManifest::reference_map() const {
  std::map<std::string, std::string> m;
  for (const auto& r : records) m[r.stimulus_id] = r.source_id;
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json j;
  j["version"] = 1;
  j["records"] = json::array();
  for (const auto& r : manifest.records) {
    json rec;
    rec["stimulus_id"] = r.stimulus_id;
    rec["source_id"] = r.source_id;
    rec["mode"] = to_string(r.spec.mode);
    rec["qf"] = r.spec.quality_factor;
    rec["projection"] = to_string(r.spec.projection);
    rec["path"] = r.path;
    if (r.dmos) {
      rec["dmos"] = *r.dmos;
    } else {
      rec["dmos"] = nullptr;
    }
    rec["split"] = to_string(r.split);
    j["records"].push_back(std::move(rec));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  json j = json::parse(in);
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw std::runtime_error("unsupported manifest version in " + path.string());
  DatasetManifest m;
  for (const auto& rec : j.at("records")) {
    ManifestRecord r;
    r.stimulus_id = rec.at("stimulus_id").get<std::string>();
    r.source_id = rec.at("source_id").get<std::string>();
    r.spec.mode = impairment_mode_from_string(rec.at("mode").get<std::string>());
    r.spec.quality_factor = rec.at("qf").get<int>();
    r.spec.projection =
        projection_from_string(rec.at("projection").get<std::string>());
    r.path = rec.at("path").get<std::string>();
    if (!rec.at("dmos").is_null()) r.dmos = rec.at("dmos").get<double>();
    r.split = split_from_string(rec.at("split").get<std::string>());
    m.records.push_back(std::move(r));
  }
  return m;
}

fs::path reference_path(const fs::path& manifest_dir,
                        const std::string& source_id) {
  return manifest_dir / "references" / (source_id + ".png");
}

fs::path record_path(const fs::path& manifest_dir, const ManifestRecord& record) {
  return manifest_dir / record.path;
}

namespace {

RasterImage impair(const RasterImage& source, const ImpairmentSpec& spec,
                   std::vector<unsigned char>& jpeg_bytes) {
  if (spec.mode == ImpairmentMode::JpegOnly) {
    jpeg_bytes = encode_jpeg(source, spec.quality_factor);
    return decode_image(jpeg_bytes, Projection::Erp);
  }
  // mode 2: ERP -> projection raster -> ERP, then JPEG at qf 15
  int w = 0, h = 0;
  if (spec.projection == Projection::Cmp) {
    const int face = source.height / 2;
    w = 3 * face;
    h = 2 * face;
  } else {
    w = source.width;
    h = source.height;
  }
  Reprojected fwd = reproject(source, spec.projection, w, h);
  Reprojected back = reproject(fwd.image, Projection::Erp, source.width,
                               source.height);
  jpeg_bytes = encode_jpeg(back.image, spec.quality_factor);
  return decode_image(jpeg_bytes, Projection::Erp);
}

}  // namespace

DatasetManifest build_dataset(const std::vector<fs::path>& sources,
                              const std::vector<ImpairmentSpec>& specs,
                              double split_ratio, std::uint64_t seed,
                              const fs::path& out_dir) {
  if (split_ratio <= 0.0 || split_ratio >= 1.0)
    throw std::invalid_argument("split_ratio must be in (0,1)");
  if (specs.empty()) throw std::invalid_argument("no impairment specs given");
  for (const auto& s : specs) s.validate();

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "references");

  struct Loaded {
    std::string source_id;
    RasterImage image;
  };
  std::vector<Loaded> loaded;
  for (const auto& path : sources) {
    RasterImage img;
    try {
      img = load_image(path, Projection::Erp);
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping unreadable source " << path << ": "
                << e.what() << "\n";
      continue;
    }
    if (img.channels != 3 || img.width != 2 * img.height) {
      std::cerr << "warning: skipping non-ERP source " << path << " ("
                << img.width << "x" << img.height << ", " << img.channels
                << "ch)\n";
      continue;
    }
    loaded.push_back({path.stem().string(), std::move(img)});
  }
  if (loaded.empty())
    throw std::runtime_error("build_dataset: no readable ERP sources");

  std::sort(loaded.begin(), loaded.end(),
            [](const Loaded& a, const Loaded& b) {
              return a.source_id < b.source_id;
            });
  {
    std::set<std::string> ids;
    for (const auto& l : loaded)
      if (!ids.insert(l.source_id).second)
        throw std::invalid_argument("duplicate source id: " + l.source_id);
  }

  // source-disjoint split
  std::vector<std::string> order;
  for (const auto& l : loaded) order.push_back(l.source_id);
  {
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng() % i]);
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::lround(split_ratio * static_cast<double>(order.size())));
  if (order.size() >= 2)
    n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  else
    n_train = order.size();
  std::set<std::string> train_ids(order.begin(), order.begin() + n_train);

  DatasetManifest manifest;
  for (const auto& l : loaded) {
    save_png(l.image, reference_path(out_dir, l.source_id));
    for (const auto& spec : specs) {
      ManifestRecord rec;
      rec.source_id = l.source_id;
      rec.spec = spec;
      rec.stimulus_id = l.source_id + "__" + spec.tag();
      rec.path = "images/" + rec.stimulus_id + ".jpg";
      rec.split = train_ids.count(l.source_id) ? Split::Train : Split::Test;

      std::vector<unsigned char> bytes;
      impair(l.image, spec, bytes);
      const fs::path out_path = out_dir / rec.path;
      std::ofstream out(out_path, std::ios::binary);
      if (!out)
        throw std::runtime_error("cannot write " + out_path.string());
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      manifest.records.push_back(std::move(rec));
    }
  }

  std::sort(manifest.records.begin(), manifest.records.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) {
              return a.stimulus_id < b.stimulus_id;
            });
  {
    std::set<std::string> ids;
    for (const auto& r : manifest.records)
      if (!ids.insert(r.stimulus_id).second)
        throw std::invalid_argument("duplicate stimulus id: " + r.stimulus_id);
  }
  return manifest;
}

void merge_dmos(DatasetManifest& manifest,
                const std::map<std::string, double>& dmos_by_stimulus) {
  std::map<std::string, ManifestRecord*> by_id;
  for (auto& r : manifest.records) by_id[r.stimulus_id] = &r;
  for (const auto& [id, dmos] : dmos_by_stimulus) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::invalid_argument("merge_dmos: unknown stimulus " + id);
    it->second->dmos = dmos;
  }
}

}  // namespace panoqa
