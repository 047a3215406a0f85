#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "panoqa/artifacts.hpp"
#include "panoqa/dataset.hpp"
#include "panoqa/metrics.hpp"
#include "panoqa/sphere.hpp"
#include "panoqa/subjective.hpp"
#include "panoqa/training.hpp"
#include "panoqa/wavelet.hpp"

namespace py = pybind11;
using namespace panoqa;

namespace {

using DoubleArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

RasterImage array_to_image(const DoubleArray& a,
                           Projection projection = Projection::None) {
  const auto buf = a.request();
  if (buf.ndim == 2) {
    RasterImage img = make_image(static_cast<int>(buf.shape[1]),
                                 static_cast<int>(buf.shape[0]), 1, 0.0,
                                 projection);
    std::copy(static_cast<const double*>(buf.ptr),
              static_cast<const double*>(buf.ptr) + img.plane_size(),
              img.data.begin());
    return img;
  }
  if (buf.ndim == 3 && buf.shape[2] == 3) {
    RasterImage img = make_image(static_cast<int>(buf.shape[1]),
                                 static_cast<int>(buf.shape[0]), 3, 0.0,
                                 projection);
    const double* p = static_cast<const double*>(buf.ptr);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c)
          img.at(c, x, y) = p[(static_cast<std::size_t>(y) * img.width + x) * 3 + c];
    return img;
  }
  throw std::invalid_argument("expected (H,W) or (H,W,3) float array");
}

py::array image_to_array(const RasterImage& img) {
  if (img.channels == 1) {
    py::array_t<double> out({img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), out.mutable_data());
    return out;
  }
  py::array_t<double> out({img.height, img.width, 3});
  double* p = out.mutable_data();
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        p[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] =
            img.at(c, x, y);
  return out;
}

std::vector<double> to_vector(const DoubleArray& a) {
  const auto buf = a.request();
  if (buf.ndim != 1) throw std::invalid_argument("expected a 1-D array");
  const double* p = static_cast<const double*>(buf.ptr);
  return std::vector<double>(p, p + buf.shape[0]);
}

ScoreSeries to_series(const DoubleArray& objective, const DoubleArray& dmos) {
  const auto x = to_vector(objective);
  const auto y = to_vector(dmos);
  if (x.size() != y.size())
    throw std::invalid_argument("objective and dmos lengths differ");
  ScoreSeries s(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = {x[i], y[i]};
  return s;
}

py::dict logistic_dict(const LogisticParams& p) {
  py::dict d;
  d["b1"] = p.b1;
  d["b2"] = p.b2;
  d["b3"] = p.b3;
  d["b4"] = p.b4;
  d["converged"] = p.converged;
  d["iterations"] = p.iterations;
  return d;
}

py::dict report_dict(const CorrelationReport& r) {
  py::dict d;
  d["plcc"] = r.plcc;
  d["srocc"] = r.srocc;
  d["krocc"] = r.krocc;
  d["rmse"] = r.rmse;
  d["mae"] = r.mae;
  d["n"] = r.n_used;
  d["excluded"] = r.n_excluded;
  d["logistic"] = logistic_dict(r.logistic);
  return d;
}

py::dict subband_dict(const SubbandSet& s) {
  auto plane = [&](const std::vector<double>& v) {
    RasterImage img = make_image(s.width, s.height, s.channels);
    img.data = v;
    return image_to_array(img);
  };
  py::dict d;
  d["ll"] = plane(s.ll);
  d["lh"] = plane(s.lh);
  d["hl"] = plane(s.hl);
  d["hh"] = plane(s.hh);
  d["level"] = s.level;
  return d;
}

}  // namespace

PYBIND11_MODULE(_panoqa, m) {
  m.doc() = "no-reference perceptual quality toolkit for omnidirectional images";

  // -- image I/O and patches
  m.def(
      "load_image",
      [](const std::filesystem::path& path, const std::string& projection) {
        return image_to_array(load_image(path, projection_from_string(projection)));
      },
      py::arg("path"), py::arg("projection") = "NONE");
  m.def(
      "save_png",
      [](const DoubleArray& image, const std::filesystem::path& path) {
        save_png(array_to_image(image), path);
      },
      py::arg("image"), py::arg("path"));
  m.def(
      "jpeg_roundtrip",
      [](const DoubleArray& image, int quality_factor) {
        return image_to_array(jpeg_roundtrip(array_to_image(image), quality_factor));
      },
      py::arg("image"), py::arg("quality_factor"),
      "Encode-decode through the JPEG codec at the given quality factor.");
  m.def(
      "extract_patches",
      [](const DoubleArray& image, int size, int count, std::uint64_t seed,
         const std::string& mode) {
        const PatchMode pm = mode == "TILE_ALL" ? PatchMode::TileAll
                                                : PatchMode::RandomNonOverlap;
        py::list out;
        for (const auto& p : extract_patches(array_to_image(image), size, count,
                                             seed, pm))
          out.append(py::make_tuple(image_to_array(p.image),
                                    py::make_tuple(p.origin.x, p.origin.y)));
        return out;
      },
      py::arg("image"), py::arg("size"), py::arg("count") = 0,
      py::arg("seed") = 0, py::arg("mode") = "TILE_ALL");

  // -- wavelet
  m.def(
      "dwt2",
      [](const DoubleArray& image, int levels) {
        py::list out;
        for (const auto& s : dwt2(array_to_image(image), levels))
          out.append(subband_dict(s));
        return out;
      },
      py::arg("image"), py::arg("levels") = 1,
      "Orthonormal Haar analysis; one {ll,lh,hl,hh} dict per level.");
  m.def(
      "iwt2",
      [](const DoubleArray& ll, const DoubleArray& lh, const DoubleArray& hl,
         const DoubleArray& hh) {
        const RasterImage a = array_to_image(ll);
        SubbandSet s;
        s.width = a.width;
        s.height = a.height;
        s.channels = a.channels;
        s.ll = a.data;
        s.lh = array_to_image(lh).data;
        s.hl = array_to_image(hl).data;
        s.hh = array_to_image(hh).data;
        return image_to_array(iwt2(s));
      },
      py::arg("ll"), py::arg("lh"), py::arg("hl"), py::arg("hh"));
  m.def(
      "energy_loss_report",
      [](const py::list& pairs, int levels) {
        std::vector<EnergyPair> eps;
        for (const auto& item : pairs) {
          const auto tup = item.cast<py::tuple>();
          eps.push_back({array_to_image(tup[0].cast<DoubleArray>()),
                         array_to_image(tup[1].cast<DoubleArray>()),
                         tup[2].cast<int>()});
        }
        const auto rep = energy_loss_report(eps, levels);
        py::dict out;
        for (std::size_t i = 0; i < rep.quality_factors.size(); ++i) {
          py::dict per_band;
          for (int b = 0; b < 4; ++b)
            per_band[kSubbandNames[b]] =
                rep.loss_percent[b][i]
                    ? py::cast(*rep.loss_percent[b][i])
                    : py::none().cast<py::object>();
          out[py::int_(rep.quality_factors[i])] = per_band;
        }
        return out;
      },
      py::arg("pairs"), py::arg("levels") = 2,
      "pairs: list of (reference, impaired, quality_factor).");

  // -- spherical machinery
  m.def(
      "reproject",
      [](const DoubleArray& image, const std::string& src, const std::string& dst,
         int width, int height) {
        const auto out = reproject(
            array_to_image(image, projection_from_string(src)),
            projection_from_string(dst), width, height);
        py::array_t<std::uint8_t> mask({out.image.height, out.image.width});
        std::copy(out.valid.begin(), out.valid.end(), mask.mutable_data());
        return py::make_tuple(image_to_array(out.image), mask);
      },
      py::arg("image"), py::arg("src"), py::arg("dst"), py::arg("width"),
      py::arg("height"));
  m.def(
      "fibonacci_grid",
      [](std::size_t n) {
        const auto grid = uniform_sphere_samples(n);
        py::array_t<double> out({static_cast<py::ssize_t>(n), py::ssize_t(2)});
        double* p = out.mutable_data();
        for (std::size_t i = 0; i < n; ++i) {
          p[2 * i] = grid.points[i].lat;
          p[2 * i + 1] = grid.points[i].lon;
        }
        return out;
      },
      py::arg("n"), "Spherical Fibonacci lattice as (n,2) [lat, lon] radians.");

  // -- metrics
  m.def(
      "psnr",
      [](const DoubleArray& ref, const DoubleArray& dist) {
        return psnr(array_to_image(ref), array_to_image(dist));
      },
      py::arg("ref"), py::arg("dist"));
  m.def(
      "ssim",
      [](const DoubleArray& ref, const DoubleArray& dist) {
        return ssim(array_to_image(ref), array_to_image(dist));
      },
      py::arg("ref"), py::arg("dist"));
  m.def(
      "s_psnr",
      [](const DoubleArray& ref, const DoubleArray& dist, std::size_t points) {
        return s_psnr(array_to_image(ref, Projection::Erp),
                      array_to_image(dist, Projection::Erp),
                      uniform_sphere_samples(points));
      },
      py::arg("ref"), py::arg("dist"), py::arg("points") = 65536);
  m.def(
      "cpp_psnr",
      [](const DoubleArray& ref, const DoubleArray& dist) {
        return cpp_psnr(array_to_image(ref, Projection::Erp),
                        array_to_image(dist, Projection::Erp));
      },
      py::arg("ref"), py::arg("dist"));
  m.def(
      "fit_logistic",
      [](const DoubleArray& objective, const DoubleArray& dmos) {
        return logistic_dict(fit_logistic(to_series(objective, dmos)));
      },
      py::arg("objective"), py::arg("dmos"));
  m.def(
      "correlation_report",
      [](const DoubleArray& objective, const DoubleArray& dmos,
         const std::string& name) {
        return report_dict(correlation_report(to_series(objective, dmos), name));
      },
      py::arg("objective"), py::arg("dmos"), py::arg("name") = "scores");

  // -- subjective scores
  m.def(
      "compute_dmos",
      [](const std::vector<std::tuple<std::string, std::string, double>>& records,
         const std::map<std::string, std::string>& ref_map) {
        std::vector<SubjectiveRecord> rs;
        for (const auto& [subj, stim, score] : records)
          rs.push_back({subj, stim, score});
        const auto table = compute_dmos(rs, ref_map);
        py::dict out;
        for (const auto& [id, e] : table.per_stimulus) {
          py::dict d;
          d["mos"] = e.mos;
          d["dmos"] = e.dmos;
          d["n_subjects"] = e.n_subjects;
          d["is_reference"] = e.is_reference;
          out[py::str(id)] = d;
        }
        return out;
      },
      py::arg("records"), py::arg("ref_map"),
      "records: (subject_id, stimulus_id, score); ref_map: impaired -> reference.");
  m.def(
      "boxplot_stats",
      [](const DoubleArray& values) {
        const auto s = boxplot_stats(to_vector(values));
        py::dict d;
        d["median"] = s.median;
        d["q1"] = s.q1;
        d["q3"] = s.q3;
        d["whisker_low"] = s.whisker_low;
        d["whisker_high"] = s.whisker_high;
        d["outliers"] = s.outliers;
        d["n"] = s.n;
        return d;
      },
      py::arg("values"));

  // -- dataset + model pipeline
  m.def(
      "build_dataset",
      [](const std::vector<std::filesystem::path>& sources,
         const std::filesystem::path& out_dir, double split_ratio,
         std::uint64_t seed) {
        const auto manifest =
            build_dataset(sources, default_impairments(), split_ratio, seed,
                          out_dir);
        save_manifest(manifest, out_dir / "manifest.json");
        return (out_dir / "manifest.json").string();
      },
      py::arg("sources"), py::arg("out_dir"), py::arg("split_ratio") = 5.0 / 6.0,
      py::arg("seed") = 0,
      "Writes the impaired corpus plus manifest.json; returns the manifest path.");
  m.def(
      "train_model",
      [](const std::filesystem::path& manifest_path,
         const std::filesystem::path& out_dir, const std::string& model_json,
         const std::string& train_json) {
        net::ModelConfig mc;
        net::TrainConfig tc;
        if (!model_json.empty()) net::apply_model_overrides(mc, model_json);
        if (!train_json.empty()) net::apply_train_overrides(tc, train_json);
        const auto manifest = load_manifest(manifest_path);
        const auto result = net::train(manifest, manifest_path.parent_path(),
                                       mc, tc, out_dir);
        py::dict d;
        d["checkpoint"] = result.checkpoint.string();
        d["final_epoch_loss"] = result.final_epoch_total;
        d["steps"] = static_cast<int>(result.log.size());
        return d;
      },
      py::arg("manifest"), py::arg("out_dir"), py::arg("model_json") = "",
      py::arg("train_json") = "");
  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& checkpoint,
         const std::filesystem::path& manifest_path) {
        const auto manifest = load_manifest(manifest_path);
        const auto eval =
            net::evaluate(checkpoint, manifest, manifest_path.parent_path());
        py::dict d = report_dict(eval.report);
        py::list scores;
        for (const auto& s : eval.stimulus_scores)
          scores.append(py::make_tuple(s.stimulus_id, s.score, s.dmos));
        d["stimulus_scores"] = scores;
        return d;
      },
      py::arg("checkpoint"), py::arg("manifest"));

#ifdef PANOQA_VERSION
  m.attr("__version__") = PANOQA_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
