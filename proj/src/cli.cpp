#include "acdkit/cli.hpp"

#include "acdkit/error.hpp"
#include "acdkit/eval.hpp"
#include "acdkit/pipeline.hpp"
#include "acdkit/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace acdkit {

namespace fs = std::filesystem;

namespace {

/// Command-line overrides; unset fields keep the config/default value.
struct Overrides {
  std::optional<std::string> detector;
  std::optional<int> patch;
  std::optional<int> levels;
  std::optional<std::string> offsets;
  std::optional<double> ridge;
  std::optional<double> fpr_max;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

void add_override_flags(CLI::App& app, Overrides& o) {
  app.add_option("--detector", o.detector,
                 "diff, hacd, patch-hacd or glcm-hacd (comma-separated for run)");
  app.add_option("--patch", o.patch, "odd patch side length (default 11)");
  app.add_option("--levels", o.levels, "GLCM gray levels (default 8)");
  app.add_option("--offsets", o.offsets, "GLCM offsets as dy,dx;dy,dx;... ");
  app.add_option("--ridge", o.ridge, "ridge factor (trace-scaled unless ridge_mode=absolute)");
  app.add_option("--fpr-max", o.fpr_max, "upper FPR for partial AUC (default 0.01)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "scene seed override");
}

void apply(const Overrides& o, PipelineConfig& cfg) {
  if (o.detector) {
    cfg.detectors.clear();
    std::stringstream ss(*o.detector);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.detectors.push_back(parse_detector(item));
    if (cfg.detectors.empty()) throw Error(ErrorKind::BadConfig, "no detector given");
  }
  if (o.patch) cfg.patch = *o.patch;
  if (o.levels) cfg.glcm_levels = *o.levels;
  if (o.offsets) cfg.glcm_offsets = parse_offsets(*o.offsets);
  if (o.ridge) cfg.ridge.value = *o.ridge;
  if (o.fpr_max) cfg.roc_fpr_max = *o.fpr_max;
  if (o.out) cfg.out = *o.out;
  if (o.seed) cfg.seed = *o.seed;
}

nlohmann::json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorKind::NotFound, path.string());
  std::ifstream in(path);
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::BadConfig, path.string() + ": invalid JSON");
  return doc;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

PipelineConfig load_config(const std::optional<std::string>& path) {
  if (!path) return {};
  const fs::path p = *path;
  return pipeline_config_from_json(read_json(p), p.parent_path());
}

void write_scene(const Scene& scene, const SceneConfig& cfg, const fs::path& dir) {
  ensure_dir(dir);
  save_raster(scene.t0, dir / "t0");
  save_raster(scene.t1, dir / "t1");
  save_mask(scene.truth.inner(), dir / "inner");
  save_mask(scene.truth.outer(), dir / "outer");
  write_text(dir / "scene.json", to_json(cfg).dump(1) + "\n");
}

/// Generates the configured suite scene under <out>/scene and points the
/// input paths at it.
void materialize_scene(PipelineConfig& cfg) {
  if (!cfg.scene) return;
  auto scene_cfg = suite_scene(*cfg.scene);
  if (cfg.seed) scene_cfg.seed = *cfg.seed;
  const auto dir = cfg.out / "scene";
  write_scene(generate_scene(scene_cfg), scene_cfg, dir);
  cfg.t0 = dir / "t0";
  cfg.t1 = dir / "t1";
  cfg.inner = dir / "inner";
  cfg.outer = dir / "outer";
}

CoregisteredPair load_pair(const PipelineConfig& cfg) {
  if (cfg.t0.empty() || cfg.t1.empty()) {
    throw Error(ErrorKind::BadConfig, "both t0 and t1 inputs are required");
  }
  return make_pair(load_raster(cfg.t0), load_raster(cfg.t1));
}

void detect_into(Detector detector, const CoregisteredPair& pair, const PipelineConfig& cfg,
                 const fs::path& dir) {
  ensure_dir(dir);
  const auto result = run_detector(detector, pair, cfg);
  save_raster(to_raster(result.map), dir / "anomaly");
  if (result.model) save_model(*result.model, dir / "model.json");
}

/// Evaluates the persisted map so in-process runs match detect + eval.
RocBand eval_into(const fs::path& map_path, const fs::path& inner,
                  const std::optional<fs::path>& outer, double fpr_max, const std::string& name,
                  const fs::path& dir) {
  ensure_dir(dir);
  const auto map = anomaly_map_from_raster(load_raster(map_path));
  const auto truth = load_ground_truth(inner, outer, map.grid);
  const auto band = roc(map, truth, fpr_max);
  write_roc_csv(band, dir / "roc.csv");
  write_loglog_svg({{name, band}}, dir / "roc.svg");
  nlohmann::ordered_json summary = {{"pauc_inner", band.pauc_inner},
                                    {"pauc_outer", band.pauc_outer},
                                    {"auc_inner", band.auc_inner},
                                    {"auc_outer", band.auc_outer},
                                    {"n_pos_inner", band.n_pos_inner},
                                    {"n_pos_outer", band.n_pos_outer},
                                    {"n_neg", band.n_neg},
                                    {"fpr_max", band.fpr_max}};
  write_text(dir / "summary.json", summary.dump(1) + "\n");
  return band;
}

int cmd_detect(const std::optional<std::string>& config, const Overrides& o,
               const std::optional<std::string>& t0, const std::optional<std::string>& t1,
               std::ostream& out) {
  auto cfg = load_config(config);
  apply(o, cfg);
  if (t0) cfg.t0 = *t0;
  if (t1) cfg.t1 = *t1;
  if (cfg.detectors.size() != 1) {
    throw Error(ErrorKind::BadConfig, "detect takes exactly one detector");
  }
  materialize_scene(cfg);
  const auto pair = load_pair(cfg);
  detect_into(cfg.detectors.front(), pair, cfg, cfg.out);
  out << "wrote " << (cfg.out / "anomaly.r32").string() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& map_path, const std::optional<std::string>& inner,
             const std::optional<std::string>& outer, const Overrides& o, std::ostream& out) {
  if (!inner) throw Error(ErrorKind::BadConfig, "--inner mask path is required");
  const fs::path dir = o.out.value_or(".");
  const double fpr_max = o.fpr_max.value_or(kDefaultFprMax);
  std::optional<fs::path> outer_path;
  if (outer) outer_path = *outer;
  const auto band = eval_into(map_path, *inner, outer_path, fpr_max,
                              fs::path(map_path).stem().string(), dir);
  out << "pauc_inner=" << format_double(band.pauc_inner)
      << " pauc_outer=" << format_double(band.pauc_outer) << '\n';
  return kExitOk;
}

int cmd_synth(const std::string& what, const Overrides& o, std::ostream& out) {
  SceneConfig cfg;
  if (what.ends_with(".json") || fs::exists(what)) {
    cfg = scene_config_from_json(read_json(what));
  } else {
    cfg = suite_scene(what);
  }
  if (o.seed) cfg.seed = *o.seed;
  const fs::path dir = o.out.value_or(".");
  write_scene(generate_scene(cfg), cfg, dir);
  out << "wrote scene to " << dir.string() << '\n';
  return kExitOk;
}

int cmd_run(const std::string& config, const Overrides& o, std::ostream& out) {
  auto cfg = load_config(config);
  apply(o, cfg);
  ensure_dir(cfg.out);
  materialize_scene(cfg);
  if (!cfg.inner) throw Error(ErrorKind::BadConfig, "run needs an inner mask (or a scene)");
  const auto pair = load_pair(cfg);

  std::vector<NamedBand> bands;
  for (const auto detector : cfg.detectors) {
    const std::string name(to_string(detector));
    const auto dir = cfg.out / name;
    try {
      detect_into(detector, pair, cfg, dir);
      bands.push_back(
          {name, eval_into(dir / "anomaly", *cfg.inner, cfg.outer, cfg.roc_fpr_max, name, dir)});
    } catch (const Error& e) {
      throw Error(e.kind(), "detector " + name + ": " + e.message());
    }
  }
  write_loglog_svg(bands, cfg.out / "roc.svg");

  std::vector<std::size_t> order(bands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return bands[a].band.pauc_inner > bands[b].band.pauc_inner;
  });
  std::ostringstream league;
  league << "rank,detector,pauc_inner,pauc_outer,auc_inner,auc_outer\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto& nb = bands[order[r]];
    league << r + 1 << ',' << nb.name << ',' << format_double(nb.band.pauc_inner) << ','
           << format_double(nb.band.pauc_outer) << ',' << format_double(nb.band.auc_inner) << ','
           << format_double(nb.band.auc_outer) << '\n';
  }
  write_text(cfg.out / "league.csv", league.str());
  out << league.str();
  return kExitOk;
}

/// Plain-text dump: "R32TXT <width> <height>" then one line per image row.
int cmd_convert(const std::string& in, const std::string& dst, std::ostream& out) {
  if (fs::path(in).extension() == ".txt") {
    std::ifstream file(in);
    if (!file) throw Error(ErrorKind::NotFound, in);
    std::string magic;
    Eigen::Index w = 0, h = 0;
    if (!(file >> magic >> w >> h) || magic != "R32TXT" || w < 1 || h < 1) {
      throw Error(ErrorKind::FormatError, in + ": bad text header");
    }
    std::vector<float> data(static_cast<std::size_t>(w * h));
    for (auto& v : data) {
      std::string token;
      if (!(file >> token)) throw Error(ErrorKind::FormatError, in + ": too few values");
      const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size() || !std::isfinite(v)) {
        throw Error(ErrorKind::FormatError, in + ": bad value '" + token + "'");
      }
    }
    std::string extra;
    if (file >> extra) throw Error(ErrorKind::FormatError, in + ": too many values");
    save_raster(Raster(w, h, data), dst);
  } else {
    const auto r = load_raster(in);
    std::ostringstream text;
    text << "R32TXT " << r.width() << ' ' << r.height() << '\n';
    for (Eigen::Index row = 0; row < r.height(); ++row) {
      for (Eigen::Index col = 0; col < r.width(); ++col) {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof(buf), r(row, col));
        text << (col ? " " : "") << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      }
      text << '\n';
    }
    write_text(dst, text.str());
  }
  out << "wrote " << dst << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anomalous change detection toolkit"};
  app.require_subcommand(1);

  Overrides detect_o, eval_o, synth_o, run_o;
  std::optional<std::string> detect_config, detect_t0, detect_t1;
  auto* detect = app.add_subcommand("detect", "score a co-registered image pair");
  detect->add_option("--config", detect_config, "pipeline config JSON");
  detect->add_option("--t0", detect_t0, "earlier image (R32)");
  detect->add_option("--t1", detect_t1, "later image (R32)");
  add_override_flags(*detect, detect_o);

  std::string eval_map;
  std::optional<std::string> eval_inner, eval_outer;
  auto* eval = app.add_subcommand("eval", "ROC band of an anomaly map");
  eval->add_option("map", eval_map, "anomaly map (R32)")->required();
  eval->add_option("--inner", eval_inner, "inner truth mask (R32)");
  eval->add_option("--outer", eval_outer, "outer truth mask (R32); defaults to inner");
  eval->add_option("--out", eval_o.out, "output directory");
  eval->add_option("--fpr-max", eval_o.fpr_max, "upper FPR for partial AUC");

  std::string synth_what;
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("scene", synth_what, "suite scene name or scene config JSON")->required();
  synth->add_option("--out", synth_o.out, "output directory");
  synth->add_option("--seed", synth_o.seed, "seed override");

  std::string run_config;
  auto* run = app.add_subcommand("run", "detect + eval for every configured detector");
  run->add_option("config", run_config, "pipeline config JSON")->required();
  add_override_flags(*run, run_o);

  std::string convert_in, convert_out;
  auto* convert = app.add_subcommand("convert", "R32 <-> plain-text pixel dump (.txt)");
  convert->add_option("input", convert_in)->required();
  convert->add_option("output", convert_out)->required();

  std::vector<std::string> argv_store{"acdkit"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUserError;
  }

  try {
    if (*detect) return cmd_detect(detect_config, detect_o, detect_t0, detect_t1, out);
    if (*eval) return cmd_eval(eval_map, eval_inner, eval_outer, eval_o, out);
    if (*synth) return cmd_synth(synth_what, synth_o, out);
    if (*run) return cmd_run(run_config, run_o, out);
    if (*convert) return cmd_convert(convert_in, convert_out, out);
  } catch (const Error& e) {
    err << "acdkit: " << e.what() << '\n';
    return kExitUserError;
  } catch (const std::exception& e) {
    err << "acdkit: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace acdkit
