#include "acdkit/pipeline.hpp"

#include "acdkit/error.hpp"

#include <charconv>
#include <set>

namespace acdkit {

std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::Diff: return "diff";
    case Detector::Hacd: return "hacd";
    case Detector::PatchHacd: return "patch-hacd";
    case Detector::GlcmHacd: return "glcm-hacd";
  }
  return "unknown";
}

Detector parse_detector(std::string_view name) {
  for (auto d : {Detector::Diff, Detector::Hacd, Detector::PatchHacd, Detector::GlcmHacd}) {
    if (name == to_string(d)) return d;
  }
  throw Error(ErrorKind::BadConfig, "unknown detector '" + std::string(name) + "'");
}

std::vector<Offset> parse_offsets(std::string_view text) {
  std::vector<Offset> out;
  auto fail = [&] {
    throw Error(ErrorKind::BadOffset, "cannot parse offsets '" + std::string(text) +
                                          "' (expected dy,dx;dy,dx;...)");
  };
  while (!text.empty()) {
    const auto semi = text.find(';');
    const auto item = text.substr(0, semi);
    const auto comma = item.find(',');
    if (comma == std::string_view::npos) fail();
    Offset o;
    const auto a = item.substr(0, comma);
    const auto b = item.substr(comma + 1);
    if (std::from_chars(a.data(), a.data() + a.size(), o.dy).ptr != a.data() + a.size() ||
        std::from_chars(b.data(), b.data() + b.size(), o.dx).ptr != b.data() + b.size()) {
      fail();
    }
    out.push_back(o);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
  }
  if (out.empty()) fail();
  return out;
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::BadConfig, "config must be a JSON object");
  static const std::set<std::string> known = {
      "detector", "detectors", "patch", "glcm_levels", "glcm_offsets", "ridge", "ridge_mode",
      "roc_fpr_max", "scene", "seed", "t0", "t1", "inner", "outer", "out"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown config key '" + key + "'");
  }

  PipelineConfig cfg;
  auto path = [&](const char* key) {
    std::filesystem::path p = doc.at(key).get<std::string>();
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  try {
    if (doc.contains("detector")) {
      cfg.detectors = {parse_detector(doc.at("detector").get<std::string>())};
    }
    if (doc.contains("detectors")) {
      cfg.detectors.clear();
      for (const auto& d : doc.at("detectors")) {
        cfg.detectors.push_back(parse_detector(d.get<std::string>()));
      }
      if (cfg.detectors.empty()) throw Error(ErrorKind::BadConfig, "no detectors listed");
    }
    if (doc.contains("patch")) cfg.patch = doc.at("patch").get<int>();
    if (doc.contains("glcm_levels")) cfg.glcm_levels = doc.at("glcm_levels").get<int>();
    if (doc.contains("glcm_offsets")) {
      cfg.glcm_offsets.clear();
      for (const auto& o : doc.at("glcm_offsets")) {
        cfg.glcm_offsets.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
      }
    }
    if (doc.contains("ridge")) cfg.ridge.value = doc.at("ridge").get<double>();
    if (doc.contains("ridge_mode")) {
      const auto mode = doc.at("ridge_mode").get<std::string>();
      if (mode == "trace-scaled") {
        cfg.ridge.mode = Ridge::Mode::TraceScaled;
      } else if (mode == "absolute") {
        cfg.ridge.mode = Ridge::Mode::Absolute;
      } else {
        throw Error(ErrorKind::BadConfig, "ridge_mode must be trace-scaled or absolute");
      }
    }
    if (doc.contains("roc_fpr_max")) cfg.roc_fpr_max = doc.at("roc_fpr_max").get<double>();
    if (doc.contains("scene")) cfg.scene = doc.at("scene").get<std::string>();
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("t0")) cfg.t0 = path("t0");
    if (doc.contains("t1")) cfg.t1 = path("t1");
    if (doc.contains("inner")) cfg.inner = path("inner");
    if (doc.contains("outer")) cfg.outer = path("outer");
    if (doc.contains("out")) cfg.out = path("out");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("config: ") + e.what());
  }
  return cfg;
}

Detection run_detector(Detector detector, const CoregisteredPair& pair,
                       const PipelineConfig& cfg) {
  switch (detector) {
    case Detector::Diff:
      return {diff_score(pair), std::nullopt};
    case Detector::Hacd: {
      const auto x = identity_features(pair.t0);
      const auto y = identity_features(pair.t1);
      auto model = fit_hacd(x, y, cfg.ridge);
      auto map = score_map(model, x, y);
      return {std::move(map), std::move(model)};
    }
    case Detector::PatchHacd: {
      const auto x = patch_features(pair.t0, cfg.patch);
      const auto y = patch_features(pair.t1, cfg.patch);
      auto model = fit_hacd(x, y, cfg.ridge);
      auto map = score_map(model, x, y);
      return {std::move(map), std::move(model)};
    }
    case Detector::GlcmHacd: {
      const auto x = glcm_features(quantize(pair.t0, cfg.glcm_levels), cfg.patch, cfg.glcm_offsets);
      const auto y = glcm_features(quantize(pair.t1, cfg.glcm_levels), cfg.patch, cfg.glcm_offsets);
      auto model = fit_hacd(x, y, cfg.ridge);
      auto map = score_map(model, x, y);
      return {std::move(map), std::move(model)};
    }
  }
  throw Error(ErrorKind::BadConfig, "unknown detector");
}

}  // namespace acdkit
