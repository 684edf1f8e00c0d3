#include "acdkit/synth.hpp"

#include "acdkit/error.hpp"
#include "acdkit/features.hpp"
#include "acdkit/rng.hpp"

#include <cmath>

namespace acdkit {

namespace {

bool inside(const Rect& r, const Dims& grid) {
  return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 && r.x + r.w <= grid.width &&
         r.y + r.h <= grid.height;
}

bool contains(const Rect& r, Eigen::Index row, Eigen::Index col) {
  return col >= r.x && col < r.x + r.w && row >= r.y && row < r.y + r.h;
}

std::uint64_t stream(SceneStream s) { return static_cast<std::uint64_t>(s); }

/// Sum over the (2r+1)^2 mirror-padded window divided by 2r+1: unit variance
/// for white unit-variance input away from the borders.
Image<double> box_filter(const Image<double>& in, Eigen::Index radius) {
  if (radius == 0) return in;
  const auto h = in.rows();
  const auto w = in.cols();
  Image<double> rows(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double s = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) s += in(r, mirror_index(c + k, w));
      rows(r, c) = s;
    }
  }
  Image<double> out(h, w);
  const double scale = 1.0 / static_cast<double>(2 * radius + 1);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double s = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) s += rows(mirror_index(r + k, h), c);
      out(r, c) = s * scale;
    }
  }
  return out;
}

}  // namespace

void validate(const SceneConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::BadConfig, msg); };
  if (cfg.width < 1 || cfg.height < 1) fail("width and height must be >= 1");
  const Dims grid{cfg.width, cfg.height};
  if (!inside(cfg.anomaly_rect, grid)) fail("anomaly_rect lies outside the grid");
  if (cfg.background_corr_len < 0) fail("background_corr_len must be >= 0");
  if (cfg.background_corr_len >= std::min(cfg.width, cfg.height)) {
    fail("background_corr_len must be smaller than the grid");
  }
  if (!(cfg.pervasive_gain > 0.0)) fail("pervasive_gain must be > 0");
  if (!(cfg.anomaly_texture_gain >= 0.0)) fail("anomaly_texture_gain must be >= 0");
  if (!(cfg.noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  for (double v : {cfg.background_level, cfg.background_amplitude, cfg.pervasive_offset,
                   cfg.anomaly_offset, cfg.noise_sigma, cfg.pervasive_gain,
                   cfg.anomaly_texture_gain}) {
    if (!std::isfinite(v)) fail("non-finite parameter");
  }
  for (const auto& p : cfg.pervasive_patches) {
    if (!inside(p.rect, grid)) fail("pervasive patch lies outside the grid");
    if (!(p.gain > 0.0) || !std::isfinite(p.offset)) fail("pervasive patch gain must be > 0");
  }
}

GroundTruth rect_ground_truth(const Rect& rect, const Dims& grid, Eigen::Index band) {
  Mask inner = Mask::Zero(grid.height, grid.width);
  Mask outer = Mask::Zero(grid.height, grid.width);
  const Eigen::Index iw = rect.w - 2 * band, ih = rect.h - 2 * band;
  if (iw > 0 && ih > 0) inner.block(rect.y + band, rect.x + band, ih, iw).setConstant(true);
  const Eigen::Index x0 = std::max<Eigen::Index>(0, rect.x - band);
  const Eigen::Index y0 = std::max<Eigen::Index>(0, rect.y - band);
  const Eigen::Index x1 = std::min(grid.width, rect.x + rect.w + band);
  const Eigen::Index y1 = std::min(grid.height, rect.y + rect.h + band);
  outer.block(y0, x0, y1 - y0, x1 - x0).setConstant(true);
  return GroundTruth(std::move(inner), std::move(outer));
}

Scene generate_scene(const SceneConfig& cfg) {
  validate(cfg);
  const CounterRng rng(cfg.seed);
  const Eigen::Index h = cfg.height, w = cfg.width;

  Image<double> white(h, w);
  for (Eigen::Index i = 0; i < white.size(); ++i) {
    white.data()[i] = rng.normal(stream(SceneStream::Background), static_cast<std::uint64_t>(i));
  }
  const Image<double> smooth = box_filter(white, cfg.background_corr_len);

  ImageF t0(h, w);
  for (Eigen::Index i = 0; i < t0.size(); ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    double v = cfg.background_level + cfg.background_amplitude * smooth.data()[i] +
               cfg.noise_sigma * rng.normal(stream(SceneStream::Noise0), k);
    if (cfg.speckle) v *= rng.exponential(stream(SceneStream::Speckle0), k);
    t0.data()[i] = static_cast<float>(v);
  }

  const double texture = std::sqrt(std::max(
      cfg.anomaly_texture_gain * cfg.anomaly_texture_gain - 1.0, 0.0));
  ImageF t1(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      const auto k = static_cast<std::uint64_t>(r * w + c);
      double gain = cfg.pervasive_gain, offset = cfg.pervasive_offset;
      for (const auto& p : cfg.pervasive_patches) {
        if (contains(p.rect, r, c)) {
          gain = p.gain;
          offset = p.offset;
        }
      }
      double v = gain * static_cast<double>(t0(r, c)) + offset +
                 cfg.noise_sigma * rng.normal(stream(SceneStream::Noise1), k);
      if (contains(cfg.anomaly_rect, r, c)) {
        v += cfg.anomaly_offset +
             texture * cfg.noise_sigma * rng.normal(stream(SceneStream::Texture), k);
      }
      if (cfg.speckle) v *= rng.exponential(stream(SceneStream::Speckle1), k);
      t1(r, c) = static_cast<float>(v);
    }
  }

  return {Raster(std::move(t0)), Raster(std::move(t1)),
          rect_ground_truth(cfg.anomaly_rect, {w, h})};
}

std::vector<NamedScene> scene_suite() {
  SceneConfig simple;
  simple.seed = 101;
  simple.anomaly_offset = 10.0;

  SceneConfig textured;
  textured.seed = 202;
  textured.pervasive_gain = 1.2;
  textured.pervasive_offset = -10.0;
  textured.anomaly_texture_gain = 3.0;

  SceneConfig cluttered;
  cluttered.seed = 303;
  cluttered.pervasive_gain = 1.5;
  cluttered.pervasive_offset = -20.0;
  cluttered.anomaly_texture_gain = 3.0;
  cluttered.pervasive_patches = {{{40, 40, 120, 80}, 0.7, 40.0},
                                 {{340, 60, 100, 120}, 1.8, -60.0},
                                 {{60, 360, 140, 90}, 1.0, 25.0}};

  return {{"simple-additive", simple}, {"textured", textured}, {"cluttered", cluttered}};
}

SceneConfig suite_scene(std::string_view name) {
  for (auto& s : scene_suite()) {
    if (s.name == name) return s.config;
  }
  throw Error(ErrorKind::UnknownScene, "unknown scene '" + std::string(name) + "'");
}

nlohmann::json to_json(const SceneConfig& cfg) {
  auto rect = [](const Rect& r) {
    return nlohmann::ordered_json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
  };
  nlohmann::ordered_json patches = nlohmann::ordered_json::array();
  for (const auto& p : cfg.pervasive_patches) {
    patches.push_back({{"rect", rect(p.rect)}, {"gain", p.gain}, {"offset", p.offset}});
  }
  return nlohmann::ordered_json{{"width", cfg.width},
                                {"height", cfg.height},
                                {"seed", cfg.seed},
                                {"background_level", cfg.background_level},
                                {"background_amplitude", cfg.background_amplitude},
                                {"background_corr_len", cfg.background_corr_len},
                                {"noise_sigma", cfg.noise_sigma},
                                {"pervasive_gain", cfg.pervasive_gain},
                                {"pervasive_offset", cfg.pervasive_offset},
                                {"anomaly_rect", rect(cfg.anomaly_rect)},
                                {"anomaly_texture_gain", cfg.anomaly_texture_gain},
                                {"anomaly_offset", cfg.anomaly_offset},
                                {"speckle", cfg.speckle},
                                {"pervasive_patches", patches}};
}

SceneConfig scene_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::BadConfig, "scene config must be a JSON object");
  SceneConfig cfg;
  try {
    auto get = [&](const char* key, auto& field) {
      if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto get_rect = [](const nlohmann::json& j) {
      return Rect{j.at("x").get<Eigen::Index>(), j.at("y").get<Eigen::Index>(),
                  j.at("w").get<Eigen::Index>(), j.at("h").get<Eigen::Index>()};
    };
    get("width", cfg.width);
    get("height", cfg.height);
    get("seed", cfg.seed);
    get("background_level", cfg.background_level);
    get("background_amplitude", cfg.background_amplitude);
    get("background_corr_len", cfg.background_corr_len);
    get("noise_sigma", cfg.noise_sigma);
    get("pervasive_gain", cfg.pervasive_gain);
    get("pervasive_offset", cfg.pervasive_offset);
    if (doc.contains("anomaly_rect")) cfg.anomaly_rect = get_rect(doc.at("anomaly_rect"));
    get("anomaly_texture_gain", cfg.anomaly_texture_gain);
    get("anomaly_offset", cfg.anomaly_offset);
    get("speckle", cfg.speckle);
    if (doc.contains("pervasive_patches")) {
      cfg.pervasive_patches.clear();
      for (const auto& p : doc.at("pervasive_patches")) {
        cfg.pervasive_patches.push_back(
            {get_rect(p.at("rect")), p.at("gain").get<double>(), p.at("offset").get<double>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("scene config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

}  // namespace acdkit
