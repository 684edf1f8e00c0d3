#pragma once

#include "acdkit/raster.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace acdkit {

struct Rect {
  Eigen::Index x = 0;
  Eigen::Index y = 0;
  Eigen::Index w = 0;
  Eigen::Index h = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Region where t1 follows its own gain/offset instead of the scene-wide one.
struct PervasivePatch {
  Rect rect;
  double gain = 1.0;
  double offset = 0.0;
  friend bool operator==(const PervasivePatch&, const PervasivePatch&) = default;
};

/// Synthetic change scene.
///
///   clean = level + amplitude * B_r(w)           (B_r: unit-variance box filter)
///   t0    = (clean + sigma * n0) * [speckle: e0]
///   t1    = (g * t0 + o + sigma * n1 + A) * [speckle: e1]
///
/// with w, n0, n1 standard normal, e0, e1 unit-mean exponential and, inside
/// the anomaly rectangle, A = offset + sqrt(max(tau^2 - 1, 0)) * sigma * n2, so
/// the high-frequency standard deviation of t1 is scaled by tau there.
struct SceneConfig {
  Eigen::Index width = 512;
  Eigen::Index height = 512;
  std::uint64_t seed = 42;
  double background_level = 100.0;
  double background_amplitude = 20.0;
  Eigen::Index background_corr_len = 3;
  double noise_sigma = 3.0;
  double pervasive_gain = 1.0;
  double pervasive_offset = 0.0;
  Rect anomaly_rect{208, 208, 96, 96};
  double anomaly_texture_gain = 1.0;
  double anomaly_offset = 0.0;
  bool speckle = false;
  std::vector<PervasivePatch> pervasive_patches;

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct Scene {
  Raster t0;
  Raster t1;
  GroundTruth truth;
};

/// Random streams, one per field.
enum class SceneStream : std::uint64_t {
  Background = 0,
  Noise0 = 1,
  Speckle0 = 2,
  Noise1 = 3,
  Speckle1 = 4,
  Texture = 5,
};

/// Throws BadConfig.
void validate(const SceneConfig& cfg);

/// Pure function of the config: same config, same bytes.
Scene generate_scene(const SceneConfig& cfg);

/// Ground truth for a rectangle: inner is eroded by `band` pixels, outer is
/// dilated by `band` (clipped to the grid).
GroundTruth rect_ground_truth(const Rect& rect, const Dims& grid, Eigen::Index band = 2);

struct NamedScene {
  std::string name;
  SceneConfig config;
};

/// The fixed benchmark scenes: simple-additive, textured, cluttered.
std::vector<NamedScene> scene_suite();

/// Throws UnknownScene.
SceneConfig suite_scene(std::string_view name);

nlohmann::json to_json(const SceneConfig& cfg);
/// Missing fields take their defaults. Throws BadConfig.
SceneConfig scene_config_from_json(const nlohmann::json& doc);

}  // namespace acdkit
