#pragma once

#include "acdkit/eval.hpp"
#include "acdkit/features.hpp"
#include "acdkit/hacd.hpp"
#include "acdkit/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace acdkit {

enum class Detector { Diff, Hacd, PatchHacd, GlcmHacd };

std::string_view to_string(Detector d);
/// Accepts diff, hacd, patch-hacd, glcm-hacd. Throws BadConfig.
Detector parse_detector(std::string_view name);

struct PipelineConfig {
  std::vector<Detector> detectors{Detector::Hacd};
  int patch = kDefaultPatch;
  int glcm_levels = kDefaultGlcmLevels;
  std::vector<Offset> glcm_offsets = default_glcm_offsets();
  Ridge ridge;
  double roc_fpr_max = kDefaultFprMax;

  /// Synthesize inputs from a suite scene instead of reading t0/t1/masks.
  std::optional<std::string> scene;
  std::optional<std::uint64_t> seed;

  std::filesystem::path t0;
  std::filesystem::path t1;
  std::optional<std::filesystem::path> inner;
  std::optional<std::filesystem::path> outer;
  std::filesystem::path out = ".";
};

/// Relative paths in the document are resolved against `base_dir`.
/// Unknown keys are rejected. Throws BadConfig.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir = {});

/// Parses "dy,dx;dy,dx;...". Throws BadOffset.
std::vector<Offset> parse_offsets(std::string_view text);

struct Detection {
  AnomalyMap map;
  std::optional<HacdModel> model;
};

Detection run_detector(Detector detector, const CoregisteredPair& pair,
                       const PipelineConfig& cfg);

}  // namespace acdkit
