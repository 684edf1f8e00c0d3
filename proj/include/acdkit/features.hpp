#pragma once

#include "acdkit/raster.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace acdkit {

/// One row per pixel (row-major pixel order), one column per feature.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class FeatureStack {
 public:
  FeatureStack(Dims grid, FeatureMatrix values);

  Eigen::Index width() const { return grid_.width; }
  Eigen::Index height() const { return grid_.height; }
  Dims dims() const { return grid_; }
  Eigen::Index dim() const { return values_.cols(); }

  const FeatureMatrix& values() const { return values_; }
  auto pixel(Eigen::Index index) const { return values_.row(index); }

 private:
  Dims grid_;
  FeatureMatrix values_;
};

struct QuantizedRaster {
  Dims grid;
  int levels = 1;
  Image<std::int32_t> data;
};

/// Pixel offset (dy, dx) for co-occurrence counting.
struct Offset {
  int dy = 0;
  int dx = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

inline constexpr int kDefaultPatch = 11;
inline constexpr int kDefaultGlcmLevels = 8;

/// {(0,1), (1,0), (1,1), (1,-1)}.
std::vector<Offset> default_glcm_offsets();

/// Reflects an out-of-range index back into [0, n) without repeating the
/// edge sample (-1 -> 1, n -> n-2). Valid for offsets up to n-1.
inline Eigen::Index mirror_index(Eigen::Index i, Eigen::Index n) {
  if (n == 1) return 0;
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

FeatureStack identity_features(const Raster& raster);

/// Flattened patch x patch window centred on each pixel, mirror padded.
FeatureStack patch_features(const Raster& raster, int patch = kDefaultPatch);

/// Global equal-probability binning into `levels` gray levels.
QuantizedRaster quantize(const Raster& raster, int levels);

/// Normalized symmetric co-occurrence matrix of each mirror-padded patch,
/// summed over `offsets` and flattened row-major (dim = levels^2).
FeatureStack glcm_features(const QuantizedRaster& q, int patch = kDefaultPatch,
                           std::span<const Offset> offsets = {});

}  // namespace acdkit
