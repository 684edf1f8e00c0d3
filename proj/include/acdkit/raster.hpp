#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace acdkit {

/// Row-major image grid. Rows are image lines (height), columns are samples.
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ImageF = Image<float>;
using Mask = Image<bool>;

struct Dims {
  Eigen::Index width = 0;
  Eigen::Index height = 0;

  Eigen::Index pixels() const { return width * height; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Single-band 32-bit intensity image.
class Raster {
 public:
  Raster(Eigen::Index width, Eigen::Index height);
  Raster(Eigen::Index width, Eigen::Index height, std::span<const float> data);
  explicit Raster(ImageF pixels);

  Eigen::Index width() const { return pixels_.cols(); }
  Eigen::Index height() const { return pixels_.rows(); }
  Dims dims() const { return {width(), height()}; }

  float operator()(Eigen::Index row, Eigen::Index col) const { return pixels_(row, col); }
  const ImageF& pixels() const { return pixels_; }
  std::span<const float> data() const {
    return {pixels_.data(), static_cast<std::size_t>(pixels_.size())};
  }

  /// Bitwise equality on dimensions and payload.
  bool identical(const Raster& other) const;

 private:
  ImageF pixels_;
};

struct CoregisteredPair {
  Raster t0;
  Raster t1;
};

/// Throws DimensionMismatch unless a and b share a grid.
CoregisteredPair make_pair(Raster a, Raster b);

/// Dual ground-truth masks: inner lies entirely within the target, outer
/// contains all of it. inner must be a subset of outer.
class GroundTruth {
 public:
  GroundTruth(Mask inner, Mask outer);

  const Mask& inner() const { return inner_; }
  const Mask& outer() const { return outer_; }
  Dims dims() const { return {inner_.cols(), inner_.rows()}; }

 private:
  Mask inner_;
  Mask outer_;
};

// R32 I/O. `path` may name the header (.json), the payload (.r32) or the
// common stem; both files live next to each other.
std::filesystem::path r32_header_path(const std::filesystem::path& path);
std::filesystem::path r32_payload_path(const std::filesystem::path& path);

Raster load_raster(const std::filesystem::path& path);
void save_raster(const Raster& raster, const std::filesystem::path& path);

/// Converts a 0/1 raster into a mask; any other value is a FormatError.
Mask mask_from_raster(const Raster& raster);
Raster raster_from_mask(const Mask& mask);

Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

/// Loads and validates a mask pair on `grid`. Without an outer path the
/// inner mask is used for both.
GroundTruth load_ground_truth(const std::filesystem::path& inner_path,
                              const std::optional<std::filesystem::path>& outer_path,
                              const Dims& grid);

}  // namespace acdkit
