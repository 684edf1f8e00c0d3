#include "acdkit/features.hpp"

#include "acdkit/error.hpp"
#include "acdkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace acdkit {

FeatureStack::FeatureStack(Dims grid, FeatureMatrix values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.rows() != grid_.pixels() || values_.cols() < 1) {
    throw Error(ErrorKind::DimensionMismatch, "feature matrix does not match grid " +
                                                  to_string(grid_));
  }
}

std::vector<Offset> default_glcm_offsets() { return {{0, 1}, {1, 0}, {1, 1}, {1, -1}}; }

namespace {

void check_patch(int patch, const Dims& grid) {
  const auto limit = 2 * std::min(grid.width, grid.height) - 1;
  if (patch < 1 || patch % 2 == 0 || patch > limit) {
    throw Error(ErrorKind::BadPatchSize, "patch " + std::to_string(patch) +
                                             " must be odd and in [1, " + std::to_string(limit) +
                                             "] for grid " + to_string(grid));
  }
}

/// Mirror-padded copy of an image with `radius` extra samples on each side.
template <typename Scalar>
Image<Scalar> mirror_pad(const Image<Scalar>& img, Eigen::Index radius) {
  const auto h = img.rows();
  const auto w = img.cols();
  Image<Scalar> out(h + 2 * radius, w + 2 * radius);
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const auto src_r = mirror_index(r - radius, h);
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      out(r, c) = img(src_r, mirror_index(c - radius, w));
    }
  }
  return out;
}

}  // namespace

FeatureStack identity_features(const Raster& raster) {
  FeatureMatrix values = Eigen::Map<const Eigen::VectorXf>(raster.data().data(),
                                                           raster.pixels().size())
                             .cast<double>();
  return FeatureStack(raster.dims(), std::move(values));
}

FeatureStack patch_features(const Raster& raster, int patch) {
  const auto grid = raster.dims();
  check_patch(patch, grid);
  const Eigen::Index radius = patch / 2;
  const Image<double> padded = mirror_pad<double>(raster.pixels().cast<double>(), radius);

  FeatureMatrix values(grid.pixels(), static_cast<Eigen::Index>(patch) * patch);
  parallel_for(static_cast<std::size_t>(grid.height), [&](std::size_t row) {
    const auto r = static_cast<Eigen::Index>(row);
    for (Eigen::Index c = 0; c < grid.width; ++c) {
      auto dst = values.row(r * grid.width + c);
      for (Eigen::Index i = 0; i < patch; ++i) {
        dst.segment(i * patch, patch) = padded.block(r + i, c, 1, patch).matrix();
      }
    }
  });
  return FeatureStack(grid, std::move(values));
}

QuantizedRaster quantize(const Raster& raster, int levels) {
  if (levels < 1) throw Error(ErrorKind::InvalidArgument, "levels must be >= 1");
  const auto data = raster.data();
  std::vector<float> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();

  // cuts[k] is the (k/L)-quantile: the sorted value at rank floor(k*n/L).
  std::vector<float> cuts(static_cast<std::size_t>(levels));
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    cuts[k] = sorted[std::min(n - 1, k * n / static_cast<std::size_t>(levels))];
  }

  QuantizedRaster q{raster.dims(), levels, Image<std::int32_t>(raster.height(), raster.width())};
  std::int32_t* out = q.data.data();
  for (std::size_t i = 0; i < n; ++i) {
    // Last cut not above the value; coincident cuts collapse to the lowest index
    // so equal values share one level and a constant image maps to level 0.
    const auto above = std::upper_bound(cuts.begin(), cuts.end(), data[i]);
    const auto first = std::lower_bound(cuts.begin(), cuts.end(), *(above - 1));
    out[i] = static_cast<std::int32_t>(first - cuts.begin());
  }
  return q;
}

FeatureStack glcm_features(const QuantizedRaster& q, int patch, std::span<const Offset> offsets) {
  const auto grid = q.grid;
  check_patch(patch, grid);
  const auto defaults = default_glcm_offsets();
  if (offsets.empty()) offsets = defaults;
  for (const auto& o : offsets) {
    if (std::abs(o.dy) >= patch || std::abs(o.dx) >= patch) {
      throw Error(ErrorKind::BadOffset, "offset (" + std::to_string(o.dy) + "," +
                                            std::to_string(o.dx) + ") does not fit in patch " +
                                            std::to_string(patch));
    }
  }
  if (q.levels < 1 || (q.data < 0).any() || (q.data >= q.levels).any()) {
    throw Error(ErrorKind::InvalidArgument, "quantized levels out of range");
  }

  const Eigen::Index levels = q.levels;
  const Eigen::Index radius = patch / 2;
  const Image<std::int32_t> padded = mirror_pad<std::int32_t>(q.data, radius);

  // Each ordered pair is counted once per direction after symmetrization.
  std::int64_t pairs = 0;
  for (const auto& o : offsets) {
    pairs += static_cast<std::int64_t>(patch - std::abs(o.dy)) * (patch - std::abs(o.dx));
  }
  const double norm = 1.0 / static_cast<double>(2 * pairs);

  FeatureMatrix values(grid.pixels(), levels * levels);
  parallel_for(static_cast<std::size_t>(grid.height), [&](std::size_t row) {
    const auto r = static_cast<Eigen::Index>(row);
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> counts(levels,
                                                                                         levels);
    for (Eigen::Index c = 0; c < grid.width; ++c) {
      counts.setZero();
      const auto window = padded.block(r, c, patch, patch);
      for (const auto& o : offsets) {
        const int i0 = std::max(0, -o.dy), i1 = patch - std::max(0, o.dy);
        const int j0 = std::max(0, -o.dx), j1 = patch - std::max(0, o.dx);
        for (int i = i0; i < i1; ++i) {
          for (int j = j0; j < j1; ++j) {
            ++counts(window(i, j), window(i + o.dy, j + o.dx));
          }
        }
      }
      auto dst = values.row(r * grid.width + c);
      for (Eigen::Index a = 0; a < levels; ++a) {
        for (Eigen::Index b = 0; b < levels; ++b) {
          dst(a * levels + b) = static_cast<double>(counts(a, b) + counts(b, a)) * norm;
        }
      }
    }
  });
  return FeatureStack(grid, std::move(values));
}

}  // namespace acdkit
