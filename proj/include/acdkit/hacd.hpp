#pragma once

#include "acdkit/features.hpp"
#include "acdkit/raster.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <filesystem>
#include <string>

#include <json.hpp>

namespace acdkit {

/// Per-pixel anomalousness, row-major over the grid. Higher is more anomalous.
struct AnomalyMap {
  Dims grid;
  Eigen::ArrayXd scores;
};

/// Narrows to float for R32 persistence.
Raster to_raster(const AnomalyMap& map);
AnomalyMap anomaly_map_from_raster(const Raster& raster);

/// Ridge added to the joint covariance before factorization.
struct Ridge {
  enum class Mode { TraceScaled, Absolute };

  Mode mode = Mode::TraceScaled;
  double value = 1e-6;

  static Ridge trace_scaled(double factor) { return {Mode::TraceScaled, factor}; }
  static Ridge absolute(double epsilon) { return {Mode::Absolute, epsilon}; }

  /// epsilon for a given covariance: value, or value * trace(C) / dim(C).
  double resolve(const Eigen::MatrixXd& covariance) const;
};

/// log det of a symmetric positive definite matrix from its Cholesky factor.
template <typename MatrixType>
typename MatrixType::Scalar log_det(const Eigen::LLT<MatrixType>& llt) {
  return 2 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Row-wise 1/2 z^T Q z for every row z of `rows`.
template <typename DerivedZ, typename DerivedQ>
Eigen::Array<typename DerivedZ::Scalar, Eigen::Dynamic, 1> half_quadratic_rows(
    const Eigen::MatrixBase<DerivedZ>& rows, const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedZ::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> projected =
      rows * q;
  return Scalar(0.5) * (projected.array() * rows.array()).rowwise().sum();
}

/// Joint-Gaussian model of paired features. Scores are
///   -log( p12(x, y) / (p1(x) p2(y)) ) = 1/2 z^T Q z + k,
/// with z the centred joint vector, Q = C^-1 - blockdiag(Cxx^-1, Cyy^-1)
/// and k = 1/2 (log|C| - log|Cxx| - log|Cyy|), all on the ridge-regularized
/// covariance.
class HacdModel {
 public:
  /// Builds the model from moments; `ridge` is the absolute epsilon added to
  /// the diagonal. Throws SingularCovariance if C + eps I is not positive definite.
  static HacdModel from_moments(Eigen::VectorXd mean_x, Eigen::VectorXd mean_y,
                                Eigen::MatrixXd covariance, double ridge);

  Eigen::Index dim_x() const { return mean_x_.size(); }
  Eigen::Index dim_y() const { return mean_y_.size(); }
  Eigen::Index dim() const { return dim_x() + dim_y(); }

  const Eigen::VectorXd& mean_x() const { return mean_x_; }
  const Eigen::VectorXd& mean_y() const { return mean_y_; }
  /// Sample covariance, without the ridge.
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  auto cov_xx() const { return covariance_.topLeftCorner(dim_x(), dim_x()); }
  auto cov_yy() const { return covariance_.bottomRightCorner(dim_y(), dim_y()); }
  auto cov_xy() const { return covariance_.topRightCorner(dim_x(), dim_y()); }

  const Eigen::MatrixXd& quadratic() const { return quadratic_; }
  double constant() const { return constant_; }
  double ridge() const { return ridge_; }

 private:
  HacdModel() = default;

  Eigen::VectorXd mean_x_;
  Eigen::VectorXd mean_y_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd quadratic_;
  double constant_ = 0.0;
  double ridge_ = 0.0;
};

/// Pixels per accumulation tile. Tile partials are combined in ascending
/// order, so fits are bitwise independent of the worker count.
inline constexpr Eigen::Index kTileRows = 256;

/// Sample mean and covariance (denominator N) of [x; y] over all pixels, or
/// over the pixels set in `fit_mask` when given.
HacdModel fit_hacd(const FeatureStack& x, const FeatureStack& y, const Ridge& ridge = {},
                   const Mask* fit_mask = nullptr);

double hacd_score(const HacdModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y);

AnomalyMap score_map(const HacdModel& model, const FeatureStack& x, const FeatureStack& y);

/// Image-differencing baseline: |t1 - t0| per pixel.
AnomalyMap diff_score(const CoregisteredPair& pair);

nlohmann::json to_json(const HacdModel& model);
HacdModel model_from_json(const nlohmann::json& doc);
void save_model(const HacdModel& model, const std::filesystem::path& path);
HacdModel load_model(const std::filesystem::path& path);

}  // namespace acdkit
