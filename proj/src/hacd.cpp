#include "acdkit/hacd.hpp"

#include "acdkit/error.hpp"
#include "acdkit/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace acdkit {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cholesky factor of an SPD matrix. Rejects failed factorizations and
/// pivots at rounding level relative to the largest diagonal entry.
Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  const double tol = 16.0 * static_cast<double>(a.rows()) *
                     std::numeric_limits<double>::epsilon() * scale;
  if (llt.info() == Eigen::Success) {
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal().array().square();
    Eigen::Index at;
    const double smallest = pivots.minCoeff(&at);
    if (smallest > tol && std::isfinite(smallest)) return llt;
    std::ostringstream msg;
    msg << what << " is numerically singular: pivot " << at << " = " << smallest
        << " (tolerance " << tol << ")";
    throw Error(ErrorKind::SingularCovariance, msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  std::ostringstream msg;
  msg << what << " is not positive definite: smallest eigenvalue "
      << eig.eigenvalues().minCoeff();
  throw Error(ErrorKind::SingularCovariance, msg.str());
}

void check_grid(const FeatureStack& x, const FeatureStack& y) {
  if (x.dims() != y.dims()) {
    throw Error(ErrorKind::GridMismatch,
                "x features on " + to_string(x.dims()) + ", y on " + to_string(y.dims()));
  }
}

/// Rows [begin, end) of the selected pixels as a joint [x y] matrix.
RowMatrix gather_tile(const FeatureStack& x, const FeatureStack& y,
                      const std::vector<Eigen::Index>* index, Eigen::Index begin,
                      Eigen::Index end) {
  const Eigen::Index n = end - begin;
  RowMatrix tile(n, x.dim() + y.dim());
  if (index == nullptr) {
    tile.leftCols(x.dim()) = x.values().middleRows(begin, n);
    tile.rightCols(y.dim()) = y.values().middleRows(begin, n);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto p = (*index)[static_cast<std::size_t>(begin + i)];
      tile.row(i).head(x.dim()) = x.values().row(p);
      tile.row(i).tail(y.dim()) = y.values().row(p);
    }
  }
  return tile;
}

/// Computes a per-tile partial for every tile and folds them in ascending
/// tile order. Partials are produced in batches so memory stays bounded.
template <typename Partial, typename Compute, typename Fold>
void tiled_reduce(Eigen::Index count, Compute compute, Fold fold) {
  const Eigen::Index tiles = (count + kTileRows - 1) / kTileRows;
  const auto batch = static_cast<Eigen::Index>(std::max<std::size_t>(4 * worker_count(), 8));
  std::vector<Partial> partials;
  for (Eigen::Index first = 0; first < tiles; first += batch) {
    const Eigen::Index n = std::min(batch, tiles - first);
    partials.assign(static_cast<std::size_t>(n), Partial{});
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      const Eigen::Index t = first + static_cast<Eigen::Index>(i);
      partials[i] = compute(t * kTileRows, std::min(count, (t + 1) * kTileRows));
    });
    for (const auto& p : partials) fold(p);
  }
}

}  // namespace

double Ridge::resolve(const Eigen::MatrixXd& covariance) const {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorKind::InvalidArgument, "ridge must be a finite value >= 0");
  }
  if (mode == Mode::Absolute) return value;
  return value * covariance.trace() / static_cast<double>(covariance.rows());
}

Raster to_raster(const AnomalyMap& map) {
  ImageF px = Eigen::Map<const Image<double>>(map.scores.data(), map.grid.height, map.grid.width)
                  .cast<float>();
  return Raster(std::move(px));
}

AnomalyMap anomaly_map_from_raster(const Raster& raster) {
  return {raster.dims(), Eigen::Map<const Eigen::ArrayXf>(raster.data().data(),
                                                          raster.pixels().size())
                             .cast<double>()};
}

HacdModel HacdModel::from_moments(Eigen::VectorXd mean_x, Eigen::VectorXd mean_y,
                                  Eigen::MatrixXd covariance, double ridge) {
  const Eigen::Index dx = mean_x.size();
  const Eigen::Index dy = mean_y.size();
  const Eigen::Index d = dx + dy;
  if (dx < 1 || dy < 1 || covariance.rows() != d || covariance.cols() != d) {
    throw Error(ErrorKind::DimensionMismatch, "covariance must be (dx+dy) x (dx+dy)");
  }
  if (!covariance.allFinite() || !mean_x.allFinite() || !mean_y.allFinite()) {
    throw Error(ErrorKind::InvalidArgument, "non-finite moments");
  }
  const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, covariance.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::InvalidArgument, "covariance is not symmetric");
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorKind::InvalidArgument, "ridge must be a finite value >= 0");
  }

  Eigen::MatrixXd regularized = covariance;
  regularized.diagonal().array() += ridge;

  const auto joint = factor_spd(regularized, "joint covariance");
  const auto xx = factor_spd(regularized.topLeftCorner(dx, dx), "x covariance");
  const auto yy = factor_spd(regularized.bottomRightCorner(dy, dy), "y covariance");

  HacdModel m;
  m.quadratic_ = joint.solve(Eigen::MatrixXd::Identity(d, d));
  m.quadratic_.topLeftCorner(dx, dx) -= xx.solve(Eigen::MatrixXd::Identity(dx, dx));
  m.quadratic_.bottomRightCorner(dy, dy) -= yy.solve(Eigen::MatrixXd::Identity(dy, dy));
  m.quadratic_ = 0.5 * (m.quadratic_ + m.quadratic_.transpose()).eval();
  m.constant_ = 0.5 * (log_det(joint) - log_det(xx) - log_det(yy));
  m.mean_x_ = std::move(mean_x);
  m.mean_y_ = std::move(mean_y);
  m.covariance_ = std::move(covariance);
  m.ridge_ = ridge;
  return m;
}

HacdModel fit_hacd(const FeatureStack& x, const FeatureStack& y, const Ridge& ridge,
                   const Mask* fit_mask) {
  check_grid(x, y);
  const Eigen::Index d = x.dim() + y.dim();

  std::vector<Eigen::Index> index;
  if (fit_mask != nullptr) {
    if (fit_mask->cols() != x.width() || fit_mask->rows() != x.height()) {
      throw Error(ErrorKind::GridMismatch, "fit mask does not match the feature grid");
    }
    for (Eigen::Index p = 0; p < fit_mask->size(); ++p) {
      if (fit_mask->data()[p]) index.push_back(p);
    }
  }
  const auto* selection = fit_mask ? &index : nullptr;
  const Eigen::Index count = fit_mask ? static_cast<Eigen::Index>(index.size())
                                      : x.dims().pixels();
  if (count < 1) throw Error(ErrorKind::SingularCovariance, "no pixels to fit");

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  tiled_reduce<Eigen::VectorXd>(
      count,
      [&](Eigen::Index begin, Eigen::Index end) -> Eigen::VectorXd {
        return gather_tile(x, y, selection, begin, end).colwise().sum().transpose();
      },
      [&](const Eigen::VectorXd& partial) { sum += partial; });
  const Eigen::VectorXd mean = sum / static_cast<double>(count);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  tiled_reduce<Eigen::MatrixXd>(
      count,
      [&](Eigen::Index begin, Eigen::Index end) -> Eigen::MatrixXd {
        RowMatrix tile = gather_tile(x, y, selection, begin, end);
        tile.rowwise() -= mean.transpose();
        Eigen::MatrixXd partial = Eigen::MatrixXd::Zero(d, d);
        partial.selfadjointView<Eigen::Lower>().rankUpdate(tile.transpose());
        return partial;
      },
      [&](const Eigen::MatrixXd& partial) {
        scatter.triangularView<Eigen::Lower>() += partial;
      });
  Eigen::MatrixXd covariance = scatter.selfadjointView<Eigen::Lower>();
  covariance /= static_cast<double>(count);

  const double epsilon = ridge.resolve(covariance);
  return HacdModel::from_moments(mean.head(x.dim()), mean.tail(y.dim()), std::move(covariance),
                                 epsilon);
}

double hacd_score(const HacdModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (x.size() != model.dim_x() || y.size() != model.dim_y()) {
    throw Error(ErrorKind::DimensionMismatch, "input dimensions do not match the model");
  }
  Eigen::VectorXd z(model.dim());
  z << x - model.mean_x(), y - model.mean_y();
  return 0.5 * z.dot(model.quadratic() * z) + model.constant();
}

AnomalyMap score_map(const HacdModel& model, const FeatureStack& x, const FeatureStack& y) {
  check_grid(x, y);
  if (x.dim() != model.dim_x() || y.dim() != model.dim_y()) {
    throw Error(ErrorKind::DimensionMismatch, "feature dimensions do not match the model");
  }
  Eigen::VectorXd mean(model.dim());
  mean << model.mean_x(), model.mean_y();

  const Eigen::Index count = x.dims().pixels();
  AnomalyMap map{x.dims(), Eigen::ArrayXd(count)};
  const Eigen::Index tiles = (count + kTileRows - 1) / kTileRows;
  parallel_for(static_cast<std::size_t>(tiles), [&](std::size_t t) {
    const Eigen::Index begin = static_cast<Eigen::Index>(t) * kTileRows;
    const Eigen::Index end = std::min(count, begin + kTileRows);
    RowMatrix tile = gather_tile(x, y, nullptr, begin, end);
    tile.rowwise() -= mean.transpose();
    map.scores.segment(begin, end - begin) =
        half_quadratic_rows(tile, model.quadratic()) + model.constant();
  });
  return map;
}

AnomalyMap diff_score(const CoregisteredPair& pair) {
  const auto a = pair.t0.pixels().cast<double>();
  const auto b = pair.t1.pixels().cast<double>();
  const Image<double> diff = (b - a).abs();
  return {pair.t0.dims(), Eigen::Map<const Eigen::ArrayXd>(diff.data(), diff.size())};
}

nlohmann::json to_json(const HacdModel& model) {
  const Eigen::Index d = model.dim();
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) cov.push_back(model.covariance()(r, c));
  }
  nlohmann::ordered_json doc;
  doc["format"] = "acdkit-hacd-model";
  doc["dim_x"] = model.dim_x();
  doc["dim_y"] = model.dim_y();
  doc["mean_x"] = std::vector<double>(model.mean_x().begin(), model.mean_x().end());
  doc["mean_y"] = std::vector<double>(model.mean_y().begin(), model.mean_y().end());
  doc["covariance"] = cov;
  doc["ridge"] = model.ridge();
  return doc;
}

HacdModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format") != "acdkit-hacd-model") {
      throw Error(ErrorKind::FormatError, "not an acdkit HACD model");
    }
    const auto dx = doc.at("dim_x").get<Eigen::Index>();
    const auto dy = doc.at("dim_y").get<Eigen::Index>();
    const auto mx = doc.at("mean_x").get<std::vector<double>>();
    const auto my = doc.at("mean_y").get<std::vector<double>>();
    const auto cov = doc.at("covariance").get<std::vector<double>>();
    const Eigen::Index d = dx + dy;
    if (dx < 1 || dy < 1 || static_cast<Eigen::Index>(mx.size()) != dx ||
        static_cast<Eigen::Index>(my.size()) != dy ||
        static_cast<Eigen::Index>(cov.size()) != d * d) {
      throw Error(ErrorKind::FormatError, "model dimensions are inconsistent");
    }
    Eigen::MatrixXd c = Eigen::Map<const RowMatrix>(cov.data(), d, d);
    return HacdModel::from_moments(Eigen::Map<const Eigen::VectorXd>(mx.data(), dx),
                                   Eigen::Map<const Eigen::VectorXd>(my.data(), dy),
                                   std::move(c), doc.at("ridge").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("model JSON: ") + e.what());
  }
}

void save_model(const HacdModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << to_json(model).dump(1) << '\n';
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

HacdModel load_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::NotFound, path.string());
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorKind::FormatError, path.string() + ": invalid JSON");
  return model_from_json(doc);
}

}  // namespace acdkit
