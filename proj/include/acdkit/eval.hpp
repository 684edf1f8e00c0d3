#pragma once

#include "acdkit/hacd.hpp"
#include "acdkit/raster.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace acdkit {

struct RocPoint {
  double threshold = 0.0;  ///< pixels with score >= threshold are detected
  double fpr = 0.0;
  double tpr = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

/// Points in descending threshold order. The first point sits above the
/// maximum score (threshold +inf, rates 0); the last detects everything.
struct RocCurve {
  std::vector<RocPoint> points;
};

inline constexpr double kDefaultFprMax = 0.01;

/// ROC curves against the inner and outer truth masks. Both use the
/// complement of the outer mask as negatives; pixels in outer \ inner take
/// no part in the inner curve.
struct RocBand {
  RocCurve inner;
  RocCurve outer;
  double fpr_max = kDefaultFprMax;
  double pauc_inner = 0.0;
  double pauc_outer = 0.0;
  double auc_inner = 0.0;
  double auc_outer = 0.0;
  Eigen::Index n_pos_inner = 0;
  Eigen::Index n_pos_outer = 0;
  Eigen::Index n_neg = 0;
};

/// Throws GridMismatch, or EmptyClass when a curve has no positives or
/// there are no negatives.
RocBand roc(const AnomalyMap& map, const GroundTruth& truth, double fpr_max = kDefaultFprMax);

/// Trapezoidal area under `curve` for fpr in [0, fpr_max].
double pauc(const RocCurve& curve, double fpr_max = kDefaultFprMax);

/// CSV `threshold,fpr_inner,tpr_inner,fpr_outer,tpr_outer` over the union of
/// both curves' thresholds, descending.
void write_roc_csv(const RocBand& band, const std::filesystem::path& path);

/// Parses a file written by write_roc_csv back into its two curves.
RocBand read_roc_csv(const std::filesystem::path& path);

struct NamedBand {
  std::string name;
  RocBand band;
};

/// Standalone SVG with log10 axes; one inner/outer polyline pair per band.
std::string render_loglog_svg(const std::vector<NamedBand>& bands, double fpr_floor = 1e-5);
void write_loglog_svg(const std::vector<NamedBand>& bands, const std::filesystem::path& path,
                      double fpr_floor = 1e-5);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

}  // namespace acdkit
