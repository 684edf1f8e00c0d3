#include "acdkit/eval.hpp"

#include "acdkit/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace acdkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Labeled {
  double score;
  bool positive;
};

RocCurve build_curve(std::vector<Labeled> samples, Eigen::Index positives,
                     Eigen::Index negatives) {
  std::sort(samples.begin(), samples.end(),
            [](const Labeled& a, const Labeled& b) { return a.score > b.score; });
  RocCurve curve;
  curve.points.push_back({kInf, 0.0, 0.0});
  Eigen::Index tp = 0, fp = 0;
  for (std::size_t i = 0; i < samples.size();) {
    const double threshold = samples[i].score;
    for (; i < samples.size() && samples[i].score == threshold; ++i) {
      (samples[i].positive ? tp : fp) += 1;
    }
    curve.points.push_back({threshold, static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  return curve;
}

/// Rates of `curve` at an arbitrary threshold: the last point whose
/// threshold is >= t.
const RocPoint& point_at(const RocCurve& curve, double t) {
  const auto it = std::partition_point(curve.points.begin(), curve.points.end(),
                                       [t](const RocPoint& p) { return p.threshold >= t; });
  return *(it - 1);
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

RocBand roc(const AnomalyMap& map, const GroundTruth& truth, double fpr_max) {
  if (map.grid != truth.dims() || map.scores.size() != map.grid.pixels()) {
    throw Error(ErrorKind::GridMismatch, "anomaly map is " + to_string(map.grid) +
                                             ", ground truth is " + to_string(truth.dims()));
  }
  if (!(fpr_max > 0.0 && fpr_max <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fpr_max must lie in (0, 1]");
  }
  const bool* inner = truth.inner().data();
  const bool* outer = truth.outer().data();

  std::vector<Labeled> inner_samples, outer_samples;
  RocBand band;
  band.fpr_max = fpr_max;
  for (Eigen::Index p = 0; p < map.scores.size(); ++p) {
    const double s = map.scores[p];
    if (!outer[p]) {
      inner_samples.push_back({s, false});
      outer_samples.push_back({s, false});
      ++band.n_neg;
    } else {
      outer_samples.push_back({s, true});
      ++band.n_pos_outer;
      if (inner[p]) {
        inner_samples.push_back({s, true});
        ++band.n_pos_inner;
      }
    }
  }
  if (band.n_neg == 0) throw Error(ErrorKind::EmptyClass, "no negative pixels outside the outer mask");
  if (band.n_pos_inner == 0) throw Error(ErrorKind::EmptyClass, "inner mask has no pixels");

  band.inner = build_curve(std::move(inner_samples), band.n_pos_inner, band.n_neg);
  band.outer = build_curve(std::move(outer_samples), band.n_pos_outer, band.n_neg);
  band.pauc_inner = pauc(band.inner, fpr_max);
  band.pauc_outer = pauc(band.outer, fpr_max);
  band.auc_inner = pauc(band.inner, 1.0);
  band.auc_outer = pauc(band.outer, 1.0);
  return band;
}

double pauc(const RocCurve& curve, double fpr_max) {
  if (!(fpr_max > 0.0 && fpr_max <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fpr_max must lie in (0, 1]");
  }
  double area = 0.0;
  const auto& pts = curve.points;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto& a = pts[i - 1];
    const auto& b = pts[i];
    if (a.fpr >= fpr_max) break;
    if (b.fpr <= fpr_max) {
      area += 0.5 * (b.fpr - a.fpr) * (a.tpr + b.tpr);
    } else {
      const double t = (fpr_max - a.fpr) / (b.fpr - a.fpr);
      const double tpr_edge = a.tpr + t * (b.tpr - a.tpr);
      area += 0.5 * (fpr_max - a.fpr) * (a.tpr + tpr_edge);
      break;
    }
  }
  return area;
}

void write_roc_csv(const RocBand& band, const std::filesystem::path& path) {
  if (band.inner.points.empty() || band.outer.points.empty()) {
    throw Error(ErrorKind::EmptyClass, "ROC band has no points");
  }
  std::vector<double> thresholds;
  for (const auto* c : {&band.inner, &band.outer}) {
    for (const auto& p : c->points) thresholds.push_back(p.threshold);
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::ostringstream out;
  out << "threshold,fpr_inner,tpr_inner,fpr_outer,tpr_outer\n";
  for (double t : thresholds) {
    const auto& a = point_at(band.inner, t);
    const auto& b = point_at(band.outer, t);
    out << format_double(t) << ',' << format_double(a.fpr) << ',' << format_double(a.tpr) << ','
        << format_double(b.fpr) << ',' << format_double(b.tpr) << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  file << out.str();
  if (!file) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

RocBand read_roc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, path.string());
  std::string line;
  if (!std::getline(in, line) || line != "threshold,fpr_inner,tpr_inner,fpr_outer,tpr_outer") {
    throw Error(ErrorKind::FormatError, path.string() + ": unexpected header");
  }
  RocBand band;
  auto append = [](RocCurve& c, const RocPoint& p) {
    if (c.points.empty() || c.points.back().fpr != p.fpr || c.points.back().tpr != p.tpr) {
      c.points.push_back(p);
    }
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[5];
    std::istringstream row(line);
    std::string cell;
    for (int i = 0; i < 5; ++i) {
      if (!std::getline(row, cell, ',')) {
        throw Error(ErrorKind::FormatError, path.string() + ": short row");
      }
      char* end = nullptr;
      v[i] = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        throw Error(ErrorKind::FormatError, path.string() + ": bad number '" + cell + "'");
      }
    }
    append(band.inner, {v[0], v[1], v[2]});
    append(band.outer, {v[0], v[3], v[4]});
  }
  if (band.inner.points.empty()) throw Error(ErrorKind::EmptyClass, path.string() + ": no rows");
  band.pauc_inner = pauc(band.inner, band.fpr_max);
  band.pauc_outer = pauc(band.outer, band.fpr_max);
  band.auc_inner = pauc(band.inner, 1.0);
  band.auc_outer = pauc(band.outer, 1.0);
  return band;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

// Plot frame in SVG user units.
constexpr double kLeft = 70, kTop = 20, kWidth = 460, kHeight = 360;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_loglog_svg(const std::vector<NamedBand>& bands, double fpr_floor) {
  if (bands.empty()) throw Error(ErrorKind::InvalidArgument, "nothing to plot");
  if (!(fpr_floor > 0.0 && fpr_floor < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "fpr_floor must lie in (0, 1)");
  }
  const double lo = std::log10(fpr_floor);
  auto sx = [&](double fpr) {
    return kLeft + kWidth * (std::log10(std::max(fpr, fpr_floor)) - lo) / -lo;
  };
  auto sy = [&](double tpr) {
    return kTop + kHeight * (1.0 - (std::log10(std::max(tpr, fpr_floor)) - lo) / -lo);
  };

  const double legend_h = 20.0 * static_cast<double>(bands.size());
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"560\" height=\""
      << fmt(kTop + kHeight + 60 + legend_h) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"560\" height=\"" << fmt(kTop + kHeight + 60 + legend_h)
      << "\" fill=\"white\"/>\n";

  // Axes with one tick per decade.
  svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop + kHeight) << "\" x2=\""
      << fmt(kLeft + kWidth) << "\" y2=\"" << fmt(kTop + kHeight) << "\"/>\n"
      << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft)
      << "\" y2=\"" << fmt(kTop + kHeight) << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int e = static_cast<int>(std::ceil(lo)); e <= 0; ++e) {
    const double v = std::pow(10.0, e);
    svg << "<line x1=\"" << fmt(sx(v)) << "\" y1=\"" << fmt(kTop + kHeight) << "\" x2=\""
        << fmt(sx(v)) << "\" y2=\"" << fmt(kTop + kHeight + 5) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(sx(v)) << "\" y=\"" << fmt(kTop + kHeight + 18)
        << "\" text-anchor=\"middle\">1e" << e << "</text>\n"
        << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(sy(v)) << "\" x2=\""
        << fmt(kLeft) << "\" y2=\"" << fmt(sy(v)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(sy(v) + 4)
        << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kLeft + kWidth / 2) << "\" y=\"" << fmt(kTop + kHeight + 36)
      << "\" text-anchor=\"middle\">false positive rate</text>\n"
      << "<text x=\"16\" y=\"" << fmt(kTop + kHeight / 2) << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << fmt(kTop + kHeight / 2)
      << ")\">true positive rate</text>\n</g>\n";

  for (std::size_t i = 0; i < bands.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const RocCurve* curves[] = {&bands[i].band.inner, &bands[i].band.outer};
    for (int k = 0; k < 2; ++k) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
          << (k == 1 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      bool first = true;
      for (const auto& p : curves[k]->points) {
        svg << (first ? "" : " ") << fmt(sx(p.fpr)) << ',' << fmt(sy(p.tpr));
        first = false;
      }
      svg << "\"/>\n";
    }
    const double ly = kTop + kHeight + 56 + 20.0 * static_cast<double>(i);
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(kLeft + 24) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt(kLeft + 30) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(bands[i].name)
        << " (inner solid, outer dashed)</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_loglog_svg(const std::vector<NamedBand>& bands, const std::filesystem::path& path,
                      double fpr_floor) {
  const auto text = render_loglog_svg(bands, fpr_floor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

}  // namespace acdkit
