#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "retmosaic/image.hpp"

namespace retmosaic {

/// Blind SNR of a homogeneous region: 10 log10(mean / stddev), population
/// stddev. Throws Error(Numerical) "degenerate flat ROI" for zero variance.
double q_snr(const ImageGray& img, const RectROI& roi);

/// Two-component Gaussian mixture; b is the darker component.
struct Gmm2 {
  double w_b = 0.5, w_f = 0.5;
  double mu_b = 0.0, mu_f = 1.0;
  double sigma_b = 1.0, sigma_f = 1.0;

  /// Posterior probabilities (background, foreground) of one sample.
  std::pair<double, double> responsibilities(double x) const;
  double log_likelihood(std::span<const double> xs) const;
};

struct GmmFit {
  Gmm2 model;
  std::vector<double> loglik_trace;  // after initialization and each EM step
  int iterations = 0;
  bool converged = false;  // false: iteration cap reached, last iterate returned
};

/// EM from an Otsu split; at most 200 iterations, log-likelihood tolerance
/// 1e-8, sigmas floored at 1e-4. Needs >= 20 non-constant samples.
GmmFit fit_gmm2(std::span<const double> samples);

/// Otsu threshold of the samples over 256 bins spanning their range.
double otsu_threshold(std::span<const double> samples);

struct QEdge {
  double value = 0.0;        // printed form, or the sum form when it falls back
  double numerator = 0.0;    // w_b (mu_b - mu)^2 + w_f (mu_f - mu)^2
  double printed = 0.0;      // numerator / (w_b sigma_b^2 - w_f sigma_f^2); NaN if denominator is 0
  double sum_form = 0.0;     // numerator / (w_b sigma_b^2 + w_f sigma_f^2)
  bool denominator_fallback = false;
  Gmm2 gmm;
};

/// Edge-preservation score of an ROI straddling a transition. The printed
/// denominator w_b s_b^2 - w_f s_f^2 is used when it exceeds 1e-9; otherwise
/// the value falls back to the sum form and the flag is set.
QEdge q_edge(const ImageGray& img, const RectROI& roi);

enum class Metric { Snr, Edge };

const char* to_string(Metric m);

struct RoiSpec {
  RectROI roi;
  Metric metric = Metric::Snr;
};

struct RoiRecord {
  RoiSpec spec;
  std::optional<double> value;
  std::optional<QEdge> edge;  // details for Q_edge records
  std::string error;          // set when the metric failed
};

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
};

struct QualityReport {
  std::vector<RoiRecord> records;
  MetricSummary snr;
  MetricSummary edge;
};

/// Per-ROI failures are recorded, not thrown. Out-of-bounds ROIs throw.
QualityReport evaluate_rois(const ImageGray& img, const std::vector<RoiSpec>& rois);

/// ROI file: one `x y w h metric` per line, metric in {snr, edge, Q_snr, Q_edge}.
std::vector<RoiSpec> parse_rois(const std::string& text);
std::vector<RoiSpec> load_rois(const std::filesystem::path& path);

/// Human-readable lines followed by `key=value` records.
std::string serialize_quality_report(const QualityReport& report);

}  // namespace retmosaic
