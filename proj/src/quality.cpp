#include "retmosaic/quality.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/filters.hpp"

namespace retmosaic {

namespace {

std::vector<double> roi_pixels(const ImageGray& img, const RectROI& roi) {
  if (!img.contains(roi) || roi.width < 2 || roi.height < 2) {
    throw Error(ErrorKind::Config, "ROI outside image or smaller than 2x2");
  }
  const ImageGray c = crop(img, roi);
  return {c.pixels().begin(), c.pixels().end()};
}

constexpr double kSigmaFloor = 1e-4;

double log_normal(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace

double q_snr(const ImageGray& img, const RectROI& roi) {
  const auto px = roi_pixels(img, roi);
  const double mu = mean(px);
  double ss = 0.0;
  for (double v : px) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(px.size()));
  const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
  if (!(*hi > *lo) || !(sigma > 0.0)) throw Error(ErrorKind::Numerical, "degenerate flat ROI");
  if (!(mu > 0.0)) throw Error(ErrorKind::Numerical, "flat ROI mean must be positive");
  return 10.0 * std::log10(mu / sigma);
}

std::pair<double, double> Gmm2::responsibilities(double x) const {
  const double lb = std::log(w_b) + log_normal(x, mu_b, sigma_b);
  const double lf = std::log(w_f) + log_normal(x, mu_f, sigma_f);
  const double m = std::max(lb, lf);
  const double eb = std::exp(lb - m);
  const double ef = std::exp(lf - m);
  return {eb / (eb + ef), ef / (eb + ef)};
}

double Gmm2::log_likelihood(std::span<const double> xs) const {
  double ll = 0.0;
  for (double x : xs) {
    const double lb = std::log(w_b) + log_normal(x, mu_b, sigma_b);
    const double lf = std::log(w_f) + log_normal(x, mu_f, sigma_f);
    const double m = std::max(lb, lf);
    ll += m + std::log(std::exp(lb - m) + std::exp(lf - m));
  }
  return ll;
}

double otsu_threshold(std::span<const double> samples) {
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw Error(ErrorKind::Numerical, "otsu: constant input");
  constexpr int kBins = 256;
  const double width = (hi - lo) / kBins;
  std::array<double, kBins> hist{};
  for (double v : samples) {
    hist[static_cast<std::size_t>(std::min(kBins - 1, static_cast<int>((v - lo) / width)))] += 1.0;
  }
  double total = 0.0;
  double total_sum = 0.0;
  for (int i = 0; i < kBins; ++i) {
    total += hist[static_cast<std::size_t>(i)];
    total_sum += hist[static_cast<std::size_t>(i)] * (i + 0.5);
  }
  double w0 = 0.0;
  double s0 = 0.0;
  double best = -1.0;
  int best_i = 0;
  for (int i = 0; i < kBins - 1; ++i) {
    w0 += hist[static_cast<std::size_t>(i)];
    s0 += hist[static_cast<std::size_t>(i)] * (i + 0.5);
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = s0 / w0;
    const double m1 = (total_sum - s0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_i = i;
    }
  }
  return lo + (best_i + 1) * width;  // upper edge of the last background bin
}

GmmFit fit_gmm2(std::span<const double> samples) {
  if (samples.size() < 20) throw Error(ErrorKind::Config, "fit_gmm2: need >= 20 samples");
  const double thr = otsu_threshold(samples);

  GmmFit fit;
  Gmm2& g = fit.model;
  {
    double nb = 0.0, sb = 0.0, ssb = 0.0, nf = 0.0, sf = 0.0, ssf = 0.0;
    for (double v : samples) {
      if (v < thr) {
        nb += 1.0;
        sb += v;
        ssb += v * v;
      } else {
        nf += 1.0;
        sf += v;
        ssf += v * v;
      }
    }
    if (nb == 0.0 || nf == 0.0) throw Error(ErrorKind::Numerical, "fit_gmm2: degenerate split");
    const double n = nb + nf;
    g.w_b = nb / n;
    g.w_f = nf / n;
    g.mu_b = sb / nb;
    g.mu_f = sf / nf;
    g.sigma_b = std::max(std::sqrt(std::max(ssb / nb - g.mu_b * g.mu_b, 0.0)), kSigmaFloor);
    g.sigma_f = std::max(std::sqrt(std::max(ssf / nf - g.mu_f * g.mu_f, 0.0)), kSigmaFloor);
  }
  fit.loglik_trace.push_back(g.log_likelihood(samples));

  constexpr int kMaxIters = 200;
  constexpr double kTol = 1e-8;
  const double n = static_cast<double>(samples.size());
  for (int it = 0; it < kMaxIters; ++it) {
    double rb_sum = 0.0, rb_x = 0.0, rf_x = 0.0;
    for (double v : samples) {
      const auto [rb, rf] = g.responsibilities(v);
      rb_sum += rb;
      rb_x += rb * v;
      rf_x += rf * v;
    }
    const double rf_sum = n - rb_sum;
    if (rb_sum <= 0.0 || rf_sum <= 0.0) break;  // a component emptied; keep last iterate
    Gmm2 next = g;
    next.w_b = rb_sum / n;
    next.w_f = 1.0 - next.w_b;
    next.mu_b = rb_x / rb_sum;
    next.mu_f = rf_x / rf_sum;
    double vb = 0.0, vf = 0.0;
    for (double v : samples) {
      const auto [rb, rf] = g.responsibilities(v);
      vb += rb * (v - next.mu_b) * (v - next.mu_b);
      vf += rf * (v - next.mu_f) * (v - next.mu_f);
    }
    next.sigma_b = std::max(std::sqrt(vb / rb_sum), kSigmaFloor);
    next.sigma_f = std::max(std::sqrt(vf / rf_sum), kSigmaFloor);
    if (!(next.w_b > 0.0 && next.w_f > 0.0)) break;
    g = next;
    ++fit.iterations;
    const double ll = g.log_likelihood(samples);
    const double prev = fit.loglik_trace.back();
    fit.loglik_trace.push_back(ll);
    if (std::abs(ll - prev) <= kTol * std::max(1.0, std::abs(prev))) {
      fit.converged = true;
      break;
    }
  }
  if (g.mu_b > g.mu_f) {
    std::swap(g.w_b, g.w_f);
    std::swap(g.mu_b, g.mu_f);
    std::swap(g.sigma_b, g.sigma_f);
  }
  return fit;
}

QEdge q_edge(const ImageGray& img, const RectROI& roi) {
  const auto px = roi_pixels(img, roi);
  const GmmFit fit = fit_gmm2(px);
  const Gmm2& g = fit.model;
  const double mu = mean(px);
  QEdge q;
  q.gmm = g;
  q.numerator = g.w_b * (g.mu_b - mu) * (g.mu_b - mu) + g.w_f * (g.mu_f - mu) * (g.mu_f - mu);
  const double vb = g.w_b * g.sigma_b * g.sigma_b;
  const double vf = g.w_f * g.sigma_f * g.sigma_f;
  const double printed_den = vb - vf;
  q.printed = printed_den != 0.0 ? q.numerator / printed_den
                                 : std::numeric_limits<double>::quiet_NaN();
  q.sum_form = q.numerator / (vb + vf);
  q.denominator_fallback = !(printed_den > 1e-9);
  q.value = q.denominator_fallback ? q.sum_form : q.printed;
  return q;
}

const char* to_string(Metric m) { return m == Metric::Snr ? "Q_snr" : "Q_edge"; }

namespace {

MetricSummary summarize(std::vector<double> v) {
  MetricSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = mean(v);
  s.median = median(std::move(v));
  return s;
}

}  // namespace

QualityReport evaluate_rois(const ImageGray& img, const std::vector<RoiSpec>& rois) {
  QualityReport report;
  std::vector<double> snr;
  std::vector<double> edge;
  for (const auto& spec : rois) {
    if (!img.contains(spec.roi)) throw Error(ErrorKind::Config, "ROI outside image");
    RoiRecord rec{spec, std::nullopt, std::nullopt, {}};
    try {
      if (spec.metric == Metric::Snr) {
        rec.value = q_snr(img, spec.roi);
        snr.push_back(*rec.value);
      } else {
        rec.edge = q_edge(img, spec.roi);
        rec.value = rec.edge->value;
        edge.push_back(*rec.value);
      }
    } catch (const Error& e) {
      rec.error = e.what();
    }
    report.records.push_back(std::move(rec));
  }
  report.snr = summarize(std::move(snr));
  report.edge = summarize(std::move(edge));
  return report;
}

std::vector<RoiSpec> parse_rois(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RoiSpec> rois;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    RoiSpec s;
    std::string metric;
    if (!(ls >> s.roi.x)) continue;
    std::string extra;
    if (!(ls >> s.roi.y >> s.roi.width >> s.roi.height >> metric) || (ls >> extra)) {
      throw Error(ErrorKind::Io, "roi line " + std::to_string(lineno) + ": expected 'x y w h metric'");
    }
    if (metric == "snr" || metric == "Q_snr") {
      s.metric = Metric::Snr;
    } else if (metric == "edge" || metric == "Q_edge") {
      s.metric = Metric::Edge;
    } else {
      throw Error(ErrorKind::Io, "roi line " + std::to_string(lineno) + ": unknown metric " + metric);
    }
    rois.push_back(s);
  }
  return rois;
}

std::vector<RoiSpec> load_rois(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open ROI file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_rois(ss.str());
}

std::string serialize_quality_report(const QualityReport& report) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    out << "roi " << i << ' ' << r.spec.roi.x << ' ' << r.spec.roi.y << ' ' << r.spec.roi.width
        << ' ' << r.spec.roi.height << ' ' << to_string(r.spec.metric);
    if (r.value) {
      out << " value " << *r.value;
    } else {
      out << " error \"" << r.error << '"';
    }
    if (r.edge) {
      out << " printed " << r.edge->printed << " sum_form " << r.edge->sum_form
          << " denominator_fallback " << (r.edge->denominator_fallback ? 1 : 0);
    }
    out << '\n';
  }
  out << "Q_snr.count=" << report.snr.count << '\n'
      << "Q_snr.mean=" << report.snr.mean << '\n'
      << "Q_snr.median=" << report.snr.median << '\n'
      << "Q_edge.count=" << report.edge.count << '\n'
      << "Q_edge.mean=" << report.edge.mean << '\n'
      << "Q_edge.median=" << report.edge.median << '\n';
  return out.str();
}

}  // namespace retmosaic
