#include "retmosaic/mosaic.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "retmosaic/correlation.hpp"
#include "retmosaic/error.hpp"
#include "retmosaic/sampling.hpp"

namespace retmosaic {

void MosaicConfig::validate() const {
  // Thresholds above 1 are accepted: they leave only the reference.
  if (!(rho_i_min >= 0.0) || !(rho_v_min >= 0.0)) {
    throw Error(ErrorKind::Config, "correlation thresholds must be >= 0");
  }
  if (frangi.scales.empty()) throw Error(ErrorKind::Config, "no vesselness scales");
}

namespace {

// Snap values that are integers up to rounding noise.
double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-6 ? r : v;
}

}  // namespace

Canvas compute_canvas(const std::vector<QuadraticTransform>& transforms, int view_width,
                      int view_height) {
  if (transforms.empty()) throw Error(ErrorKind::Config, "compute_canvas: no views");
  if (view_width < 1 || view_height < 1) throw Error(ErrorKind::Config, "empty view");
  std::vector<Point2> boundary;
  const double xmax = view_width - 1.0;
  const double ymax = view_height - 1.0;
  // Corners, edge midpoints, and every 16 px along the edges.
  for (double x = 0.0;; x = std::min(x + 16.0, xmax)) {
    boundary.push_back({x, 0.0});
    boundary.push_back({x, ymax});
    if (x >= xmax) break;
  }
  for (double y = 0.0;; y = std::min(y + 16.0, ymax)) {
    boundary.push_back({0.0, y});
    boundary.push_back({xmax, y});
    if (y >= ymax) break;
  }
  boundary.push_back({0.5 * xmax, 0.0});
  boundary.push_back({0.5 * xmax, ymax});
  boundary.push_back({0.0, 0.5 * ymax});
  boundary.push_back({xmax, 0.5 * ymax});

  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  for (const auto& t : transforms) {
    for (const Point2 b : boundary) {
      const auto u = t.invert(b);
      if (!u || !std::isfinite(u->x) || !std::isfinite(u->y)) {
        throw Error(ErrorKind::Numerical, "compute_canvas: view corner does not map back");
      }
      lo_x = std::min(lo_x, snap(u->x));
      lo_y = std::min(lo_y, snap(u->y));
      hi_x = std::max(hi_x, snap(u->x));
      hi_y = std::max(hi_y, snap(u->y));
    }
  }
  constexpr int kPad = 2;
  const double x0 = std::floor(lo_x);
  const double y0 = std::floor(lo_y);
  const double x1 = std::ceil(hi_x);
  const double y1 = std::ceil(hi_y);
  Canvas c;
  c.width = static_cast<int>(x1 - x0) + 1 + 2 * kPad;
  c.height = static_cast<int>(y1 - y0) + 1 + 2 * kPad;
  c.offset = {kPad - x0, kPad - y0};
  return c;
}

namespace {

WarpResult warp_onto(const ImageGray& src, const QuadraticTransform& transform,
                     const Canvas& canvas) {
  return warp_image(
      src, [&](Point2 c) { return transform.apply(c - canvas.offset); }, canvas.width,
      canvas.height);
}

}  // namespace

CanvasView warp_to_canvas(const ImageGray& view, const QuadraticTransform& transform,
                          const Canvas& canvas, const FrangiParams& frangi) {
  WarpResult img = warp_onto(view, transform, canvas);
  CanvasView out;
  out.image = std::move(img.image);
  out.mask = std::move(img.mask);
  out.vesselness = warp_onto(frangi_vesselness(view, frangi), transform, canvas).image;
  out.kappa = warp_onto(distance_map(view.width(), view.height()), transform, canvas).image;
  return out;
}

GateResult gate_view(const CanvasView& view, const CanvasView& reference,
                     const MosaicConfig& cfg) {
  GateResult g;
  const PixelMask overlap = mask_and(view.mask, reference.mask);
  if (overlap.count() < 100) {
    g.reason = "no overlap";
    return g;
  }
  try {
    g.rho_intensity = correlation_coefficient(view.image, reference.image, overlap);
    g.rho_vessel = correlation_coefficient(view.vesselness, reference.vesselness, overlap);
  } catch (const UndefinedCorrelation& e) {
    g.reason = std::string("degenerate correlation: ") + e.what();
    return g;
  }
  const bool vessel_ok = g.rho_vessel > cfg.rho_v_min;
  const bool intensity_ok = g.rho_intensity > cfg.rho_i_min;
  g.included = vessel_ok && intensity_ok;
  if (!vessel_ok) {
    g.reason = "vesselness correlation below threshold";
  } else if (!intensity_ok) {
    g.reason = "intensity correlation below threshold";
  }
  return g;
}

ImageGray compute_weights(const PixelMask& mask, const GateResult& gate, const ImageGray& kappa) {
  if (!same_shape(kappa, mask)) throw Error(ErrorKind::Config, "weights: dimension mismatch");
  ImageGray w(mask.width(), mask.height());
  if (!gate.included) return w;
  const auto k = kappa.pixels();
  auto out = w.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = mask.at(i) ? k[i] * gate.rho_vessel : 0.0;
  }
  return w;
}

MosaicResult stitch(const std::vector<RegisteredView>& views) {
  std::vector<const RegisteredView*> used;
  for (const auto& v : views) {
    if (v.included) used.push_back(&v);
  }
  if (used.empty()) throw Error(ErrorKind::Quality, "stitch: no included views");
  const int w = used.front()->image.width();
  const int h = used.front()->image.height();
  for (const auto* v : used) {
    if (!same_shape(v->image, v->mask) || !same_shape(v->image, v->weight) ||
        v->image.width() != w || v->image.height() != h) {
      throw Error(ErrorKind::Config, "stitch: views must share the canvas");
    }
  }
  MosaicResult out{ImageGray(w, h), PixelMask(w, h), {}};
  std::vector<std::pair<double, double>> contrib;  // (weight, value)
  auto z = out.z.pixels();
  for (std::size_t i = 0; i < z.size(); ++i) {
    contrib.clear();
    for (const auto* v : used) {
      if (v->mask.at(i)) contrib.emplace_back(v->weight.pixels()[i], v->image.pixels()[i]);
    }
    if (contrib.empty()) continue;
    out.coverage.set(i, true);
    std::sort(contrib.begin(), contrib.end());
    double sw = 0.0;
    double swx = 0.0;
    double lo = contrib.front().second;
    double hi = lo;
    for (const auto& [wt, val] : contrib) {
      sw += wt;
      swx += wt * val;
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
    if (sw > 0.0) {
      z[i] = std::clamp(swx / sw, lo, hi);
    } else {
      double s = 0.0;
      for (const auto& c : contrib) s += c.second;
      z[i] = std::clamp(s / static_cast<double>(contrib.size()), lo, hi);
    }
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    out.report.push_back({i, views[i].included, views[i].rho_intensity, views[i].rho_vessel,
                          views[i].reason});
  }
  return out;
}

MosaicBuild build_mosaic(const std::vector<ImageGray>& views,
                         const std::vector<QuadraticTransform>& transforms,
                         std::size_t reference, const MosaicConfig& cfg) {
  cfg.validate();
  if (views.empty() || views.size() != transforms.size() || reference >= views.size()) {
    throw Error(ErrorKind::Config, "build_mosaic: views/transforms/reference mismatch");
  }
  std::vector<QuadraticTransform> maps = transforms;
  maps[reference] = QuadraticTransform::identity();
  MosaicBuild out;
  out.canvas = compute_canvas(maps, views.front().width(), views.front().height());

  const CanvasView ref =
      warp_to_canvas(views[reference], maps[reference], out.canvas, cfg.frangi);
  for (std::size_t i = 0; i < views.size(); ++i) {
    RegisteredView rv;
    if (i == reference) {
      rv.image = ref.image;
      rv.mask = ref.mask;
      rv.rho_intensity = 1.0;
      rv.rho_vessel = 1.0;
      rv.included = true;
      rv.weight = compute_weights(ref.mask, GateResult{true, 1.0, 1.0, {}}, ref.kappa);
      out.views.push_back(std::move(rv));
      continue;
    }
    CanvasView cv;
    WarpResult warped = warp_onto(views[i], maps[i], out.canvas);
    cv.image = std::move(warped.image);
    cv.mask = std::move(warped.mask);
    cv.kappa = warp_onto(distance_map(views[i].width(), views[i].height()), maps[i], out.canvas)
                   .image;
    ImageGray photometric = views[i];
    const PixelMask overlap = mask_and(cv.mask, ref.mask);
    if (overlap.count() >= 100) {
      try {
        // LUT from the overlap only; vesselness comes from the matched view
        // in its own domain.
        const auto matched = histogram_match(cv.image, ref.image, &overlap, &overlap);
        auto px = cv.image.pixels();
        for (std::size_t j = 0; j < px.size(); ++j) {
          px[j] = cv.mask.at(j) ? matched.image.pixels()[j] : 0.0;
        }
        for (double& v : photometric.pixels()) v = matched.lut.apply(v);
      } catch (const Error&) {
        // Constant overlap; the gate reports the degenerate correlation.
      }
    }
    cv.vesselness =
        warp_onto(frangi_vesselness(photometric, cfg.frangi), maps[i], out.canvas).image;
    const GateResult gate = gate_view(cv, ref, cfg);
    rv.weight = compute_weights(cv.mask, gate, cv.kappa);
    rv.image = std::move(cv.image);
    rv.mask = std::move(cv.mask);
    rv.rho_intensity = gate.rho_intensity;
    rv.rho_vessel = gate.rho_vessel;
    rv.included = gate.included;
    rv.reason = gate.reason;
    out.views.push_back(std::move(rv));
  }
  out.mosaic = stitch(out.views);
  return out;
}

std::string serialize_inclusion_report(const std::vector<ViewReport>& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& r : report) {
    out << "view " << r.index << " included " << (r.included ? 1 : 0) << " rho_intensity "
        << r.rho_intensity << " rho_vessel " << r.rho_vessel;
    if (!r.reason.empty()) out << " reason \"" << r.reason << '"';
    out << '\n';
  }
  return out.str();
}

}  // namespace retmosaic
