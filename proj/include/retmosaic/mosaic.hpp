#pragma once

#include <string>
#include <vector>

#include "retmosaic/filters.hpp"
#include "retmosaic/image.hpp"
#include "retmosaic/registration.hpp"

namespace retmosaic {

struct MosaicConfig {
  double rho_i_min = 0.5;
  double rho_v_min = 0.1;
  FrangiParams frangi{};

  void validate() const;
};

/// Common pixel domain: canvas pixel c corresponds to reference position
/// c - offset.
struct Canvas {
  int width = 0;
  int height = 0;
  Point2 offset;
};

/// Bounding box (padded by 2 px) of every view's boundary mapped into
/// reference coordinates. transforms[i] maps reference -> view i coordinates
/// (identity for the reference itself).
Canvas compute_canvas(const std::vector<QuadraticTransform>& transforms, int view_width,
                      int view_height);

/// A view resampled onto the canvas together with its vesselness response
/// and its own distance map.
struct CanvasView {
  ImageGray image;
  PixelMask mask;
  ImageGray vesselness;
  ImageGray kappa;
};

CanvasView warp_to_canvas(const ImageGray& view, const QuadraticTransform& transform,
                          const Canvas& canvas, const FrangiParams& frangi);

struct GateResult {
  bool included = false;
  double rho_intensity = 0.0;
  double rho_vessel = 0.0;
  std::string reason;  // empty when included
};

/// Correlation of intensities and of vesselness over the overlap with the
/// reference; included iff both exceed their thresholds (strictly).
GateResult gate_view(const CanvasView& view, const CanvasView& reference,
                     const MosaicConfig& cfg);

/// w(u) = mask(u) * kappa(u) * rho_vessel when included, else 0.
ImageGray compute_weights(const PixelMask& mask, const GateResult& gate, const ImageGray& kappa);

struct RegisteredView {
  ImageGray image;
  PixelMask mask;
  ImageGray weight;
  double rho_intensity = 0.0;
  double rho_vessel = 0.0;
  bool included = false;
  std::string reason;
};

struct ViewReport {
  std::size_t index = 0;
  bool included = false;
  double rho_intensity = 0.0;
  double rho_vessel = 0.0;
  std::string reason;
};

struct MosaicResult {
  ImageGray z;
  PixelMask coverage;
  std::vector<ViewReport> report;
};

/// Per-pixel weighted mean of the included views. Contributions are summed
/// in sorted (weight, value) order, so the result does not depend on view
/// order. Covered pixels whose weights are all zero take the unweighted
/// mean. Throws Error(Quality) when no view is included.
MosaicResult stitch(const std::vector<RegisteredView>& views);

/// Canvas, photometric matching against the reference over the overlap,
/// gating, weighting and stitching of super-resolved views.
/// transforms[reference] is ignored (identity).
struct MosaicBuild {
  Canvas canvas;
  MosaicResult mosaic;
  std::vector<RegisteredView> views;
};
MosaicBuild build_mosaic(const std::vector<ImageGray>& views,
                         const std::vector<QuadraticTransform>& transforms,
                         std::size_t reference, const MosaicConfig& cfg);

std::string serialize_inclusion_report(const std::vector<ViewReport>& report);

}  // namespace retmosaic
