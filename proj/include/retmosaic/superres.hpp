#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "retmosaic/image.hpp"
#include "retmosaic/registration.hpp"
#include "retmosaic/sampling.hpp"

namespace retmosaic {

/// u' = A u + b in low-resolution pixels; maps a frame's coordinates to the
/// coordinates of the view's first frame.
struct AffineMotion {
  double a11 = 1.0, a12 = 0.0, b1 = 0.0;
  double a21 = 0.0, a22 = 1.0, b2 = 0.0;

  static AffineMotion identity() { return {}; }
  static AffineMotion from(const QuadraticTransform& t);  // drops quadratic terms

  Point2 apply(Point2 u) const { return {a11 * u.x + a12 * u.y + b1, a21 * u.x + a22 * u.y + b2}; }
  double det() const { return a11 * a22 - a12 * a21; }
  QuadraticTransform as_transform() const;

  /// The same motion on the high-resolution grid, where low-res pixel u has
  /// its centre at m*u + (m-1)/2.
  AffineMotion to_high_res(int magnification) const;
};

/// Per-frame photometric parameters: y ~ gain (.) (W x) + offset.
struct Illumination {
  ImageGray gain;  // low-res sized, strictly positive
  double offset = 0.0;
};

struct ObservationModel {
  int magnification = 2;
  double psf_sigma = 0.8;  // high-res pixels
  int low_width = 0;
  int low_height = 0;
  std::vector<AffineMotion> motions;
  std::vector<Illumination> illumination;  // may be empty: unit gain, zero offset
  std::vector<bool> usable;                // may be empty: all usable

  int high_width() const { return magnification * low_width; }
  int high_height() const { return magnification * low_height; }
  std::size_t frames() const { return motions.size(); }
  bool frame_usable(std::size_t k) const { return usable.empty() || usable[k]; }

  /// Throws Error(Config) when invariants are violated.
  void validate() const;
};

struct Prediction {
  ImageGray image;   // low-res
  PixelMask valid;   // low-res pixels whose footprint stayed inside x
};

/// W_k x: warp by the frame's motion, Gaussian PSF, block-average decimation.
Prediction apply_system(const ImageGray& x, const ObservationModel& model, std::size_t k);

/// W_k^T r: exact adjoint of apply_system's linear map (validity ignored).
ImageGray apply_system_adjoint(const ImageGray& r, const ObservationModel& model,
                               std::size_t k);

/// Precomputed form of W_k for repeated application inside the solver.
class FrameOperator {
public:
  FrameOperator(const ObservationModel& model, std::size_t k);

  Prediction apply(const ImageGray& x) const;
  ImageGray adjoint(const ImageGray& r) const;

private:
  int m_;
  double psf_;
  int hw_, hh_, lw_, lh_;
  std::vector<std::optional<BilinearStencil>> stencils_;
  PixelMask valid_;
};

/// Bilateral total variation with Charbonnier penalty phi(t) = sqrt(t^2+eps^2) - eps
/// over the half-plane of shifts |l|,|m| <= radius, weight alpha^(|l|+|m|).
struct BtvValue {
  double value = 0.0;
  ImageGray gradient;
};
BtvValue btv_value_grad(const ImageGray& x, int radius, double alpha, double eps);

struct SRConfig {
  double lambda = 0.01;
  int btv_radius = 2;
  double btv_alpha = 0.7;
  double charbonnier_eps = 1e-3;
  int max_scg_iters = 40;
  double grad_tol = 1e-3;

  void validate() const;
};

struct SRResult {
  ImageGray image;
  double final_objective = 0.0;
  int iterations_used = 0;
  double lambda_used = 0.0;
  std::vector<double> objective_trace;  // value after each accepted iteration (index 0: x0)
  std::vector<double> grad_norm_trace;
};

/// Optional per-iteration hook: (iteration, objective, gradient norm).
using SolverLog = std::function<void(int, double, double)>;

/// Minimizes sum_k || y_k - gamma_m,k (.) W_k x - gamma_a,k ||_1 + lambda * BTV(x)
/// (L1 smoothed by Charbonnier) with scaled conjugate gradients.
SRResult solve_sr(const std::vector<ImageGray>& frames, const ObservationModel& model,
                  const SRConfig& cfg, const ImageGray& x0, const SolverLog& log = {});

/// Bilinear upsampling consistent with the block-centre convention.
ImageGray upsample_bilinear(const ImageGray& low, int magnification);

struct MotionEstimate {
  std::vector<AffineMotion> motions;
  std::vector<bool> usable;
  std::vector<double> rho;
};

/// Affine ECC of every frame against the first one (2-level pyramid). Frames
/// whose registration fails or ends with rho < 0.3 are flagged unusable;
/// throws when fewer than two usable frames remain.
MotionEstimate estimate_frame_motion(const std::vector<ImageGray>& frames);

/// gamma_a: median of (frame - g*ref) with g the least-squares gain;
/// gamma_m: smoothed (frame - gamma_a) over smoothed ref, both floored at
/// 0.05, clamped to [0.5, 2]. Optional mask restricts the fit.
Illumination estimate_illumination(const ImageGray& frame, const ImageGray& reference_warped,
                                   double smooth_sigma, const PixelMask* mask = nullptr);

/// Sharpness over noise: mean gradient magnitude of the top decile divided by
/// 1 + robust Laplacian noise estimate, both in 8-bit gray levels.
double sr_quality(const ImageGray& x);

struct ViewSrOptions {
  int magnification = 2;
  double psf_sigma = 0.8;
  double illumination_sigma = 16.0;  // low-res px
  SRConfig sr{};
};

struct ViewReconstruction {
  SRResult result;
  ObservationModel model;
  MotionEstimate motion;
};

/// Model building for one view: motion, illumination, x0, then solve_sr.
ObservationModel build_observation_model(const std::vector<ImageGray>& frames,
                                         const MotionEstimate& motion, int magnification,
                                         double psf_sigma, double illumination_sigma);

ViewReconstruction reconstruct_view(const std::vector<ImageGray>& frames,
                                    const ViewSrOptions& opts, const SolverLog& log = {});

/// argmax over the grid of sr_quality(x(lambda)) with at most 30 solver
/// iterations per candidate.
double select_lambda(const std::vector<ImageGray>& frames, const ObservationModel& model,
                     const SRConfig& cfg_template, const std::vector<double>& lambda_grid);

/// Default grid: 7 log-spaced values from 1e-3 to 1.
std::vector<double> default_lambda_grid();

}  // namespace retmosaic
