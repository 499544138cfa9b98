#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retmosaic/image.hpp"

namespace retmosaic {

/// Motion model order; each level frees a superset of the previous one's
/// parameters.
enum class MotionModel { Translation, Affine, Quadratic };

const char* to_string(MotionModel m);

/// 12-parameter quadratic map
///
///   u' = P * (u1^2, u2^2, u1*u2, u1, u2, 1)^T,   P in R^{2x6},
///
/// stored row-major (p[0..5] is the first row). Throughout the library the
/// map goes from reference (mosaic) coordinates to the coordinates of the
/// view being registered, so a view is resampled onto the reference grid by
/// inverse warping with this map directly.
class QuadraticTransform {
public:
  static constexpr std::size_t kParams = 12;
  using Params = std::array<double, kParams>;

  QuadraticTransform();  // identity
  explicit QuadraticTransform(const Params& p);

  static QuadraticTransform identity() { return {}; }
  static QuadraticTransform translation(Point2 t);
  /// Affine map u' = A u + b.
  static QuadraticTransform affine(double a11, double a12, double b1, double a21, double a22,
                                   double b2);

  const Params& params() const noexcept { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }
  double& operator[](std::size_t i) { return p_[i]; }

  Point2 apply(Point2 u) const;

  /// 2x2 derivative of the map with respect to u.
  std::array<double, 4> spatial_jacobian(Point2 u) const;

  /// Quadratic coefficients (columns 1-3) are zero.
  bool is_affine() const noexcept;
  /// Affine with identity linear part.
  bool is_translation() const noexcept;

  /// Q_s(u) = s * Q(u / s): the same map expressed on an image scaled by s.
  QuadraticTransform scaled(double s) const;

  /// Same map after the coordinate changes u = s_in*v + c_in on the input side
  /// and w = s_out*w' + c_out on the output side.
  QuadraticTransform conjugated(double s_in, Point2 c_in, double s_out, Point2 c_out) const;

  /// Solves apply(u) = target by Newton iteration from the affine inverse;
  /// nullopt when it fails to converge.
  std::optional<Point2> invert(Point2 target) const;

  friend bool operator==(const QuadraticTransform&, const QuadraticTransform&) = default;

private:
  Params p_{};
};

Point2 quad_apply(const QuadraticTransform& t, Point2 u);

/// d apply(u) / d p as a 2x12 matrix (row-major: [row][param]).
std::array<std::array<double, 12>, 2> quad_jacobian(Point2 u);

/// Plain-text form: one header line naming the parameter order, then the 12
/// values (two rows of six) at full precision.
std::string serialize_transform(const QuadraticTransform& t);
QuadraticTransform parse_transform(const std::string& text);
void write_transform(const std::filesystem::path& path, const QuadraticTransform& t);
QuadraticTransform read_transform(const std::filesystem::path& path);

struct EccOptions {
  int max_iters = 50;
  double tol = 1e-3;           // max corner displacement of an update, px
  double gradient_sigma = 1.0;  // pre-blur for gradients and sampling
  int max_step_halvings = 8;
  double min_overlap = 0.10;  // fraction of fixed-image area
};

struct EccResult {
  QuadraticTransform transform;
  double rho = 0.0;
  int iterations = 0;
  bool converged = false;          // update fell below tol
  std::vector<double> rho_trace;   // rho after each accepted iteration (and the start)
};

/// Forward-additive ECC maximizing the correlation between `fixed` and
/// `moving` resampled through the transform (fixed -> moving coordinates).
/// Only the parameters free at `level` move. Coordinates are normalized to
/// [-1,1]^2 internally. Throws Error(Numerical) on singular normal equations
/// ("degenerate texture") or when the overlap drops below min_overlap
/// ("insufficient overlap").
EccResult ecc_register(const ImageGray& moving, const ImageGray& fixed,
                       const QuadraticTransform& init, MotionModel level,
                       const EccOptions& opts = {});

/// ecc_register run coarse-to-fine on `levels`-level Gaussian pyramids.
EccResult ecc_register_pyramid(const ImageGray& moving, const ImageGray& fixed,
                               const QuadraticTransform& init, MotionModel level, int levels,
                               const EccOptions& opts = {});

struct HierarchicalOptions {
  int pyramid_levels = 3;
  EccOptions ecc{};
  double min_rho = 0.3;  // below this the result is reported as not converged
};

struct RegistrationResult {
  QuadraticTransform transform;
  double final_rho = 0.0;
  std::vector<double> rho_per_level;  // translation, affine, quadratic
  std::vector<int> iterations;        // per stage, summed over pyramid levels
  bool converged = false;
  std::string note;  // why converged is false, or which stage was kept
};

/// Translation -> affine -> quadratic registration of `view` to `reference`
/// (both at super-resolved scale), initialized from tracked eye positions
/// given in low-resolution pixels: t = magnification * (u_view - u_ref).
RegistrationResult hierarchical_register(const ImageGray& view, const ImageGray& reference,
                                         Point2 u_view, Point2 u_ref, int magnification,
                                         const HierarchicalOptions& opts = {});

/// Non-decreasing 256-entry map from source level to target intensity.
struct MonotoneLUT {
  std::array<double, 256> value{};

  double apply(double v) const;
};

struct HistogramMatch {
  ImageGray image;
  MonotoneLUT lut;
};

/// CDF matching with LUT nodes at the 256 bin centres: each node maps to the
/// reference quantile of the source's empirical CDF there; nodes outside the
/// source range continue from the end quantiles with unit slope. Optional masks
/// restrict which pixels feed the CDFs; the LUT is applied to every source pixel.
HistogramMatch histogram_match(const ImageGray& src, const ImageGray& ref,
                               const PixelMask* src_mask = nullptr,
                               const PixelMask* ref_mask = nullptr);

}  // namespace retmosaic
