#include "retmosaic/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/filters.hpp"
#include "retmosaic/sampling.hpp"

namespace retmosaic {

const char* to_string(MotionModel m) {
  switch (m) {
    case MotionModel::Translation: return "translation";
    case MotionModel::Affine: return "affine";
    case MotionModel::Quadratic: return "quadratic";
  }
  return "?";
}

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;

inline std::array<double, 6> monomials(Point2 u) {
  return {u.x * u.x, u.y * u.y, u.x * u.y, u.x, u.y, 1.0};
}

// phi(s*v + c) = M * phi(v)
Mat6 monomial_change(double s, Point2 c) {
  Mat6 m = Mat6::Zero();
  m(0, 0) = s * s;
  m(0, 3) = 2.0 * s * c.x;
  m(0, 5) = c.x * c.x;
  m(1, 1) = s * s;
  m(1, 4) = 2.0 * s * c.y;
  m(1, 5) = c.y * c.y;
  m(2, 2) = s * s;
  m(2, 3) = s * c.y;
  m(2, 4) = s * c.x;
  m(2, 5) = c.x * c.y;
  m(3, 3) = s;
  m(3, 5) = c.x;
  m(4, 4) = s;
  m(4, 5) = c.y;
  m(5, 5) = 1.0;
  return m;
}

}  // namespace

QuadraticTransform::QuadraticTransform() { p_ = {0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0}; }

QuadraticTransform::QuadraticTransform(const Params& p) : p_(p) {
  for (double v : p_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Numerical, "non-finite transform parameter");
  }
}

QuadraticTransform QuadraticTransform::translation(Point2 t) {
  return QuadraticTransform(Params{0, 0, 0, 1, 0, t.x, 0, 0, 0, 0, 1, t.y});
}

QuadraticTransform QuadraticTransform::affine(double a11, double a12, double b1, double a21,
                                              double a22, double b2) {
  return QuadraticTransform(Params{0, 0, 0, a11, a12, b1, 0, 0, 0, a21, a22, b2});
}

Point2 QuadraticTransform::apply(Point2 u) const {
  const auto m = monomials(u);
  double x = 0.0;
  double y = 0.0;
  for (std::size_t j = 0; j < 6; ++j) {
    x += p_[j] * m[j];
    y += p_[6 + j] * m[j];
  }
  return {x, y};
}

std::array<double, 4> QuadraticTransform::spatial_jacobian(Point2 u) const {
  return {2.0 * p_[0] * u.x + p_[2] * u.y + p_[3], 2.0 * p_[1] * u.y + p_[2] * u.x + p_[4],
          2.0 * p_[6] * u.x + p_[8] * u.y + p_[9], 2.0 * p_[7] * u.y + p_[8] * u.x + p_[10]};
}

bool QuadraticTransform::is_affine() const noexcept {
  return p_[0] == 0.0 && p_[1] == 0.0 && p_[2] == 0.0 && p_[6] == 0.0 && p_[7] == 0.0 &&
         p_[8] == 0.0;
}

bool QuadraticTransform::is_translation() const noexcept {
  return is_affine() && p_[3] == 1.0 && p_[4] == 0.0 && p_[9] == 0.0 && p_[10] == 1.0;
}

QuadraticTransform QuadraticTransform::scaled(double s) const {
  return conjugated(1.0 / s, Point2{}, 1.0 / s, Point2{});
}

QuadraticTransform QuadraticTransform::conjugated(double s_in, Point2 c_in, double s_out,
                                                  Point2 c_out) const {
  Eigen::Matrix<double, 2, 6> p;
  for (int j = 0; j < 6; ++j) {
    p(0, j) = p_[static_cast<std::size_t>(j)];
    p(1, j) = p_[static_cast<std::size_t>(6 + j)];
  }
  Eigen::Matrix<double, 2, 6> q = p * monomial_change(s_in, c_in);
  q(0, 5) -= c_out.x;
  q(1, 5) -= c_out.y;
  q /= s_out;
  Params out{};
  for (int j = 0; j < 6; ++j) {
    out[static_cast<std::size_t>(j)] = q(0, j);
    out[static_cast<std::size_t>(6 + j)] = q(1, j);
  }
  return QuadraticTransform(out);
}

std::optional<Point2> QuadraticTransform::invert(Point2 target) const {
  const double det0 = p_[3] * p_[10] - p_[4] * p_[9];
  if (std::abs(det0) < 1e-12) return std::nullopt;
  // Affine inverse as the starting point.
  const double rx = target.x - p_[5];
  const double ry = target.y - p_[11];
  Point2 u{(p_[10] * rx - p_[4] * ry) / det0, (-p_[9] * rx + p_[3] * ry) / det0};
  for (int it = 0; it < 50; ++it) {
    const Point2 f = apply(u) - target;
    if (std::hypot(f.x, f.y) < 1e-10) return u;
    const auto j = spatial_jacobian(u);
    const double det = j[0] * j[3] - j[1] * j[2];
    if (std::abs(det) < 1e-12) return std::nullopt;
    u.x -= (j[3] * f.x - j[1] * f.y) / det;
    u.y -= (-j[2] * f.x + j[0] * f.y) / det;
    if (!std::isfinite(u.x) || !std::isfinite(u.y)) return std::nullopt;
  }
  const Point2 f = apply(u) - target;
  if (std::hypot(f.x, f.y) < 1e-6) return u;
  return std::nullopt;
}

Point2 quad_apply(const QuadraticTransform& t, Point2 u) { return t.apply(u); }

std::array<std::array<double, 12>, 2> quad_jacobian(Point2 u) {
  const auto m = monomials(u);
  std::array<std::array<double, 12>, 2> j{};
  for (std::size_t k = 0; k < 6; ++k) {
    j[0][k] = m[k];
    j[1][6 + k] = m[k];
  }
  return j;
}

std::string serialize_transform(const QuadraticTransform& t) {
  std::ostringstream out;
  out << "# quadratic u' = P (u1^2 u2^2 u1*u2 u1 u2 1)^T; row 1 = p1..p6, row 2 = p7..p12\n";
  out << std::setprecision(17);
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t j = 0; j < 6; ++j) {
      out << t[6 * r + j] << (j == 5 ? '\n' : ' ');
    }
  }
  return out.str();
}

QuadraticTransform parse_transform(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  QuadraticTransform::Params p{};
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (n >= p.size()) throw Error(ErrorKind::Io, "transform: more than 12 values");
      try {
        std::size_t used = 0;
        p[n] = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Io, "transform: bad number '" + tok + "'");
      }
      ++n;
    }
  }
  if (n != p.size()) throw Error(ErrorKind::Io, "transform: expected 12 values");
  return QuadraticTransform(p);
}

void write_transform(const std::filesystem::path& path, const QuadraticTransform& t) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << serialize_transform(t);
}

QuadraticTransform read_transform(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_transform(ss.str());
}

// ---------------------------------------------------------------------------
// ECC

namespace {

std::vector<std::size_t> free_params(MotionModel level) {
  switch (level) {
    case MotionModel::Translation: return {5, 11};
    case MotionModel::Affine: return {3, 4, 5, 9, 10, 11};
    case MotionModel::Quadratic: return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  }
  return {};
}

// Moving image prepared for repeated warping: blurred intensities and
// their central-difference gradients.
struct MovingImage {
  ImageGray value;
  Gradient grad;
};

// Samples of the warped moving image over the fixed grid.
struct WarpSamples {
  std::vector<double> value;
  std::vector<double> gx;
  std::vector<double> gy;
  std::vector<std::uint8_t> valid;
  std::size_t count = 0;
};

class EccProblem {
public:
  EccProblem(const ImageGray& moving, const ImageGray& fixed, const EccOptions& opts)
      : opts_(opts),
        fixed_(gaussian_blur(fixed, opts.gradient_sigma)),
        moving_{gaussian_blur(moving, opts.gradient_sigma), {}} {
    moving_.grad = central_gradient(moving_.value);
    const int w = fixed.width();
    const int h = fixed.height();
    center_ = {0.5 * (w - 1), 0.5 * (h - 1)};
    scale_ = std::max(0.5 * std::max(w - 1, h - 1), 1.0);
    norm_coords_.resize(fixed.size());
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        norm_coords_[fixed.index(x, y)] = {(x - center_.x) / scale_, (y - center_.y) / scale_};
      }
    }
  }

  QuadraticTransform to_normalized(const QuadraticTransform& t) const {
    return t.conjugated(scale_, center_, scale_, center_);
  }
  QuadraticTransform from_normalized(const QuadraticTransform& t) const {
    const Point2 c{-center_.x / scale_, -center_.y / scale_};
    return t.conjugated(1.0 / scale_, c, 1.0 / scale_, c);
  }

  // Warp with normalized parameters; fills samples.
  void sample(const QuadraticTransform& pn, WarpSamples& s) const {
    const std::size_t n = norm_coords_.size();
    s.value.assign(n, 0.0);
    s.gx.assign(n, 0.0);
    s.gy.assign(n, 0.0);
    s.valid.assign(n, 0);
    s.count = 0;
    const int mw = moving_.value.width();
    const int mh = moving_.value.height();
    const auto pv = moving_.value.pixels();
    const auto px = moving_.grad.dx.pixels();
    const auto py = moving_.grad.dy.pixels();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2 qn = pn.apply(norm_coords_[i]);
      const Point2 q{scale_ * qn.x + center_.x, scale_ * qn.y + center_.y};
      const auto st = bilinear_stencil(mw, mh, q);
      if (!st) continue;
      double v = 0.0;
      double gx = 0.0;
      double gy = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        v += st->weight[k] * pv[st->index[k]];
        gx += st->weight[k] * px[st->index[k]];
        gy += st->weight[k] * py[st->index[k]];
      }
      s.value[i] = v;
      s.gx[i] = gx;
      s.gy[i] = gy;
      s.valid[i] = 1;
      ++s.count;
    }
  }

  void require_overlap(const WarpSamples& s) const {
    if (static_cast<double>(s.count) < opts_.min_overlap * static_cast<double>(fixed_.size()) ||
        s.count < 16) {
      throw Error(ErrorKind::Numerical, "ecc: insufficient overlap");
    }
  }

  double rho(const WarpSamples& s) const {
    const auto t = fixed_.pixels();
    double st = 0.0;
    double si = 0.0;
    for (std::size_t i = 0; i < s.valid.size(); ++i) {
      if (!s.valid[i]) continue;
      st += t[i];
      si += s.value[i];
    }
    const double n = static_cast<double>(s.count);
    const double mt = st / n;
    const double mi = si / n;
    double tt = 0.0;
    double ii = 0.0;
    double ti = 0.0;
    for (std::size_t i = 0; i < s.valid.size(); ++i) {
      if (!s.valid[i]) continue;
      const double a = t[i] - mt;
      const double b = s.value[i] - mi;
      tt += a * a;
      ii += b * b;
      ti += a * b;
    }
    if (tt <= 0.0 || ii <= 0.0) throw Error(ErrorKind::Numerical, "ecc: degenerate texture");
    return ti / std::sqrt(tt * ii);
  }

  // ECC increment for the free parameters (normalized units).
  Eigen::VectorXd increment(const WarpSamples& s, const std::vector<std::size_t>& free) const {
    const auto t = fixed_.pixels();
    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
    double st = 0.0;
    double si = 0.0;
    for (std::size_t i = 0; i < s.valid.size(); ++i) {
      if (!s.valid[i]) continue;
      st += t[i];
      si += s.value[i];
    }
    const double n = static_cast<double>(s.count);
    const double mt = st / n;
    const double mi = si / n;

    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(nf, nf);
    Eigen::VectorXd proj_i = Eigen::VectorXd::Zero(nf);
    Eigen::VectorXd proj_t = Eigen::VectorXd::Zero(nf);
    double ii = 0.0;
    double tt = 0.0;
    double ti = 0.0;
    Eigen::VectorXd sd(nf);
    for (std::size_t i = 0; i < s.valid.size(); ++i) {
      if (!s.valid[i]) continue;
      const auto m = monomials(norm_coords_[i]);
      for (Eigen::Index k = 0; k < nf; ++k) {
        const std::size_t pidx = free[static_cast<std::size_t>(k)];
        const double g = pidx < 6 ? s.gx[i] : s.gy[i];
        sd(k) = scale_ * g * m[pidx % 6];
      }
      const double tv = t[i] - mt;
      const double iv = s.value[i] - mi;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(sd);
      proj_i += iv * sd;
      proj_t += tv * sd;
      ii += iv * iv;
      tt += tv * tv;
      ti += tv * iv;
    }
    hess.triangularView<Eigen::StrictlyUpper>() = hess.transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
    const double emax = eig.eigenvalues().maxCoeff();
    const double emin = eig.eigenvalues().minCoeff();
    if (!(emax > 0.0) || emin <= 1e-12 * emax) {
      throw Error(ErrorKind::Numerical, "ecc: degenerate texture (singular normal equations)");
    }
    const Eigen::LDLT<Eigen::MatrixXd> solver(hess);
    const Eigen::VectorXd hinv_pi = solver.solve(proj_i);
    const Eigen::VectorXd hinv_pt = solver.solve(proj_t);

    // Evangelidis & Psarakis scaling of the template.
    const double num = ii - proj_i.dot(hinv_pi);
    const double den = ti - proj_t.dot(hinv_pi);
    double lambda = 0.0;
    if (den > 0.0) {
      lambda = num / den;
    } else {
      const double l1 = std::sqrt(std::max(num, 0.0) / std::max(tt - proj_t.dot(hinv_pt), 1e-300));
      const double l2 = (proj_i.dot(hinv_pt) - ti) / std::max(proj_t.dot(hinv_pt), 1e-300);
      lambda = std::max(l1, l2);
    }
    // Delta p = H^-1 G^T (lambda t - i)
    return solver.solve(lambda * proj_t - proj_i);
  }

  // Largest displacement of the four fixed-image corners caused by adding
  // `delta` (normalized) to the free parameters, in pixels.
  double corner_shift(const Eigen::VectorXd& delta, const std::vector<std::size_t>& free) const {
    double worst = 0.0;
    for (const Point2 c : {Point2{-1, -1}, Point2{1, -1}, Point2{-1, 1}, Point2{1, 1}}) {
      const Point2 corner{c.x * center_.x / scale_, c.y * center_.y / scale_};
      const auto m = monomials(corner);
      double dx = 0.0;
      double dy = 0.0;
      for (std::size_t k = 0; k < free.size(); ++k) {
        const double d = delta(static_cast<Eigen::Index>(k)) * m[free[k] % 6];
        if (free[k] < 6) {
          dx += d;
        } else {
          dy += d;
        }
      }
      worst = std::max(worst, scale_ * std::hypot(dx, dy));
    }
    return worst;
  }

private:
  EccOptions opts_;
  ImageGray fixed_;
  MovingImage moving_;
  Point2 center_;
  double scale_ = 1.0;
  std::vector<Point2> norm_coords_;
};

}  // namespace

EccResult ecc_register(const ImageGray& moving, const ImageGray& fixed,
                       const QuadraticTransform& init, MotionModel level,
                       const EccOptions& opts) {
  if (moving.empty() || fixed.empty()) throw Error(ErrorKind::Config, "ecc: empty image");
  const EccProblem problem(moving, fixed, opts);
  const auto free = free_params(level);

  QuadraticTransform pn = problem.to_normalized(init);
  WarpSamples cur;
  problem.sample(pn, cur);
  problem.require_overlap(cur);
  double rho = problem.rho(cur);

  EccResult result;
  result.rho_trace.push_back(rho);
  WarpSamples cand;
  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::VectorXd delta = problem.increment(cur, free);
    if (!delta.allFinite()) throw Error(ErrorKind::Numerical, "ecc: non-finite update");
    bool accepted = false;
    for (int h = 0; h <= opts.max_step_halvings; ++h) {
      QuadraticTransform trial = pn;
      for (std::size_t k = 0; k < free.size(); ++k) {
        trial[free[k]] += delta(static_cast<Eigen::Index>(k));
      }
      problem.sample(trial, cand);
      if (static_cast<double>(cand.count) >= opts.min_overlap * static_cast<double>(fixed.size()) &&
          cand.count >= 16) {
        const double r = problem.rho(cand);
        if (r >= rho) {
          pn = trial;
          rho = r;
          std::swap(cur, cand);
          accepted = true;
          break;
        }
      }
      delta *= 0.5;
    }
    if (!accepted) {
      // No ascent direction left at this resolution.
      result.converged = true;
      break;
    }
    ++result.iterations;
    result.rho_trace.push_back(rho);
    if (problem.corner_shift(delta, free) < opts.tol) {
      result.converged = true;
      break;
    }
  }
  result.transform = problem.from_normalized(pn);
  result.rho = rho;
  return result;
}

EccResult ecc_register_pyramid(const ImageGray& moving, const ImageGray& fixed,
                               const QuadraticTransform& init, MotionModel level, int levels,
                               const EccOptions& opts) {
  if (levels < 1) throw Error(ErrorKind::Config, "ecc: pyramid levels must be >= 1");
  const auto pm = gaussian_pyramid(moving, levels);
  const auto pf = gaussian_pyramid(fixed, levels);
  QuadraticTransform t = init;
  EccResult total;
  for (int l = levels - 1; l >= 0; --l) {
    const double s = std::ldexp(1.0, -l);
    const EccResult r = ecc_register(pm[static_cast<std::size_t>(l)],
                                     pf[static_cast<std::size_t>(l)], t.scaled(s), level, opts);
    t = r.transform.scaled(1.0 / s);
    total.iterations += r.iterations;
    total.rho = r.rho;
    total.converged = r.converged;
    total.rho_trace = r.rho_trace;
  }
  total.transform = t;
  return total;
}

RegistrationResult hierarchical_register(const ImageGray& view, const ImageGray& reference,
                                         Point2 u_view, Point2 u_ref, int magnification,
                                         const HierarchicalOptions& opts) {
  if (magnification < 1) throw Error(ErrorKind::Config, "magnification must be >= 1");
  RegistrationResult out;
  const Point2 t = static_cast<double>(magnification) * (u_view - u_ref);
  QuadraticTransform current = QuadraticTransform::translation(t);
  double current_rho = -std::numeric_limits<double>::infinity();

  for (const MotionModel level :
       {MotionModel::Translation, MotionModel::Affine, MotionModel::Quadratic}) {
    EccResult r;
    try {
      r = ecc_register_pyramid(view, reference, current, level, opts.pyramid_levels, opts.ecc);
    } catch (const Error& e) {
      if (level != MotionModel::Quadratic) throw;
      out.transform = current;
      out.final_rho = current_rho;
      out.converged = false;
      out.note = std::string("quadratic stage failed (") + e.what() + "); affine result kept";
      return out;
    }
    out.iterations.push_back(r.iterations);
    if (r.rho >= current_rho) {
      current = r.transform;
      current_rho = r.rho;
    } else {
      out.note = std::string(to_string(level)) + " stage did not improve rho; previous kept";
    }
    out.rho_per_level.push_back(current_rho);
  }
  out.transform = current;
  out.final_rho = current_rho;
  out.converged = current_rho >= opts.min_rho;
  if (!out.converged) out.note = "final correlation below acceptance threshold";
  return out;
}

// ---------------------------------------------------------------------------
// Histogram matching

double MonotoneLUT::apply(double v) const {
  const double t = v * 256.0 - 0.5;
  if (t <= 0.0) return value[0];
  if (t >= 255.0) return value[255];
  const auto i = static_cast<std::size_t>(t);
  const double f = t - static_cast<double>(i);
  return (1.0 - f) * value[i] + f * value[i + 1];
}

namespace {

std::vector<double> sorted_values(const ImageGray& img, const PixelMask* mask) {
  std::vector<double> v;
  v.reserve(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (!mask || mask->at(i)) v.push_back(px[i]);
  }
  std::sort(v.begin(), v.end());
  if (v.size() < 2 || !(v.back() > v.front())) {
    throw Error(ErrorKind::Numerical, "histogram_match: constant or empty image");
  }
  return v;
}

}  // namespace

HistogramMatch histogram_match(const ImageGray& src, const ImageGray& ref,
                               const PixelMask* src_mask, const PixelMask* ref_mask) {
  if ((src_mask && !same_shape(src, *src_mask)) || (ref_mask && !same_shape(ref, *ref_mask))) {
    throw Error(ErrorKind::Config, "histogram_match: mask dimension mismatch");
  }
  const std::vector<double> r = sorted_values(ref, ref_mask);
  const std::vector<double> s = sorted_values(src, src_mask);
  const double ns = static_cast<double>(s.size());
  const double nr = static_cast<double>(r.size());

  // Empirical CDFs evaluated at the 256 bin centres.
  HistogramMatch out;
  for (std::size_t i = 0; i < 256; ++i) {
    const double c = (static_cast<double>(i) + 0.5) / 256.0;
    const auto lo = std::lower_bound(s.begin(), s.end(), c);
    const auto hi = std::upper_bound(lo, s.end(), c);
    const double f = 0.5 * static_cast<double>((lo - s.begin()) + (hi - s.begin())) / ns;
    const double pos = std::clamp(f * nr - 0.5, 0.0, nr - 1.0);
    const auto j = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(j);
    double v = j + 1 < r.size() ? (1.0 - t) * r[j] + t * r[j + 1] : r[j];
    if (c < s.front()) v = r.front() - (s.front() - c);
    if (c > s.back()) v = r.back() + (c - s.back());
    if (i > 0) v = std::max(v, out.lut.value[i - 1]);
    out.lut.value[i] = v;
  }
  out.image = ImageGray(src.width(), src.height());
  const auto in = src.pixels();
  auto dst = out.image.pixels();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = out.lut.apply(in[i]);
  return out;
}

}  // namespace retmosaic
