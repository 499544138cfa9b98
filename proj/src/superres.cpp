#include "retmosaic/superres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "retmosaic/error.hpp"
#include "retmosaic/filters.hpp"

namespace retmosaic {

AffineMotion AffineMotion::from(const QuadraticTransform& t) {
  return {t[3], t[4], t[5], t[9], t[10], t[11]};
}

QuadraticTransform AffineMotion::as_transform() const {
  return QuadraticTransform::affine(a11, a12, b1, a21, a22, b2);
}

AffineMotion AffineMotion::to_high_res(int magnification) const {
  const double m = magnification;
  const double c = 0.5 * (m - 1.0);
  AffineMotion h = *this;
  h.b1 = m * b1 + c - (a11 * c + a12 * c);
  h.b2 = m * b2 + c - (a21 * c + a22 * c);
  return h;
}

void ObservationModel::validate() const {
  if (magnification < 1) throw Error(ErrorKind::Config, "magnification must be >= 1");
  if (!(psf_sigma >= 0.0)) throw Error(ErrorKind::Config, "psf_sigma must be >= 0");
  if (low_width < 1 || low_height < 1) throw Error(ErrorKind::Config, "empty frame geometry");
  if (!illumination.empty() && illumination.size() != motions.size()) {
    throw Error(ErrorKind::Config, "one illumination entry per frame required");
  }
  if (!usable.empty() && usable.size() != motions.size()) {
    throw Error(ErrorKind::Config, "one usable flag per frame required");
  }
  for (const auto& m : motions) {
    if (std::abs(m.det()) <= 1e-8) throw Error(ErrorKind::Config, "singular frame motion");
  }
  for (const auto& il : illumination) {
    if (il.gain.width() != low_width || il.gain.height() != low_height) {
      throw Error(ErrorKind::Config, "illumination gain must be frame-sized");
    }
    for (double g : il.gain.pixels()) {
      if (!(g > 0.0)) throw Error(ErrorKind::Config, "illumination gain must be positive");
    }
  }
}

// ---------------------------------------------------------------------------
// Observation operator

FrameOperator::FrameOperator(const ObservationModel& model, std::size_t k)
    : m_(model.magnification),
      psf_(model.psf_sigma),
      hw_(model.high_width()),
      hh_(model.high_height()),
      lw_(model.low_width),
      lh_(model.low_height) {
  if (k >= model.motions.size()) throw Error(ErrorKind::Config, "frame index out of range");
  const AffineMotion hm = model.motions[k].to_high_res(m_);
  stencils_.resize(static_cast<std::size_t>(hw_) * static_cast<std::size_t>(hh_));
  PixelMask inside(hw_, hh_);
  for (int y = 0; y < hh_; ++y) {
    for (int x = 0; x < hw_; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(hw_) +
                            static_cast<std::size_t>(x);
      stencils_[i] = bilinear_stencil(hw_, hh_, hm.apply({static_cast<double>(x),
                                                          static_cast<double>(y)}));
      inside.set(i, stencils_[i].has_value());
    }
  }
  const int r = static_cast<int>(gaussian_kernel(psf_).size() / 2);
  const PixelMask core = erode(inside, r);
  valid_ = PixelMask(lw_, lh_);
  for (int y = 0; y < lh_; ++y) {
    for (int x = 0; x < lw_; ++x) {
      bool ok = true;
      for (int dy = 0; ok && dy < m_; ++dy) {
        for (int dx = 0; ok && dx < m_; ++dx) ok = core(m_ * x + dx, m_ * y + dy);
      }
      valid_.set(x, y, ok);
    }
  }
}

Prediction FrameOperator::apply(const ImageGray& x) const {
  if (x.width() != hw_ || x.height() != hh_) {
    throw Error(ErrorKind::Config, "apply_system: x has wrong dimensions");
  }
  ImageGray warped(hw_, hh_);
  const auto src = x.pixels();
  auto dst = warped.pixels();
  for (std::size_t i = 0; i < stencils_.size(); ++i) {
    const auto& s = stencils_[i];
    if (!s) continue;
    dst[i] = s->weight[0] * src[s->index[0]] + s->weight[1] * src[s->index[1]] +
             s->weight[2] * src[s->index[2]] + s->weight[3] * src[s->index[3]];
  }
  const ImageGray blurred = gaussian_blur(warped, psf_);
  Prediction out{ImageGray(lw_, lh_), valid_};
  const double inv = 1.0 / (m_ * m_);
  for (int y = 0; y < lh_; ++y) {
    for (int x = 0; x < lw_; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < m_; ++dy) {
        for (int dx = 0; dx < m_; ++dx) acc += blurred(m_ * x + dx, m_ * y + dy);
      }
      out.image(x, y) = acc * inv;
    }
  }
  return out;
}

ImageGray FrameOperator::adjoint(const ImageGray& r) const {
  if (r.width() != lw_ || r.height() != lh_) {
    throw Error(ErrorKind::Config, "apply_system_adjoint: r has wrong dimensions");
  }
  ImageGray spread(hw_, hh_);
  const double inv = 1.0 / (m_ * m_);
  for (int y = 0; y < lh_; ++y) {
    for (int x = 0; x < lw_; ++x) {
      const double v = r(x, y) * inv;
      for (int dy = 0; dy < m_; ++dy) {
        for (int dx = 0; dx < m_; ++dx) spread(m_ * x + dx, m_ * y + dy) = v;
      }
    }
  }
  const ImageGray back = gaussian_blur_transpose(spread, psf_);
  ImageGray out(hw_, hh_);
  const auto src = back.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < stencils_.size(); ++i) {
    const auto& s = stencils_[i];
    if (!s) continue;
    for (std::size_t j = 0; j < 4; ++j) dst[s->index[j]] += s->weight[j] * src[i];
  }
  return out;
}

Prediction apply_system(const ImageGray& x, const ObservationModel& model, std::size_t k) {
  return FrameOperator(model, k).apply(x);
}

ImageGray apply_system_adjoint(const ImageGray& r, const ObservationModel& model,
                               std::size_t k) {
  return FrameOperator(model, k).adjoint(r);
}

// ---------------------------------------------------------------------------
// Regularizer

BtvValue btv_value_grad(const ImageGray& x, int radius, double alpha, double eps) {
  if (radius < 1) throw Error(ErrorKind::Config, "btv radius must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Config, "btv alpha must be in (0,1]");
  if (!(eps > 0.0)) throw Error(ErrorKind::Config, "charbonnier eps must be > 0");
  const int w = x.width();
  const int h = x.height();
  BtvValue out{0.0, ImageGray(w, h)};
  const auto px = x.pixels();
  auto g = out.gradient.pixels();
  const double eps2 = eps * eps;
  for (int sm = 0; sm <= radius; ++sm) {
    for (int sl = -radius; sl <= radius; ++sl) {
      if (sm == 0 && sl <= 0) continue;
      const double c = std::pow(alpha, std::abs(sl) + sm);
      double acc = 0.0;
      const int x_lo = std::max(0, -sl);
      const int x_hi = std::min(w, w - sl);
      const std::size_t len = static_cast<std::size_t>(std::max(0, x_hi - x_lo));
      std::vector<double> dphi(len);
      std::vector<double> phi(len);
      for (int y = 0; y + sm < h; ++y) {
        const double* a = px.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                          static_cast<std::size_t>(x_lo);
        const double* b = px.data() + static_cast<std::size_t>(y + sm) * static_cast<std::size_t>(w) +
                          static_cast<std::size_t>(x_lo + sl);
        double* ga = g.data() + (a - px.data());
        double* gb = g.data() + (b - px.data());
        for (std::size_t t = 0; t < len; ++t) {
          const double d = a[t] - b[t];
          const double root = std::sqrt(d * d + eps2);
          phi[t] = root - eps;
          dphi[t] = c * d / root;
        }
        double part[4] = {0.0, 0.0, 0.0, 0.0};
        std::size_t t = 0;
        for (; t + 4 <= len; t += 4) {
          for (std::size_t q = 0; q < 4; ++q) part[q] += phi[t + q];
        }
        for (; t < len; ++t) part[0] += phi[t];
        acc += (part[0] + part[1]) + (part[2] + part[3]);
        for (std::size_t t = 0; t < len; ++t) ga[t] += dphi[t];
        for (std::size_t t = 0; t < len; ++t) gb[t] -= dphi[t];
      }
      out.value += c * acc;
    }
  }
  return out;
}

void SRConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::Config, "lambda must be >= 0");
  if (btv_radius < 1) throw Error(ErrorKind::Config, "btv_radius must be >= 1");
  if (!(btv_alpha > 0.0 && btv_alpha <= 1.0)) throw Error(ErrorKind::Config, "btv_alpha in (0,1]");
  if (!(charbonnier_eps > 0.0)) throw Error(ErrorKind::Config, "charbonnier_eps must be > 0");
  if (max_scg_iters < 0) throw Error(ErrorKind::Config, "max_scg_iters must be >= 0");
  if (!(grad_tol >= 0.0)) throw Error(ErrorKind::Config, "grad_tol must be >= 0");
}

// ---------------------------------------------------------------------------
// Solver

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

class SrObjective {
public:
  SrObjective(const std::vector<ImageGray>& frames, const ObservationModel& model,
              const SRConfig& cfg)
      : frames_(frames), model_(model), cfg_(cfg) {
    for (std::size_t k = 0; k < model.frames(); ++k) {
      if (!model.frame_usable(k)) continue;
      if (frames[k].width() != model.low_width || frames[k].height() != model.low_height) {
        throw Error(ErrorKind::Config, "frame dimensions disagree with the model");
      }
      ops_.emplace_back(k, FrameOperator(model, k));
    }
    if (ops_.empty()) throw Error(ErrorKind::Numerical, "solve_sr: all frames unusable");
  }

  // Value; gradient written when grad != nullptr.
  double evaluate(const ImageGray& x, ImageGray* grad) const {
    const double eps = cfg_.charbonnier_eps;
    const double eps2 = eps * eps;
    double f = 0.0;
    if (grad) *grad = ImageGray(x.width(), x.height());
    for (const auto& [k, op] : ops_) {
      const Prediction pred = op.apply(x);
      const auto y = frames_[k].pixels();
      const auto wx = pred.image.pixels();
      const bool lit = !model_.illumination.empty();
      const double offset = lit ? model_.illumination[k].offset : 0.0;
      ImageGray resid(model_.low_width, model_.low_height);
      auto rg = resid.pixels();
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (!pred.valid.at(i)) continue;
        const double gain = lit ? model_.illumination[k].gain.pixels()[i] : 1.0;
        const double r = y[i] - gain * wx[i] - offset;
        const double root = std::sqrt(r * r + eps2);
        f += root - eps;
        rg[i] = -gain * r / root;
      }
      if (grad) {
        const ImageGray back = op.adjoint(resid);
        auto gp = grad->pixels();
        const auto bp = back.pixels();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += bp[i];
      }
    }
    if (cfg_.lambda > 0.0) {
      const BtvValue reg = btv_value_grad(x, cfg_.btv_radius, cfg_.btv_alpha, eps);
      f += cfg_.lambda * reg.value;
      if (grad) {
        auto gp = grad->pixels();
        const auto rp = reg.gradient.pixels();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += cfg_.lambda * rp[i];
      }
    }
    if (!std::isfinite(f)) throw Error(ErrorKind::Numerical, "solve_sr: non-finite objective");
    return f;
  }

private:
  const std::vector<ImageGray>& frames_;
  const ObservationModel& model_;
  SRConfig cfg_;
  std::vector<std::pair<std::size_t, FrameOperator>> ops_;
};

ImageGray axpy(const ImageGray& x, double a, const ImageGray& p) {
  ImageGray out = x;
  auto o = out.pixels();
  const auto pp = p.pixels();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * pp[i];
  return out;
}

}  // namespace

SRResult solve_sr(const std::vector<ImageGray>& frames, const ObservationModel& model,
                  const SRConfig& cfg, const ImageGray& x0, const SolverLog& log) {
  model.validate();
  cfg.validate();
  if (frames.size() != model.frames()) {
    throw Error(ErrorKind::Config, "solve_sr: one motion per frame required");
  }
  if (x0.width() != model.high_width() || x0.height() != model.high_height()) {
    throw Error(ErrorKind::Config, "solve_sr: x0 must have high-resolution dimensions");
  }
  const SrObjective objective(frames, model, cfg);

  // Moller's scaled conjugate gradient with a step-halving safeguard so that
  // every accepted step strictly decreases the objective.
  constexpr double kSigma0 = 1e-4;
  constexpr int kRestart = 10;
  constexpr int kMaxHalvings = 20;
  constexpr int kMaxRejections = 5;

  ImageGray x = x0;
  ImageGray g;
  double f = objective.evaluate(x, &g);
  ImageGray r = axpy(ImageGray(g.width(), g.height()), -1.0, g);
  ImageGray p = r;
  const double g0 = std::sqrt(dot(r.pixels(), r.pixels()));

  SRResult res;
  res.lambda_used = cfg.lambda;
  res.objective_trace.push_back(f);
  res.grad_norm_trace.push_back(g0);
  if (log) log(0, f, g0);

  double scale = 1e-6;
  double scale_bar = 0.0;
  bool success = true;
  double delta = 0.0;
  int since_restart = 0;
  int rejections = 0;
  ImageGray grad_probe;

  for (int it = 0; it < cfg.max_scg_iters; ++it) {
    const double rnorm = std::sqrt(dot(r.pixels(), r.pixels()));
    if (rnorm == 0.0 || rnorm < cfg.grad_tol * g0) break;
    double pn2 = dot(p.pixels(), p.pixels());
    double mu = dot(p.pixels(), r.pixels());
    if (mu <= 0.0) {
      p = r;
      pn2 = dot(p.pixels(), p.pixels());
      mu = pn2;
      success = true;
      since_restart = 0;
    }
    if (success) {
      const double sigma = kSigma0 / std::sqrt(pn2);
      objective.evaluate(axpy(x, sigma, p), &grad_probe);
      const auto gp = grad_probe.pixels();
      const auto gc = g.pixels();
      const auto pp = p.pixels();
      double d = 0.0;
      for (std::size_t i = 0; i < gp.size(); ++i) d += pp[i] * (gp[i] - gc[i]);
      delta = d / sigma;
    }
    double dk = delta + (scale - scale_bar) * pn2;
    if (dk <= 0.0) {
      scale_bar = 2.0 * (scale - dk / pn2);
      dk = -dk + scale * pn2;
      scale = scale_bar;
    }
    const double alpha = mu / dk;

    double step = alpha;
    double f_full = std::numeric_limits<double>::quiet_NaN();
    double f_new = f;
    ImageGray x_new;
    bool decreased = false;
    for (int hv = 0; hv <= kMaxHalvings; ++hv) {
      x_new = axpy(x, step, p);
      f_new = objective.evaluate(x_new, nullptr);
      if (hv == 0) f_full = f_new;
      if (f_new < f) {
        decreased = true;
        break;
      }
      step *= 0.5;
    }
    const double comparison = 2.0 * dk * (f - f_full) / (mu * mu);

    if (decreased) {
      x = std::move(x_new);
      f = objective.evaluate(x, &g);
      ImageGray r_old = std::move(r);
      r = axpy(ImageGray(g.width(), g.height()), -1.0, g);
      scale_bar = 0.0;
      success = true;
      rejections = 0;
      ++res.iterations_used;
      const double gn = std::sqrt(dot(r.pixels(), r.pixels()));
      res.objective_trace.push_back(f);
      res.grad_norm_trace.push_back(gn);
      if (log) log(res.iterations_used, f, gn);
      if (++since_restart % kRestart == 0) {
        p = r;
      } else {
        const double beta =
            std::max(0.0, (dot(r.pixels(), r.pixels()) - dot(r.pixels(), r_old.pixels())) / mu);
        p = axpy(r, beta, p);
      }
      if (comparison >= 0.75) scale *= 0.25;
    } else {
      scale_bar = scale;
      success = false;
      if (++rejections >= kMaxRejections) break;
    }
    if (!(comparison >= 0.25)) scale += dk * (1.0 - std::max(comparison, -1e6)) / pn2;
  }
  res.image = std::move(x);
  res.final_objective = f;
  return res;
}

ImageGray upsample_bilinear(const ImageGray& low, int magnification) {
  if (magnification < 1) throw Error(ErrorKind::Config, "magnification must be >= 1");
  const int m = magnification;
  const double c = 0.5 * (m - 1.0);
  ImageGray out(m * low.width(), m * low.height());
  const double xmax = low.width() - 1.0;
  const double ymax = low.height() - 1.0;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const Point2 q{std::clamp((x - c) / m, 0.0, xmax), std::clamp((y - c) / m, 0.0, ymax)};
      out(x, y) = *sample_bilinear(low, q);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Motion and illumination

MotionEstimate estimate_frame_motion(const std::vector<ImageGray>& frames) {
  if (frames.size() < 2) throw Error(ErrorKind::Config, "motion estimation needs >= 2 frames");
  MotionEstimate est;
  est.motions.push_back(AffineMotion::identity());
  est.usable.push_back(true);
  est.rho.push_back(1.0);
  const ImageGray& ref = frames.front();
  std::size_t usable = 1;
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (!same_shape(frames[k], ref)) throw Error(ErrorKind::Config, "frames differ in size");
    try {
      const EccResult tr = ecc_register_pyramid(ref, frames[k], QuadraticTransform::identity(),
                                                MotionModel::Translation, 2);
      const EccResult af =
          ecc_register_pyramid(ref, frames[k], tr.transform, MotionModel::Affine, 2);
      const bool ok = af.rho >= 0.3 && std::abs(AffineMotion::from(af.transform).det()) > 1e-8;
      est.motions.push_back(AffineMotion::from(af.transform));
      est.usable.push_back(ok);
      est.rho.push_back(af.rho);
      if (ok) ++usable;
    } catch (const Error&) {
      est.motions.push_back(AffineMotion::identity());
      est.usable.push_back(false);
      est.rho.push_back(0.0);
    }
  }
  if (usable < 2) throw Error(ErrorKind::Numerical, "fewer than two frames registered in view");
  return est;
}

Illumination estimate_illumination(const ImageGray& frame, const ImageGray& reference_warped,
                                   double smooth_sigma, const PixelMask* mask) {
  if (!same_shape(frame, reference_warped) || (mask && !same_shape(frame, *mask))) {
    throw Error(ErrorKind::Config, "estimate_illumination: dimension mismatch");
  }
  constexpr double kFloor = 0.05;
  const auto f = frame.pixels();
  const auto r = reference_warped.pixels();
  const auto on = [&](std::size_t i) { return mask == nullptr || mask->at(i); };

  double n = 0.0;
  double sf = 0.0;
  double sr = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!on(i)) continue;
    n += 1.0;
    sf += f[i];
    sr += r[i];
  }
  if (n < 2.0) throw Error(ErrorKind::Numerical, "estimate_illumination: empty mask");
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!on(i)) continue;
    const double dr = r[i] - sr / n;
    cov += dr * (f[i] - sf / n);
    var += dr * dr;
  }
  const double gain = var > 0.0 ? cov / var : 1.0;
  std::vector<double> resid;
  resid.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (on(i)) resid.push_back(f[i] - gain * r[i]);
  }
  Illumination out;
  out.offset = median(std::move(resid));

  // Masked normalized smoothing; the mask normalization cancels in the ratio.
  ImageGray num(frame.width(), frame.height());
  ImageGray den(frame.width(), frame.height());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!on(i)) continue;
    num.pixels()[i] = f[i] - out.offset;
    den.pixels()[i] = r[i];
  }
  ImageGray weight(frame.width(), frame.height(), 1.0);
  if (mask) {
    for (std::size_t i = 0; i < f.size(); ++i) weight.pixels()[i] = mask->at(i) ? 1.0 : 0.0;
  }
  const ImageGray sn = gaussian_blur(num, smooth_sigma);
  const ImageGray sd = gaussian_blur(den, smooth_sigma);
  const ImageGray sw = gaussian_blur(weight, smooth_sigma);
  out.gain = ImageGray(frame.width(), frame.height(), 1.0);
  auto gp = out.gain.pixels();
  for (std::size_t i = 0; i < gp.size(); ++i) {
    const double wsum = sw.pixels()[i];
    if (wsum < 1e-6) continue;
    const double a = std::max(sn.pixels()[i] / wsum, kFloor);
    const double b = std::max(sd.pixels()[i] / wsum, kFloor);
    gp[i] = std::clamp(a / b, 0.5, 2.0);
  }
  return out;
}

ObservationModel build_observation_model(const std::vector<ImageGray>& frames,
                                         const MotionEstimate& motion, int magnification,
                                         double psf_sigma, double illumination_sigma) {
  if (frames.empty()) throw Error(ErrorKind::Config, "no frames");
  ObservationModel model;
  model.magnification = magnification;
  model.psf_sigma = psf_sigma;
  model.low_width = frames.front().width();
  model.low_height = frames.front().height();
  model.motions = motion.motions;
  model.usable = motion.usable;
  const ImageGray& first = frames.front();
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (k == 0) {
      model.illumination.push_back({ImageGray(model.low_width, model.low_height, 1.0), 0.0});
      continue;
    }
    const AffineMotion mk = motion.motions[k];
    const WarpResult ref = warp_image(first, [&](Point2 u) { return mk.apply(u); },
                                      model.low_width, model.low_height);
    if (ref.mask.count() < 2) {
      model.illumination.push_back({ImageGray(model.low_width, model.low_height, 1.0), 0.0});
      continue;
    }
    model.illumination.push_back(
        estimate_illumination(frames[k], ref.image, illumination_sigma, &ref.mask));
  }
  return model;
}

ViewReconstruction reconstruct_view(const std::vector<ImageGray>& frames,
                                    const ViewSrOptions& opts, const SolverLog& log) {
  ViewReconstruction out;
  if (frames.size() == 1) {
    out.motion.motions = {AffineMotion::identity()};
    out.motion.usable = {true};
    out.motion.rho = {1.0};
  } else {
    out.motion = estimate_frame_motion(frames);
  }
  out.model = build_observation_model(frames, out.motion, opts.magnification, opts.psf_sigma,
                                      opts.illumination_sigma);
  const ImageGray x0 = upsample_bilinear(frames.front(), opts.magnification);
  out.result = solve_sr(frames, out.model, opts.sr, x0, log);
  return out;
}

// ---------------------------------------------------------------------------
// Lambda self-assessment

double sr_quality(const ImageGray& x) {
  constexpr double kGray = 255.0;
  const int w = x.width();
  const int h = x.height();
  if (w < 3 || h < 3) throw Error(ErrorKind::Config, "sr_quality: image too small");
  std::vector<double> grad;
  std::vector<double> lap;
  grad.reserve(static_cast<std::size_t>((w - 2) * (h - 2)));
  lap.reserve(grad.capacity());
  for (int y = 1; y < h - 1; ++y) {
    for (int xx = 1; xx < w - 1; ++xx) {
      const double gx = 0.5 * kGray * (x(xx + 1, y) - x(xx - 1, y));
      const double gy = 0.5 * kGray * (x(xx, y + 1) - x(xx, y - 1));
      grad.push_back(std::hypot(gx, gy));
      lap.push_back(kGray * (x(xx + 1, y) + x(xx - 1, y) + x(xx, y + 1) + x(xx, y - 1) - 4.0 * x(xx, y)));
    }
  }
  std::sort(grad.begin(), grad.end());
  const std::size_t top = grad.size() - std::max<std::size_t>(1, grad.size() / 10);
  const double sharp =
      std::accumulate(grad.begin() + static_cast<std::ptrdiff_t>(top), grad.end(), 0.0) /
      static_cast<double>(grad.size() - top);
  const double med = median(lap);
  for (double& v : lap) v = std::abs(v - med);
  const double noise = median(std::move(lap)) / 0.6745 / std::sqrt(6.0);
  return sharp / (1.0 + noise);
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 7; ++i) grid.push_back(std::pow(10.0, -3.0 + 0.5 * i));
  return grid;
}

double select_lambda(const std::vector<ImageGray>& frames, const ObservationModel& model,
                     const SRConfig& cfg_template, const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw Error(ErrorKind::Config, "select_lambda: empty grid");
  if (lambda_grid.size() == 1) return lambda_grid.front();
  const ImageGray x0 = upsample_bilinear(frames.front(), model.magnification);
  double best_lambda = lambda_grid.front();
  double best_q = -std::numeric_limits<double>::infinity();
  for (const double lambda : lambda_grid) {
    SRConfig cfg = cfg_template;
    cfg.lambda = lambda;
    cfg.max_scg_iters = std::min(cfg.max_scg_iters, 30);
    const SRResult r = solve_sr(frames, model, cfg, x0);
    const double q = sr_quality(r.image);
    if (q > best_q) {
      best_q = q;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace retmosaic
