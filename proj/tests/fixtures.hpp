#pragma once

// Synthetic registration pairs with known quadratic ground truth, shared by
// the register unit tests and the acceptance binary.

#include <cmath>
#include <random>

#include "retmosaic/registration.hpp"
#include "retmosaic/sampling.hpp"
#include "retmosaic/simulate.hpp"

namespace fixture {

using namespace retmosaic;

struct QuadPair {
  ImageGray reference;
  ImageGray view;
  QuadraticTransform truth;  // reference -> view pixels
  Point2 u_view;             // tracked low-res positions, with init error
  Point2 u_ref;
};

/// Curvature in px^-1 about the image centre:
///   T(u) = c + R(u - c) + t + (q0 d1^2 + q1 d2^2 + q2 d1 d2, q3 d1^2 + q4 d2^2 + q5 d1 d2)
/// expanded by hand into the 12 monomial coefficients.
inline QuadraticTransform centred_quadratic(Point2 c, double theta, Point2 t, const double q[6]) {
  const double C = std::cos(theta), S = std::sin(theta), cx = c.x, cy = c.y;
  QuadraticTransform::Params p{};
  p[0] = q[0];
  p[1] = q[1];
  p[2] = q[2];
  p[3] = C - 2 * q[0] * cx - q[2] * cy;
  p[4] = -S - 2 * q[1] * cy - q[2] * cx;
  p[5] = cx - C * cx + S * cy + t.x + q[0] * cx * cx + q[1] * cy * cy + q[2] * cx * cy;
  p[6] = q[3];
  p[7] = q[4];
  p[8] = q[5];
  p[9] = S - 2 * q[3] * cx - q[5] * cy;
  p[10] = C - 2 * q[4] * cy - q[5] * cx;
  p[11] = cy - S * cx - C * cy + t.y + q[3] * cx * cx + q[4] * cy * cy + q[5] * cx * cy;
  return QuadraticTransform(p);
}

/// Reference = phantom window at `origin`; the view is rendered so that
/// reference(u) = view(truth(u)). Translation up to `max_t` px, curvature up to
/// `curvature`, tracking error up to `init_err` low-res px (magnification 2).
inline QuadPair make_quad_pair(const ImageGray& phantom, std::mt19937_64& rng, double curvature,
                               double max_t, double init_err, int w = 640, int h = 480,
                               Point2 origin = {320, 240}) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Point2 c{0.5 * (w - 1), 0.5 * (h - 1)};
  const double ang = 3.14159265358979 * u(rng);
  const double mag = max_t * std::sqrt(std::abs(u(rng)));
  const Point2 t{mag * std::cos(ang), 0.75 * mag * std::sin(ang)};
  double q[6];
  for (double& v : q) v = curvature * u(rng);
  const double theta = 0.01 * u(rng);
  QuadPair pair;
  pair.truth = centred_quadratic(c, theta, t, q);
  pair.reference =
      warp_image(phantom, [&](Point2 p) { return origin + p; }, w, h).image;
  pair.view = warp_image(phantom,
                         [&](Point2 v) {
                           const auto r = pair.truth.invert(v);
                           return r ? origin + *r : Point2{-1e9, -1e9};
                         },
                         w, h)
                  .image;
  const double ea = 3.14159265358979 * u(rng);
  const double em = init_err * std::abs(u(rng));
  pair.u_ref = {0, 0};
  pair.u_view = {t.x / 2 + em * std::cos(ea), t.y / 2 + em * std::sin(ea)};
  return pair;
}

/// Mean endpoint distance between two maps over the reference pixels (step
/// `stride`) whose true image lies inside the view.
inline double endpoint_error(const QuadraticTransform& truth, const QuadraticTransform& est, int w,
                             int h, int stride = 4) {
  double e = 0.0;
  int n = 0;
  for (int y = 0; y < h; y += stride) {
    for (int x = 0; x < w; x += stride) {
      const Point2 a = truth.apply({double(x), double(y)});
      if (a.x < 0 || a.y < 0 || a.x > w - 1 || a.y > h - 1) continue;
      e += distance(a, est.apply({double(x), double(y)}));
      ++n;
    }
  }
  return n > 0 ? e / n : 0.0;
}

}  // namespace fixture
