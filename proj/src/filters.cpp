#include "retmosaic/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "retmosaic/error.hpp"

namespace retmosaic {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::Config, "gaussian sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return {1.0};
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + r)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace {

inline int clampi(int v, int lo, int hi) { return std::min(std::max(v, lo), hi); }

enum class Axis { X, Y };

ImageGray convolve_axis(const ImageGray& in, const std::vector<double>& k, Axis axis) {
  const int w = in.width();
  const int h = in.height();
  const int r = static_cast<int>(k.size() / 2);
  const std::size_t n = k.size();
  ImageGray out(w, h);
  const double* src = in.pixels().data();
  double* dst = out.pixels().data();
  const auto uw = static_cast<std::size_t>(w);
  if (axis == Axis::X) {
    std::vector<double> line(uw + 2 * static_cast<std::size_t>(r));
    for (int y = 0; y < h; ++y) {
      const double* row = src + static_cast<std::size_t>(y) * uw;
      for (int i = 0; i < w + 2 * r; ++i) line[static_cast<std::size_t>(i)] = row[clampi(i - r, 0, w - 1)];
      double* o = dst + static_cast<std::size_t>(y) * uw;
      for (std::size_t x = 0; x < uw; ++x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += k[j] * line[x + j];
        o[x] = acc;
      }
    }
  } else {
    for (int y = 0; y < h; ++y) {
      double* o = dst + static_cast<std::size_t>(y) * uw;
      for (int j = -r; j <= r; ++j) {
        const double kv = k[static_cast<std::size_t>(j + r)];
        const double* row = src + static_cast<std::size_t>(clampi(y + j, 0, h - 1)) * uw;
        for (std::size_t x = 0; x < uw; ++x) o[x] += kv * row[x];
      }
    }
  }
  return out;
}

ImageGray convolve_axis_transpose(const ImageGray& in, const std::vector<double>& k,
                                  Axis axis) {
  const int w = in.width();
  const int h = in.height();
  const int r = static_cast<int>(k.size() / 2);
  const std::size_t n = k.size();
  ImageGray out(w, h);
  const double* src = in.pixels().data();
  double* dst = out.pixels().data();
  const auto uw = static_cast<std::size_t>(w);
  if (axis == Axis::X) {
    std::vector<double> line(uw + 2 * static_cast<std::size_t>(r));
    for (int y = 0; y < h; ++y) {
      std::fill(line.begin(), line.end(), 0.0);
      const double* row = src + static_cast<std::size_t>(y) * uw;
      for (std::size_t x = 0; x < uw; ++x) {
        for (std::size_t j = 0; j < n; ++j) line[x + j] += k[j] * row[x];
      }
      double* o = dst + static_cast<std::size_t>(y) * uw;
      for (int i = 0; i < w + 2 * r; ++i) o[clampi(i - r, 0, w - 1)] += line[static_cast<std::size_t>(i)];
    }
  } else {
    for (int y = 0; y < h; ++y) {
      const double* row = src + static_cast<std::size_t>(y) * uw;
      for (int j = -r; j <= r; ++j) {
        const double kv = k[static_cast<std::size_t>(j + r)];
        double* o = dst + static_cast<std::size_t>(clampi(y + j, 0, h - 1)) * uw;
        for (std::size_t x = 0; x < uw; ++x) o[x] += kv * row[x];
      }
    }
  }
  return out;
}

}  // namespace

ImageGray gaussian_blur(const ImageGray& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1 || img.empty()) return img;
  return convolve_axis(convolve_axis(img, k, Axis::X), k, Axis::Y);
}

ImageGray gaussian_blur_transpose(const ImageGray& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  if (k.size() == 1 || img.empty()) return img;
  // (By Bx)^T = Bx^T By^T
  return convolve_axis_transpose(convolve_axis_transpose(img, k, Axis::Y), k, Axis::X);
}

ImageGray distance_map(int width, int height) {
  if (width < 2 || height < 2) throw Error(ErrorKind::Config, "distance_map needs w,h >= 2");
  ImageGray out(width, height);
  int peak = 0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int d = std::min({x, y, width - 1 - x, height - 1 - y});
      out(x, y) = d;
      peak = std::max(peak, d);
    }
  }
  // A 2-pixel-thin image is all border.
  if (peak == 0) return out;
  for (double& v : out.pixels()) v /= peak;
  return out;
}

ImageGray frangi_vesselness(const ImageGray& img, const FrangiParams& params) {
  if (params.scales.empty()) throw Error(ErrorKind::Config, "frangi: no scales");
  const int w = img.width();
  const int h = img.height();
  ImageGray best(w, h);
  std::vector<double> l1(img.size());
  std::vector<double> l2(img.size());
  for (const double sigma : params.scales) {
    if (!(sigma > 0.0)) throw Error(ErrorKind::Config, "frangi: scales must be > 0");
    const ImageGray s = gaussian_blur(img, sigma);
    const double norm = sigma * sigma;
    double max_s = 0.0;
    for (int y = 0; y < h; ++y) {
      const int ym = clampi(y - 1, 0, h - 1);
      const int yp = clampi(y + 1, 0, h - 1);
      for (int x = 0; x < w; ++x) {
        const int xm = clampi(x - 1, 0, w - 1);
        const int xp = clampi(x + 1, 0, w - 1);
        const double dxx = norm * (s(xp, y) - 2.0 * s(x, y) + s(xm, y));
        const double dyy = norm * (s(x, yp) - 2.0 * s(x, y) + s(x, ym));
        const double dxy = norm * 0.25 * (s(xp, yp) - s(xp, ym) - s(xm, yp) + s(xm, ym));
        const double half_tr = 0.5 * (dxx + dyy);
        const double disc = std::sqrt(0.25 * (dxx - dyy) * (dxx - dyy) + dxy * dxy);
        double a = half_tr + disc;
        double b = half_tr - disc;
        if (std::abs(a) > std::abs(b)) std::swap(a, b);
        const std::size_t i = img.index(x, y);
        l1[i] = a;  // |l1| <= |l2|
        l2[i] = b;
        max_s = std::max(max_s, std::hypot(a, b));
      }
    }
    const double c = 0.5 * max_s;
    if (c <= 0.0) continue;
    auto out = best.pixels();
    for (std::size_t i = 0; i < l1.size(); ++i) {
      if (l2[i] <= 0.0) continue;
      const double rb = l1[i] / l2[i];
      const double s2 = l1[i] * l1[i] + l2[i] * l2[i];
      const double v = std::exp(-rb * rb / (2.0 * params.beta * params.beta)) *
                       (1.0 - std::exp(-s2 / (2.0 * c * c)));
      out[i] = std::max(out[i], v);
    }
  }
  return best;
}

Gradient central_gradient(const ImageGray& img) {
  const int w = img.width();
  const int h = img.height();
  Gradient g{ImageGray(w, h), ImageGray(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (w > 1) {
        if (x == 0) {
          g.dx(x, y) = img(1, y) - img(0, y);
        } else if (x == w - 1) {
          g.dx(x, y) = img(x, y) - img(x - 1, y);
        } else {
          g.dx(x, y) = 0.5 * (img(x + 1, y) - img(x - 1, y));
        }
      }
      if (h > 1) {
        if (y == 0) {
          g.dy(x, y) = img(x, 1) - img(x, 0);
        } else if (y == h - 1) {
          g.dy(x, y) = img(x, y) - img(x, y - 1);
        } else {
          g.dy(x, y) = 0.5 * (img(x, y + 1) - img(x, y - 1));
        }
      }
    }
  }
  return g;
}

ImageGray pyramid_down(const ImageGray& img) {
  const ImageGray s = gaussian_blur(img, 1.0);
  const int w = (img.width() + 1) / 2;
  const int h = (img.height() + 1) / 2;
  ImageGray out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = s(2 * x, 2 * y);
  }
  return out;
}

std::vector<ImageGray> gaussian_pyramid(const ImageGray& img, int levels) {
  std::vector<ImageGray> pyr{img};
  for (int i = 1; i < levels; ++i) pyr.push_back(pyramid_down(pyr.back()));
  return pyr;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::Numerical, "median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace retmosaic
