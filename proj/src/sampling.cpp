#include "retmosaic/sampling.hpp"

#include <cmath>

#include "retmosaic/error.hpp"

namespace retmosaic {

namespace {

// Lower neighbour and fractional offset along one axis; the last node is
// handled by stepping back one cell with fraction 1.
bool axis_cell(double v, int n, int& lo, double& frac) {
  if (!(v >= 0.0) || v > static_cast<double>(n - 1)) return false;
  if (n == 1) {
    lo = 0;
    frac = 0.0;
    return true;
  }
  lo = static_cast<int>(std::floor(v));
  if (lo >= n - 1) lo = n - 2;
  frac = v - static_cast<double>(lo);
  return true;
}

}  // namespace

std::optional<BilinearStencil> bilinear_stencil(int width, int height, Point2 p) {
  int x0 = 0;
  int y0 = 0;
  double fx = 0.0;
  double fy = 0.0;
  if (width <= 0 || height <= 0) return std::nullopt;
  if (!axis_cell(p.x, width, x0, fx) || !axis_cell(p.y, height, y0, fy)) return std::nullopt;
  const int x1 = width == 1 ? x0 : x0 + 1;
  const int y1 = height == 1 ? y0 : y0 + 1;
  const auto at = [width](int x, int y) {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  };
  BilinearStencil s;
  s.index = {at(x0, y0), at(x1, y0), at(x0, y1), at(x1, y1)};
  s.weight = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};
  return s;
}

std::optional<double> sample_bilinear(const ImageGray& img, Point2 p) {
  const auto s = bilinear_stencil(img.width(), img.height(), p);
  if (!s) return std::nullopt;
  const auto px = img.pixels();
  return s->weight[0] * px[s->index[0]] + s->weight[1] * px[s->index[1]] +
         s->weight[2] * px[s->index[2]] + s->weight[3] * px[s->index[3]];
}

WarpResult warp_image(const ImageGray& src, const CoordinateMap& map, int out_width,
                      int out_height) {
  if (out_width <= 0 || out_height <= 0) {
    throw Error(ErrorKind::Config, "warp_image: zero-sized output");
  }
  WarpResult out{ImageGray(out_width, out_height), PixelMask(out_width, out_height)};
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Point2 q = map(Point2{static_cast<double>(x), static_cast<double>(y)});
      if (const auto v = sample_bilinear(src, q)) {
        out.image(x, y) = *v;
        out.mask.set(x, y, true);
      }
    }
  }
  return out;
}

}  // namespace retmosaic
