#pragma once

#include <array>
#include <functional>
#include <optional>

#include "retmosaic/image.hpp"

namespace retmosaic {

/// The four source pixels (flat indices) and weights that bilinear
/// interpolation combines at one position. Shared by forward sampling and
/// by the adjoint scatter so both use identical weights.
struct BilinearStencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
};

/// Stencil for position p, or nullopt when p lies outside
/// [0, width-1] x [0, height-1].
std::optional<BilinearStencil> bilinear_stencil(int width, int height, Point2 p);

/// Bilinear sample; nullopt means "outside" (never extrapolated).
std::optional<double> sample_bilinear(const ImageGray& img, Point2 p);

/// Maps an output pixel position to a source position (inverse warping).
using CoordinateMap = std::function<Point2(Point2)>;

struct WarpResult {
  ImageGray image;  // 0 where the mask is off
  PixelMask mask;   // 1 where the source sample was inside the source domain
};

WarpResult warp_image(const ImageGray& src, const CoordinateMap& map, int out_width,
                      int out_height);

}  // namespace retmosaic
