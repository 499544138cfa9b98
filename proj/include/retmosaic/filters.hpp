#pragma once

#include <span>
#include <vector>

#include "retmosaic/image.hpp"

namespace retmosaic {

/// Normalized 1-D Gaussian taps, truncated at +-ceil(3 sigma). sigma == 0
/// gives the single tap {1}.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian convolution with edge-clamped borders.
ImageGray gaussian_blur(const ImageGray& img, double sigma);

/// Exact transpose of gaussian_blur as a linear operator (scatter through the
/// clamped border taps). Equal to gaussian_blur away from the borders.
ImageGray gaussian_blur_transpose(const ImageGray& img, double sigma);

/// kappa(u): distance to the nearest border (min over the four sides),
/// divided by its maximum. Border pixels are 0, the central pixel(s) 1.
ImageGray distance_map(int width, int height);

struct FrangiParams {
  std::vector<double> scales{2.0, 4.0, 8.0};
  double beta = 0.5;
};

/// Multi-scale Frangi response for dark tubular structures on a bright
/// background. Structureness constant c is half the maximum Hessian norm at
/// each scale. Output lies in [0,1].
ImageGray frangi_vesselness(const ImageGray& img, const FrangiParams& params = {});

struct Gradient {
  ImageGray dx;
  ImageGray dy;
};

/// Central differences (one-sided on the border rows/columns).
Gradient central_gradient(const ImageGray& img);

/// Blur (sigma 1) then keep every second pixel; coarse (x,y) sits at fine (2x,2y).
ImageGray pyramid_down(const ImageGray& img);

/// Coarse-to-fine list: [0] is the input, [i+1] = pyramid_down([i]).
std::vector<ImageGray> gaussian_pyramid(const ImageGray& img, int levels);

double mean(std::span<const double> v);

/// Median (average of the two middle values for even counts).
double median(std::vector<double> v);

}  // namespace retmosaic
