#pragma once

#include "retmosaic/image.hpp"

namespace retmosaic {

/// Zero-mean normalized cross-correlation of a and b over the masked pixels,
/// in [-1, 1]. Throws UndefinedCorrelation when fewer than two pixels are
/// masked or either input is constant under the mask.
double correlation_coefficient(const ImageGray& a, const ImageGray& b, const PixelMask& mask);

}  // namespace retmosaic
