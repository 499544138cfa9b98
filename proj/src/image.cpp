#include "retmosaic/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "retmosaic/error.hpp"

namespace retmosaic {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

ImageGray::ImageGray(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(ErrorKind::Config, "negative image dimensions");
  }
  if (!std::isfinite(fill)) throw Error(ErrorKind::Numerical, "non-finite fill value");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImageGray::ImageGray(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorKind::Config, "image data length does not match " +
                                       std::to_string(width) + "x" + std::to_string(height));
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::Numerical, "image data contains non-finite values");
  }
}

bool ImageGray::contains(const RectROI& roi) const noexcept {
  return roi.x >= 0 && roi.y >= 0 && roi.width >= 1 && roi.height >= 1 &&
         roi.x + roi.width <= width_ && roi.y + roi.height <= height_;
}

PixelMask::PixelMask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorKind::Config, "negative mask dimensions");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
               fill ? 1 : 0);
}

std::size_t PixelMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

namespace {

void require_same(const PixelMask& a, const PixelMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Config, "mask dimensions differ");
  }
}

}  // namespace

PixelMask mask_and(const PixelMask& a, const PixelMask& b) {
  require_same(a, b);
  PixelMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.at(i) && b.at(i));
  return out;
}

PixelMask mask_or(const PixelMask& a, const PixelMask& b) {
  require_same(a, b);
  PixelMask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a.at(i) || b.at(i));
  return out;
}

PixelMask erode(const PixelMask& m, int radius) {
  if (radius <= 0) return m;
  const int w = m.width();
  const int h = m.height();
  // Separable: a pixel survives iff its whole row window and column window are on.
  PixelMask rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool on = x - radius >= 0 && x + radius < w;
      for (int d = -radius; on && d <= radius; ++d) on = m(x + d, y);
      rows.set(x, y, on);
    }
  }
  PixelMask out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool on = y - radius >= 0 && y + radius < h;
      for (int d = -radius; on && d <= radius; ++d) on = rows(x, y + d);
      out.set(x, y, on);
    }
  }
  return out;
}

bool same_shape(const ImageGray& a, const ImageGray& b) {
  return a.width() == b.width() && a.height() == b.height();
}

bool same_shape(const ImageGray& a, const PixelMask& m) {
  return a.width() == m.width() && a.height() == m.height();
}

ImageGray crop(const ImageGray& img, const RectROI& roi) {
  if (!img.contains(roi)) throw Error(ErrorKind::Config, "ROI outside image");
  ImageGray out(roi.width, roi.height);
  for (int y = 0; y < roi.height; ++y) {
    for (int x = 0; x < roi.width; ++x) out(x, y) = img(roi.x + x, roi.y + y);
  }
  return out;
}

}  // namespace retmosaic
