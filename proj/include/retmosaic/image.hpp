#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace retmosaic {

/// Subpixel image position; x is horizontal (column), y vertical (row).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

double distance(Point2 a, Point2 b);

/// Axis-aligned integer rectangle inside an image.
struct RectROI {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const RectROI&, const RectROI&) = default;
};

/// Row-major single-channel image of doubles, nominal range [0,1].
class ImageGray {
public:
  ImageGray() = default;
  ImageGray(int width, int height, double fill = 0.0);
  ImageGray(int width, int height, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(int x, int y) const { return data_[index(x, y)]; }
  double& operator()(int x, int y) { return data_[index(x, y)]; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }

  bool contains(const RectROI& roi) const noexcept;

  friend bool operator==(const ImageGray&, const ImageGray&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// One boolean per pixel.
class PixelMask {
public:
  PixelMask() = default;
  PixelMask(int width, int height, bool fill = false);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { bits_[index(x, y)] = v ? 1 : 0; }

  bool at(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  std::size_t count() const noexcept;

  friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

PixelMask mask_and(const PixelMask& a, const PixelMask& b);
PixelMask mask_or(const PixelMask& a, const PixelMask& b);

/// Binary erosion with a (2r+1)x(2r+1) square; pixels outside count as off.
PixelMask erode(const PixelMask& m, int radius);

bool same_shape(const ImageGray& a, const ImageGray& b);
bool same_shape(const ImageGray& a, const PixelMask& m);

/// Copy of the ROI as a standalone image.
ImageGray crop(const ImageGray& img, const RectROI& roi);

}  // namespace retmosaic
