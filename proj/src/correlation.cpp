#include "retmosaic/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "retmosaic/error.hpp"

namespace retmosaic {

double correlation_coefficient(const ImageGray& a, const ImageGray& b, const PixelMask& mask) {
  if (!same_shape(a, b) || !same_shape(a, mask)) {
    throw Error(ErrorKind::Config, "correlation_coefficient: dimension mismatch");
  }
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  std::size_t n = 0;
  double sa = 0.0;
  double sb = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!mask.at(i)) continue;
    ++n;
    sa += pa[i];
    sb += pb[i];
  }
  if (n < 2) throw UndefinedCorrelation("correlation needs at least two masked pixels");
  const double ma = sa / static_cast<double>(n);
  const double mb = sb / static_cast<double>(n);
  double saa = 0.0;
  double sbb = 0.0;
  double sab = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!mask.at(i)) continue;
    const double da = pa[i] - ma;
    const double db = pb[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  // Relative floor: rounding residue of a constant signal is ~1e-32 * n.
  const double floor_a = 1e-24 * static_cast<double>(n) * std::max(1.0, ma * ma);
  const double floor_b = 1e-24 * static_cast<double>(n) * std::max(1.0, mb * mb);
  if (saa <= floor_a || sbb <= floor_b) {
    throw UndefinedCorrelation("correlation undefined: zero variance under mask");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace retmosaic
