#include "retmosaic/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/filters.hpp"

namespace retmosaic {

namespace {

// Row-wise prefix sums of v and v^2 so that sums over a disk cost O(radius).
class ChordSums {
public:
  explicit ChordSums(const ImageGray& img) : w_(img.width()), h_(img.height()) {
    const std::size_t stride = static_cast<std::size_t>(w_ + 1);
    s1_.assign(stride * static_cast<std::size_t>(h_), 0.0);
    s2_.assign(s1_.size(), 0.0);
    for (int y = 0; y < h_; ++y) {
      for (int x = 0; x < w_; ++x) {
        const double v = img(x, y);
        const std::size_t i = static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x);
        s1_[i + 1] = s1_[i] + v;
        s2_[i + 1] = s2_[i] + v * v;
      }
    }
  }

  struct Sums {
    double n = 0.0, s = 0.0, ss = 0.0;
  };

  // Disk of radius r around (cx, cy); caller guarantees it lies inside.
  Sums disk(int cx, int cy, double r) const {
    Sums out;
    const int ry = static_cast<int>(std::floor(r));
    const std::size_t stride = static_cast<std::size_t>(w_ + 1);
    for (int dy = -ry; dy <= ry; ++dy) {
      const int hw = static_cast<int>(std::floor(std::sqrt(r * r - dy * dy)));
      const std::size_t row = static_cast<std::size_t>(cy + dy) * stride;
      const std::size_t a = row + static_cast<std::size_t>(cx - hw);
      const std::size_t b = row + static_cast<std::size_t>(cx + hw + 1);
      out.n += 2 * hw + 1;
      out.s += s1_[b] - s1_[a];
      out.ss += s2_[b] - s2_[a];
    }
    return out;
  }

  int width() const { return w_; }
  int height() const { return h_; }

private:
  int w_, h_;
  std::vector<double> s1_, s2_;
};

constexpr double kSupportFactor = 1.5;

// NCC between the patch and a template that is 1 on the disk of radius r and
// 0 on the surrounding annulus out to 1.5 r.
double disk_score(const ChordSums& cs, int cx, int cy, double r) {
  const auto inner = cs.disk(cx, cy, r);
  const auto all = cs.disk(cx, cy, kSupportFactor * r);
  const double n = all.n;
  const double frac = inner.n / n;
  if (inner.n <= 0.0 || frac >= 1.0) return -std::numeric_limits<double>::infinity();
  const double cross = inner.s - frac * all.s;
  const double tnorm2 = inner.n * (1.0 - frac);
  const double pvar = all.ss - all.s * all.s / n;
  if (pvar <= 1e-12 * n) return -std::numeric_limits<double>::infinity();
  return cross / std::sqrt(tnorm2 * pvar);
}

bool support_inside(const ChordSums& cs, int cx, int cy, double r) {
  const int R = static_cast<int>(std::floor(kSupportFactor * r));
  return cx - R >= 0 && cy - R >= 0 && cx + R < cs.width() && cy + R < cs.height();
}

struct Candidate {
  int x = 0, y = 0;
  double r = 0.0;
  double score = -std::numeric_limits<double>::infinity();
};

}  // namespace

std::optional<DiskDetection> detect_optic_disk(const ImageGray& frame, RadiusRange range) {
  if (!(range.min > 0.0) || !(range.min < range.max)) {
    throw Error(ErrorKind::Config, "radius range must satisfy 0 < min < max");
  }
  if (frame.width() < 2.0 * range.max || frame.height() < 2.0 * range.max) {
    throw Error(ErrorKind::Config, "frame smaller than twice the maximum disk radius");
  }
  // Coarse level keeps the smallest radius at >= 3 px.
  int level = 0;
  while (level < 4 && range.min / std::ldexp(1.0, level + 1) >= 3.0) ++level;
  const auto pyr = gaussian_pyramid(frame, level + 1);
  const double scale = std::ldexp(1.0, level);

  std::vector<double> radii;
  for (double r = range.min / scale; r <= range.max / scale * 1.0001; r *= 1.1) radii.push_back(r);

  Candidate best;
  {
    const ChordSums cs(pyr.back());
    for (int y = 0; y < cs.height(); ++y) {
      for (int x = 0; x < cs.width(); ++x) {
        for (const double r : radii) {
          if (!support_inside(cs, x, y, r)) continue;
          const double s = disk_score(cs, x, y, r);
          if (s > best.score) best = {x, y, r, s};
        }
      }
    }
  }
  if (!std::isfinite(best.score)) return std::nullopt;

  // Local refinement at full resolution.
  const ChordSums cs(frame);
  const int cx0 = static_cast<int>(std::lround(best.x * scale));
  const int cy0 = static_cast<int>(std::lround(best.y * scale));
  const double r0 = best.r * scale;
  const int reach = static_cast<int>(scale) + 1;
  Candidate fine;
  for (int y = cy0 - reach; y <= cy0 + reach; ++y) {
    for (int x = cx0 - reach; x <= cx0 + reach; ++x) {
      for (double r = std::max(range.min, r0 - scale); r <= std::min(range.max, r0 + scale) + 1e-9;
           r += 0.5) {
        if (!support_inside(cs, x, y, r)) continue;
        const double s = disk_score(cs, x, y, r);
        if (s > fine.score) fine = {x, y, r, s};
      }
    }
  }
  if (!std::isfinite(fine.score)) fine = {cx0, cy0, r0, best.score};
  const double confidence = std::clamp(fine.score, 0.0, 1.0);
  if (confidence < 0.2) return std::nullopt;
  return DiskDetection{{static_cast<double>(fine.x), static_cast<double>(fine.y)}, fine.r,
                       confidence};
}

EyeTrack track_sequence(const std::vector<ImageGray>& frames, RadiusRange range) {
  EyeTrack track;
  track.reserve(frames.size());
  for (const auto& f : frames) track.push_back(detect_optic_disk(f, range));
  return track;
}

Point2 views_centroid(const ViewPartition& partition) {
  if (partition.views.empty()) throw Error(ErrorKind::Config, "partition has no views");
  Point2 c;
  for (const auto& v : partition.views) c = c + v.start;
  return (1.0 / static_cast<double>(partition.views.size())) * c;
}

std::size_t select_reference(const ViewPartition& partition) {
  const Point2 c = views_centroid(partition);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < partition.views.size(); ++i) {
    const double d = distance(partition.views[i].start, c);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ViewPartition partition_views(const EyeTrack& track, const PartitionParams& params) {
  if (!(params.d_max >= 0.0) || !(params.d_min > params.d_max) || params.k_min < 1) {
    throw Error(ErrorKind::Config, "partition requires d_max >= 0, d_min > d_max, k_min >= 1");
  }
  ViewPartition out;
  std::optional<View> open;
  std::optional<Point2> last_start;
  const auto close = [&]() {
    if (open && open->frames.size() >= params.k_min) {
      last_start = open->start;
      out.views.push_back(std::move(*open));
    }
    open.reset();
  };
  for (std::size_t k = 0; k < track.size(); ++k) {
    if (!track[k]) continue;
    const Point2 u = track[k]->center;
    if (open) {
      if (distance(open->start, u) <= params.d_max) {
        open->frames.push_back(k);
        continue;
      }
      close();
    }
    if (!last_start || distance(*last_start, u) >= params.d_min) {
      open = View{{k}, u};
    }
  }
  close();
  if (out.views.empty()) throw Error(ErrorKind::Quality, "no stable views");
  out.centroid = views_centroid(out);
  out.reference = select_reference(out);
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

EyeTrack parse_track(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<long, std::optional<DiskDetection>> records;
  int lineno = 0;
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::Io, "track line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    long k = 0;
    try {
      std::size_t used = 0;
      k = std::stol(tok[0], &used);
      if (used != tok[0].size() || k < 0) throw std::invalid_argument(tok[0]);
    } catch (const std::exception&) {
      fail("bad frame index '" + tok[0] + "'");
    }
    if (records.count(k)) fail("duplicate frame index " + tok[0]);
    if (tok.size() == 2 && tok[1] == "-") {
      records[k] = std::nullopt;
      continue;
    }
    if (tok.size() != 4) fail("expected 'k u1 u2 radius' or 'k -'");
    double v[3] = {};
    for (int i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(tok[static_cast<std::size_t>(i + 1)], &used);
        if (used != tok[static_cast<std::size_t>(i + 1)].size() || !std::isfinite(v[i])) {
          throw std::invalid_argument("");
        }
      } catch (const std::exception&) {
        fail("bad number '" + tok[static_cast<std::size_t>(i + 1)] + "'");
      }
    }
    if (!(v[2] > 0.0)) fail("radius must be positive");
    records[k] = DiskDetection{{v[0], v[1]}, v[2], 1.0};
  }
  EyeTrack track;
  long expect = 0;
  for (auto& [k, rec] : records) {
    if (k != expect) {
      throw Error(ErrorKind::Io, "track: missing frame index " + std::to_string(expect));
    }
    track.push_back(rec);
    ++expect;
  }
  return track;
}

EyeTrack load_external_track(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open track file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_track(ss.str());
}

std::string serialize_track(const EyeTrack& track) {
  std::ostringstream out;
  out << "# k u1 u2 radius   (or: k -)\n" << std::setprecision(17);
  for (std::size_t k = 0; k < track.size(); ++k) {
    if (track[k]) {
      out << k << ' ' << track[k]->center.x << ' ' << track[k]->center.y << ' '
          << track[k]->radius << '\n';
    } else {
      out << k << " -\n";
    }
  }
  return out.str();
}

std::string serialize_partition(const ViewPartition& p) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < p.views.size(); ++i) {
    const auto& v = p.views[i];
    out << "view " << i << " first " << v.frames.front() << " last " << v.frames.back()
        << " frames ";
    for (std::size_t j = 0; j < v.frames.size(); ++j) out << (j ? "," : "") << v.frames[j];
    out << " u " << v.start.x << ' ' << v.start.y << " reference " << (i == p.reference ? 1 : 0)
        << '\n';
  }
  return out.str();
}

ViewPartition parse_partition(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ViewPartition p;
  bool have_ref = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    std::size_t idx = 0;
    std::size_t first = 0;
    std::size_t last = 0;
    std::string k1, k2, k3, frames, k4, k5;
    View v;
    int ref = 0;
    if (kw != "view" || !(ls >> idx >> k1 >> first >> k2 >> last >> k3 >> frames >> k4 >>
                          v.start.x >> v.start.y >> k5 >> ref) ||
        k1 != "first" || k2 != "last" || k3 != "frames" || k4 != "u" || k5 != "reference" ||
        idx != p.views.size()) {
      throw Error(ErrorKind::Io, "partition line " + std::to_string(lineno) + ": malformed");
    }
    std::istringstream fs(frames);
    for (std::string f; std::getline(fs, f, ',');) v.frames.push_back(std::stoul(f));
    if (v.frames.empty() || v.frames.front() != first || v.frames.back() != last) {
      throw Error(ErrorKind::Io, "partition line " + std::to_string(lineno) + ": frame list");
    }
    if (ref == 1) {
      if (have_ref) throw Error(ErrorKind::Io, "partition: more than one reference view");
      p.reference = idx;
      have_ref = true;
    }
    p.views.push_back(std::move(v));
  }
  if (p.views.empty() || !have_ref) throw Error(ErrorKind::Io, "partition: no views/reference");
  p.centroid = views_centroid(p);
  return p;
}

}  // namespace retmosaic
