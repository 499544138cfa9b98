#include "retmosaic/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/filters.hpp"
#include "retmosaic/image_io.hpp"
#include "retmosaic/sampling.hpp"

namespace retmosaic {

void PhantomSpec::validate() const {
  if (width < 16 || height < 16) throw Error(ErrorKind::Config, "phantom smaller than 16x16");
  if (!(disk_radius > 0.0)) throw Error(ErrorKind::Config, "disk radius must be positive");
  if (disk_center.x - disk_radius < 0.0 || disk_center.y - disk_radius < 0.0 ||
      disk_center.x + disk_radius > width - 1.0 || disk_center.y + disk_radius > height - 1.0) {
    throw Error(ErrorKind::Config, "disk must lie inside the phantom");
  }
  for (const auto& v : vessels) {
    if (!(v.width > 0.0)) throw Error(ErrorKind::Config, "vessel width must be positive");
    if (v.points.size() < 2) throw Error(ErrorKind::Config, "vessel needs two points");
  }
}

namespace {

void grow_vessel(std::mt19937_64& rng, Point2 start, double heading, double length, double width,
                 double contrast, int depth, const PhantomSpec& spec,
                 std::vector<VesselStroke>& out) {
  std::uniform_real_distribution<double> turn(-0.18, 0.18);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double kStep = 12.0;
  VesselStroke s;
  s.width = width;
  s.contrast = contrast;
  s.points.push_back(start);
  Point2 p = start;
  std::vector<std::pair<Point2, double>> branches;
  for (double walked = 0.0; walked < length; walked += kStep) {
    heading += turn(rng);
    p = p + kStep * Point2{std::cos(heading), std::sin(heading)};
    s.points.push_back(p);
    if (p.x < -20 || p.y < -20 || p.x > spec.width + 20 || p.y > spec.height + 20) break;
    if (depth < 2 && walked > 60.0 && unit(rng) < 0.06) branches.emplace_back(p, heading);
  }
  out.push_back(std::move(s));
  for (const auto& [bp, bh] : branches) {
    const double side = unit(rng) < 0.5 ? -1.0 : 1.0;
    grow_vessel(rng, bp, bh + side * (0.5 + 0.4 * unit(rng)), 0.55 * length, 0.65 * width,
                0.85 * contrast, depth + 1, spec, out);
  }
}

}  // namespace

std::vector<VesselStroke> generate_vessel_tree(const PhantomSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<VesselStroke> out;
  constexpr int kMain = 10;
  for (int i = 0; i < kMain; ++i) {
    const double heading = 2.0 * std::numbers::pi * (i + 0.3 * unit(rng)) / kMain;
    const Point2 start =
        spec.disk_center + 0.4 * spec.disk_radius * Point2{std::cos(heading), std::sin(heading)};
    grow_vessel(rng, start, heading, 700.0 + 200.0 * unit(rng), 6.0 + 2.0 * unit(rng),
                0.22 + 0.08 * unit(rng), 0, spec, out);
  }
  return out;
}

ImageGray make_phantom(const PhantomSpec& spec_in) {
  PhantomSpec spec = spec_in;
  if (spec.vessels.empty()) spec.vessels = generate_vessel_tree(spec);
  spec.validate();
  const int w = spec.width;
  const int h = spec.height;

  std::mt19937_64 rng(spec.seed ^ 0x5851f42d4c957f2dULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  struct Wave {
    double kx, ky, phase;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 8; ++i) {
    const double angle = std::numbers::pi * unit(rng);
    const double wavelength = 30.0 + 120.0 * unit(rng);
    const double k = 2.0 * std::numbers::pi / wavelength;
    waves.push_back({k * std::cos(angle), k * std::sin(angle), 2.0 * std::numbers::pi * unit(rng)});
  }

  ImageGray darkening(w, h);
  for (const auto& v : spec.vessels) {
    for (std::size_t s = 0; s + 1 < v.points.size(); ++s) {
      const Point2 a = v.points[s];
      const Point2 b = v.points[s + 1];
      const Point2 ab = b - a;
      const double len2 = ab.x * ab.x + ab.y * ab.y;
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - v.width)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + v.width)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - v.width)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + v.width)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Point2 p{static_cast<double>(x), static_cast<double>(y)};
          const Point2 ap = p - a;
          const double t = len2 > 0.0 ? std::clamp((ap.x * ab.x + ap.y * ab.y) / len2, 0.0, 1.0) : 0.0;
          const double d = distance(p, a + t * ab);
          if (d >= v.width) continue;
          const double profile = 0.5 + 0.5 * std::cos(std::numbers::pi * d / v.width);
          darkening(x, y) = std::max(darkening(x, y), v.contrast * profile);
        }
      }
    }
  }

  ImageGray img(w, h);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double rmax2 = cx * cx + cy * cy;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double texture = 0.0;
      for (const auto& wv : waves) texture += std::sin(wv.kx * x + wv.ky * y + wv.phase);
      texture *= spec.texture_amplitude / std::sqrt(static_cast<double>(waves.size()));
      const double dd = distance({static_cast<double>(x), static_cast<double>(y)}, spec.disk_center);
      const double disk = spec.disk_contrast * std::clamp((spec.disk_radius - dd) / 2.0 + 0.5, 0.0, 1.0);
      const double base = spec.background + spec.gradient_amplitude * (x / (w - 1.0) - 0.5) +
                          texture + disk;
      const double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
      const double v = base * (1.0 - spec.vignetting * r2) - darkening(x, y);
      img(x, y) = std::clamp(v, 0.05, 0.95);
    }
  }
  return img;
}

void MotionScript::validate() const {
  if (frame_width < 16 || frame_height < 16) throw Error(ErrorKind::Config, "frames smaller than 16x16");
  if (magnification < 1) throw Error(ErrorKind::Config, "magnification must be >= 1");
  if (!(psf_sigma >= 0.0)) throw Error(ErrorKind::Config, "psf_sigma must be >= 0");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::Config, "noise_sigma must be >= 0");
  if (views.empty()) throw Error(ErrorKind::Config, "script has no views");
  phantom.validate();
  for (const auto& v : views) {
    if (v.frames < 1) throw Error(ErrorKind::Config, "view needs at least one frame");
    if (v.transit < 0) throw Error(ErrorKind::Config, "transit must be >= 0");
    if (!(v.jitter >= 0.0 && v.jitter <= 2.5)) {
      throw Error(ErrorKind::Config, "jitter must lie in [0, 2.5] px to stay within d_max");
    }
    for (int k = 0; k < v.frames; ++k) {
      const double g = v.gain * (1.0 + gain_drift * k);
      if (!(g >= 0.5 && g <= 2.0)) throw Error(ErrorKind::Config, "frame gain outside [0.5, 2]");
    }
  }
}

Point2 MotionScript::origin() const {
  if (reference_origin) return *reference_origin;
  return {std::round(0.5 * (phantom.width - magnification * frame_width)),
          std::round(0.5 * (phantom.height - magnification * frame_height))};
}

namespace {

std::vector<double> parse_numbers(const std::string& value, std::size_t count, int lineno,
                                  const std::string& key) {
  std::istringstream in(value);
  std::vector<double> out;
  double v;
  while (in >> v) out.push_back(v);
  if (out.size() != count || !in.eof()) {
    throw Error(ErrorKind::Config, "script line " + std::to_string(lineno) + ": " + key +
                                       " expects " + std::to_string(count) + " number(s)");
  }
  return out;
}

}  // namespace

MotionScript parse_motion_script(const std::string& text) {
  MotionScript s;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  ViewScript* view = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    if (line == "[view]") {
      s.views.emplace_back();
      view = &s.views.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "script line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    const std::string value = line.substr(eq + 1);
    auto num = [&](std::size_t n = 1) { return parse_numbers(value, n, lineno, key); };
    auto integer = [&]() {
      const double v = num()[0];
      if (v != std::floor(v)) {
        throw Error(ErrorKind::Config, "script line " + std::to_string(lineno) + ": " + key + " must be an integer");
      }
      return static_cast<int>(v);
    };
    if (view) {
      if (key == "offset") {
        const auto v = num(2);
        view->offset = {v[0], v[1]};
      } else if (key == "rotation_deg") {
        view->rotation_deg = num()[0];
      } else if (key == "curvature") {
        const auto v = num(6);
        std::copy(v.begin(), v.end(), view->curvature.begin());
      } else if (key == "frames") {
        view->frames = integer();
      } else if (key == "jitter") {
        view->jitter = num()[0];
      } else if (key == "gain") {
        view->gain = num()[0];
      } else if (key == "intensity_offset") {
        view->intensity_offset = num()[0];
      } else if (key == "transit") {
        view->transit = integer();
      } else {
        throw Error(ErrorKind::Config, "script line " + std::to_string(lineno) + ": unknown view key " + key);
      }
      continue;
    }
    if (key == "frame_width") {
      s.frame_width = integer();
    } else if (key == "frame_height") {
      s.frame_height = integer();
    } else if (key == "magnification") {
      s.magnification = integer();
    } else if (key == "psf_sigma") {
      s.psf_sigma = num()[0];
    } else if (key == "noise_sigma" || key == "noise") {
      s.noise_sigma = num()[0];
    } else if (key == "gain_drift") {
      s.gain_drift = num()[0];
    } else if (key == "reference_origin") {
      const auto v = num(2);
      s.reference_origin = Point2{v[0], v[1]};
    } else if (key == "phantom_width") {
      s.phantom.width = integer();
    } else if (key == "phantom_height") {
      s.phantom.height = integer();
    } else if (key == "disk_center") {
      const auto v = num(2);
      s.phantom.disk_center = {v[0], v[1]};
    } else if (key == "disk_radius") {
      s.phantom.disk_radius = num()[0];
    } else if (key == "disk_contrast") {
      s.phantom.disk_contrast = num()[0];
    } else if (key == "background") {
      s.phantom.background = num()[0];
    } else if (key == "gradient_amplitude") {
      s.phantom.gradient_amplitude = num()[0];
    } else if (key == "vignetting") {
      s.phantom.vignetting = num()[0];
    } else if (key == "texture_amplitude") {
      s.phantom.texture_amplitude = num()[0];
    } else if (key == "phantom_seed") {
      s.phantom.seed = static_cast<std::uint64_t>(integer());
    } else {
      throw Error(ErrorKind::Config, "script line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  s.validate();
  return s;
}

MotionScript load_motion_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open script " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_motion_script(ss.str());
}

std::string serialize_motion_script(const MotionScript& s) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "frame_width = " << s.frame_width << '\n'
      << "frame_height = " << s.frame_height << '\n'
      << "magnification = " << s.magnification << '\n'
      << "psf_sigma = " << s.psf_sigma << '\n'
      << "noise_sigma = " << s.noise_sigma << '\n'
      << "gain_drift = " << s.gain_drift << '\n';
  if (s.reference_origin) {
    out << "reference_origin = " << s.reference_origin->x << ' ' << s.reference_origin->y << '\n';
  }
  const auto& p = s.phantom;
  out << "phantom_width = " << p.width << '\n'
      << "phantom_height = " << p.height << '\n'
      << "disk_center = " << p.disk_center.x << ' ' << p.disk_center.y << '\n'
      << "disk_radius = " << p.disk_radius << '\n'
      << "disk_contrast = " << p.disk_contrast << '\n'
      << "background = " << p.background << '\n'
      << "gradient_amplitude = " << p.gradient_amplitude << '\n'
      << "vignetting = " << p.vignetting << '\n'
      << "texture_amplitude = " << p.texture_amplitude << '\n'
      << "phantom_seed = " << p.seed << '\n';
  for (const auto& v : s.views) {
    out << "\n[view]\n"
        << "offset = " << v.offset.x << ' ' << v.offset.y << '\n'
        << "rotation_deg = " << v.rotation_deg << '\n'
        << "curvature =";
    for (double c : v.curvature) out << ' ' << c;
    out << '\n'
        << "frames = " << v.frames << '\n'
        << "jitter = " << v.jitter << '\n'
        << "gain = " << v.gain << '\n'
        << "intensity_offset = " << v.intensity_offset << '\n'
        << "transit = " << v.transit << '\n';
  }
  return out.str();
}

MotionScript ten_view_script() {
  MotionScript s;
  const std::array<Point2, 10> offsets{{{0, 0},
                                        {100, 0},
                                        {0, 60},
                                        {-100, 0},
                                        {0, -60},
                                        {100, -60},
                                        {-100, -60},
                                        {100, 60},
                                        {-100, 60},
                                        {50, 30}}};
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    ViewScript v;
    v.offset = offsets[i];
    if (i > 0) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      v.curvature = {sign * 1e-5, -sign * 5e-6, 0.0, 5e-6, sign * 1e-5, 0.0};
      v.rotation_deg = 0.5 * sign;
      v.transit = 2;
      v.gain = 1.0 + 0.05 * sign;
      v.intensity_offset = -0.01 * sign;
    }
    s.views.push_back(v);
  }
  return s;
}

QuadraticTransform view_transform(const ViewScript& view, int magnification, int frame_width,
                                  int frame_height) {
  const double m = magnification;
  const double c1 = 0.5 * (m * frame_width - 1.0);
  const double c2 = 0.5 * (m * frame_height - 1.0);
  const double th = view.rotation_deg * std::numbers::pi / 180.0;
  const double A[2][2] = {{std::cos(th), -std::sin(th)}, {std::sin(th), std::cos(th)}};
  const double t[2] = {m * view.offset.x, m * view.offset.y};
  const double c[2] = {c1, c2};
  QuadraticTransform::Params p{};
  for (int r = 0; r < 2; ++r) {
    const double q1 = view.curvature[static_cast<std::size_t>(3 * r)];
    const double q2 = view.curvature[static_cast<std::size_t>(3 * r + 1)];
    const double q3 = view.curvature[static_cast<std::size_t>(3 * r + 2)];
    double* row = p.data() + 6 * r;
    row[0] = q1;
    row[1] = q2;
    row[2] = q3;
    row[3] = A[r][0] - 2.0 * c1 * q1 - c2 * q3;
    row[4] = A[r][1] - 2.0 * c2 * q2 - c1 * q3;
    row[5] = c[r] - A[r][0] * c1 - A[r][1] * c2 - t[r] + q1 * c1 * c1 + q2 * c2 * c2 + q3 * c1 * c2;
  }
  return QuadraticTransform(p);
}

EyeTrack GroundTruthBundle::true_track() const {
  EyeTrack t;
  const double r = script.phantom.disk_radius / script.magnification;
  for (const auto& f : frame_truth) t.push_back(DiskDetection{f.track, r, 1.0});
  return t;
}

ImageGray forward_render(const ImageGray& x, const ObservationModel& model, std::size_t k) {
  ImageGray y = apply_system(x, model, k).image;
  if (model.illumination.empty()) return y;
  const Illumination& il = model.illumination[k];
  auto px = y.pixels();
  const auto g = il.gain.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = g[i] * px[i] + il.offset;
  return y;
}

namespace {

struct Renderer {
  const ImageGray& phantom;
  const MotionScript& script;
  Point2 origin;
  int m = 2;
  int margin_low = 0;
  int margin = 0;  // high-res

  ImageGray render_view(const QuadraticTransform& t) const {
    const int bw = m * script.frame_width + 2 * margin;
    const int bh = m * script.frame_height + 2 * margin;
    ImageGray big(bw, bh);
    std::size_t outside = 0;
    const double xmax = phantom.width() - 1.0;
    const double ymax = phantom.height() - 1.0;
    for (int y = 0; y < bh; ++y) {
      for (int x = 0; x < bw; ++x) {
        const Point2 w{static_cast<double>(x - margin), static_cast<double>(y - margin)};
        const auto p = t.invert(w);
        Point2 q = p ? *p + origin : Point2{-1.0, -1.0};
        if (!p || q.x < 0.0 || q.y < 0.0 || q.x > xmax || q.y > ymax) {
          ++outside;
          q = {std::clamp(q.x, 0.0, xmax), std::clamp(q.y, 0.0, ymax)};
        }
        big(x, y) = *sample_bilinear(phantom, q);
      }
    }
    if (static_cast<double>(outside) > 0.1 * bw * bh) {
      throw Error(ErrorKind::Config, "script exceeds phantom");
    }
    return big;
  }

  // Low-res frame of `big` seen through `motion` with uniform illumination.
  ImageGray render_frame(const ImageGray& big, const AffineMotion& motion, double gain,
                         double offset) const {
    const int g = margin_low;
    ObservationModel model;
    model.magnification = m;
    model.psf_sigma = script.psf_sigma;
    model.low_width = script.frame_width + 2 * g;
    model.low_height = script.frame_height + 2 * g;
    AffineMotion shifted = motion;
    shifted.b1 = motion.b1 + g - (motion.a11 * g + motion.a12 * g);
    shifted.b2 = motion.b2 + g - (motion.a21 * g + motion.a22 * g);
    model.motions = {shifted};
    ImageGray gain_img(model.low_width, model.low_height);
    for (double& v : gain_img.pixels()) v = gain;
    model.illumination = {Illumination{std::move(gain_img), offset}};
    const ImageGray full = forward_render(big, model, 0);
    return crop(full, {g, g, script.frame_width, script.frame_height});
  }
};

}  // namespace

GroundTruthBundle generate_sequence(const ImageGray& phantom, const MotionScript& script,
                                    std::uint64_t seed) {
  script.validate();
  GroundTruthBundle b;
  b.script = script;
  b.seed = seed;
  b.phantom = phantom;

  Renderer r{phantom, script, script.origin()};
  r.m = script.magnification;
  double max_jitter = 0.0;
  for (const auto& v : script.views) max_jitter = std::max(max_jitter, v.jitter);
  const int psf_radius = static_cast<int>(gaussian_kernel(script.psf_sigma).size() / 2);
  r.margin_low = static_cast<int>(std::ceil(1.5 * max_jitter)) + (psf_radius + r.m - 1) / r.m + 2;
  r.margin = r.m * r.margin_low;

  const double m = r.m;
  const double c = 0.5 * (m - 1.0);
  const Point2 disk_ref = script.phantom.disk_center - r.origin;
  const int hw = r.m * script.frame_width;
  const int hh = r.m * script.frame_height;
  const double fcx = 0.5 * (script.frame_width - 1.0);
  const double fcy = 0.5 * (script.frame_height - 1.0);

  auto emit = [&](const ImageGray& big, const QuadraticTransform& t, std::size_t view,
                  int index, const AffineMotion& motion, double gain, double offset,
                  std::mt19937_64& rng) {
    ImageGray frame = r.render_frame(big, motion, gain, offset);
    if (script.noise_sigma > 0.0) {
      std::normal_distribution<double> noise(0.0, script.noise_sigma);
      for (double& v : frame.pixels()) v += noise(rng);
    }
    for (double& v : frame.pixels()) v = std::clamp(v, 0.0, 1.0);
    const Point2 w = t.apply(disk_ref);
    const Point2 u0{(w.x - c) / m, (w.y - c) / m};
    const double det = motion.det();
    const Point2 d{u0.x - motion.b1, u0.y - motion.b2};
    const Point2 uk{(motion.a22 * d.x - motion.a12 * d.y) / det,
                    (-motion.a21 * d.x + motion.a11 * d.y) / det};
    b.frames.push_back(std::move(frame));
    b.frame_truth.push_back({view, index, motion, uk, gain, offset});
  };

  for (std::size_t i = 0; i < script.views.size(); ++i) {
    const ViewScript& vs = script.views[i];
    if (i > 0) {
      const ViewScript& prev = script.views[i - 1];
      for (int s = 1; s <= vs.transit; ++s) {
        ViewScript tv;
        const double a = static_cast<double>(s) / (vs.transit + 1);
        tv.offset = prev.offset + a * (vs.offset - prev.offset);
        const QuadraticTransform t =
            view_transform(tv, r.m, script.frame_width, script.frame_height);
        std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(b.frames.size()));
        emit(r.render_view(t), t, i, -1, AffineMotion::identity(), vs.gain, vs.intensity_offset,
             rng);
      }
    }
    const QuadraticTransform t = view_transform(vs, r.m, script.frame_width, script.frame_height);
    const ImageGray big = r.render_view(t);
    b.view_transforms.push_back(t);
    b.view_truth.push_back(crop(big, {r.margin, r.margin, hw, hh}));
    b.view_first_frame.push_back(b.frames.size());
    for (int k = 0; k < vs.frames; ++k) {
      std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(b.frames.size()));
      AffineMotion motion;
      if (k > 0 && vs.jitter > 0.0) {
        std::uniform_real_distribution<double> shift(-vs.jitter, vs.jitter);
        const double angle_max = vs.jitter / (2.0 * std::max(script.frame_width, script.frame_height));
        std::uniform_real_distribution<double> angle(-angle_max, angle_max);
        const double tx = shift(rng);
        const double ty = shift(rng);
        const double th = angle(rng);
        motion.a11 = std::cos(th);
        motion.a12 = -std::sin(th);
        motion.a21 = std::sin(th);
        motion.a22 = std::cos(th);
        motion.b1 = fcx - (motion.a11 * fcx + motion.a12 * fcy) + tx;
        motion.b2 = fcy - (motion.a21 * fcx + motion.a22 * fcy) + ty;
      }
      const double gain = vs.gain * (1.0 + script.gain_drift * k);
      emit(big, t, i, k, motion, gain, vs.intensity_offset, rng);
    }
  }
  return b;
}

void export_bundle(const GroundTruthBundle& bundle, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path frames = dir / "frames";
  fs::create_directories(frames);
  for (std::size_t k = 0; k < bundle.frames.size(); ++k) {
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << k << ".pgm";
    write_pgm(frames / name.str(), bundle.frames[k]);
  }
  auto write_text = [&](const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + p.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed: " + p.string());
  };
  write_text(dir / "track.txt", serialize_track(bundle.true_track()));
  write_text(dir / "script.txt", serialize_motion_script(bundle.script));
  std::ostringstream motions;
  motions << std::setprecision(17);
  motions << "# frame view index_in_view a11 a12 b1 a21 a22 b2 gain offset\n";
  for (std::size_t k = 0; k < bundle.frame_truth.size(); ++k) {
    const auto& f = bundle.frame_truth[k];
    motions << k << ' ' << f.view << ' ' << f.index_in_view << ' ' << f.motion.a11 << ' '
            << f.motion.a12 << ' ' << f.motion.b1 << ' ' << f.motion.a21 << ' ' << f.motion.a22
            << ' ' << f.motion.b2 << ' ' << f.gain << ' ' << f.offset << '\n';
  }
  write_text(dir / "motions.txt", motions.str());
  std::ostringstream views;
  views << "seed " << bundle.seed << '\n';
  for (std::size_t i = 0; i < bundle.view_transforms.size(); ++i) {
    const std::string stem = "view_" + std::to_string(i);
    write_transform(dir / (stem + ".transform"), bundle.view_transforms[i]);
    write_dimg(dir / (stem + "_truth.dimg"), bundle.view_truth[i]);
    views << "view " << i << " first_frame " << bundle.view_first_frame[i] << " frames "
          << bundle.script.views[i].frames << '\n';
  }
  write_text(dir / "views.txt", views.str());
  write_dimg(dir / "phantom.dimg", bundle.phantom);
}

double psnr(const ImageGray& a, const ImageGray& b, const PixelMask* mask) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::Config, "psnr: dimension mismatch");
  }
  if (mask && !same_shape(a, *mask)) throw Error(ErrorKind::Config, "psnr: mask mismatch");
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (mask && !mask->at(i)) continue;
    const double d = pa[i] - pb[i];
    sum += d * d;
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::Config, "psnr: empty mask");
  if (sum == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(static_cast<double>(n) / sum);
}

}  // namespace retmosaic
