#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "retmosaic/error.hpp"
#include "retmosaic/image_io.hpp"
#include "retmosaic/simulate.hpp"

using namespace retmosaic;
namespace fs = std::filesystem;

namespace {

MotionScript small_script() {
  MotionScript s;
  s.frame_width = 64;
  s.frame_height = 48;
  s.phantom.width = 320;
  s.phantom.height = 256;
  s.phantom.disk_center = {160, 128};
  s.phantom.disk_radius = 20;
  ViewScript a;
  a.frames = 4;
  ViewScript b = a;
  b.offset = {40, 10};
  b.rotation_deg = 1.0;
  b.curvature = {2e-4, 0, 1e-4, 0, -2e-4, 0};
  b.transit = 1;
  b.gain = 1.1;
  b.intensity_offset = -0.02;
  s.views = {a, b};
  return s;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("phantom") {
  const PhantomSpec spec;
  const ImageGray a = make_phantom(spec);
  CHECK(a == make_phantom(spec));
  CHECK(a.width() == 1280);
  CHECK(a.height() == 960);
  for (double v : a.pixels()) CHECK((v >= 0.05 && v <= 0.95));

  SUBCASE("disk is brighter than the image") {
    double disk = 0, all = 0;
    int nd = 0;
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        all += a(x, y);
        if (std::hypot(x - 640.0, y - 480.0) <= 25) {
          disk += a(x, y);
          ++nd;
        }
      }
    }
    CHECK(disk / nd > all / a.size());
  }
  SUBCASE("vessel centrelines are darker than their surroundings") {
    const auto strokes = generate_vessel_tree(spec);
    REQUIRE_FALSE(strokes.empty());
    int darker = 0, total = 0;
    for (const auto& s : strokes) {
      for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
        const Point2 p = 0.5 * (s.points[i] + s.points[i + 1]);
        const Point2 d = s.points[i + 1] - s.points[i];
        const double len = std::hypot(d.x, d.y);
        if (len < 1e-9) continue;
        const Point2 nrm{-d.y / len, d.x / len};
        const double off = 2.5 * s.width;
        const Point2 l = p + off * nrm, r = p - off * nrm;
        if (std::hypot(p.x - 640, p.y - 480) < 40) continue;
        const auto c = oracle::bilinear(a, p.x, p.y);
        const auto bl = oracle::bilinear(a, l.x, l.y);
        const auto br = oracle::bilinear(a, r.x, r.y);
        if (!c || !bl || !br) continue;
        ++total;
        if (*c < 0.5 * (*bl + *br)) ++darker;
      }
    }
    REQUIRE(total > 50);
    CHECK(darker >= 0.9 * total);
  }
  SUBCASE("different seeds give different trees") {
    PhantomSpec other = spec;
    other.seed = 2;
    CHECK_FALSE(make_phantom(other) == a);
  }
  SUBCASE("invalid specs") {
    PhantomSpec bad = spec;
    bad.disk_center = {1270, 480};
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("degradation-free frames are phantom crops") {
  MotionScript s = small_script();
  s.magnification = 1;
  s.psf_sigma = 0.0;
  s.noise_sigma = 0.0;
  s.views.resize(1);
  s.views[0].jitter = 0.0;
  const ImageGray ph = make_phantom(s.phantom);
  const GroundTruthBundle b = generate_sequence(ph, s, 1);
  const Point2 o = s.origin();
  REQUIRE(b.frames.size() == 4);
  for (const auto& f : b.frames) {
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 64; ++x) REQUIRE(f(x, y) == ph(static_cast<int>(o.x) + x, static_cast<int>(o.y) + y));
    }
  }
}

TEST_CASE("forward render is the observation operator") {
  ObservationModel model;
  model.magnification = 2;
  model.psf_sigma = 0.8;
  model.low_width = 20;
  model.low_height = 16;
  AffineMotion m;
  m.b1 = 0.6;
  m.a12 = 0.01;
  model.motions = {AffineMotion::identity(), m};
  const ImageGray x = oracle::random_image(40, 32, 3);
  CHECK(forward_render(x, model, 1) == apply_system(x, model, 1).image);
  model.illumination = {{ImageGray(20, 16, 1.0), 0.0}, {oracle::random_image(20, 16, 4, 0.8, 1.2), 0.03}};
  const ImageGray r = forward_render(x, model, 1);
  const ImageGray p = apply_system(x, model, 1).image;
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r.pixels()[i] == model.illumination[1].gain.pixels()[i] * p.pixels()[i] + 0.03);
  }
}

TEST_CASE("noise statistics") {
  MotionScript s = small_script();
  s.noise_sigma = 0.01;
  const ImageGray ph = make_phantom(s.phantom);
  const GroundTruthBundle noisy = generate_sequence(ph, s, 8);
  s.noise_sigma = 0.0;
  const GroundTruthBundle clean = generate_sequence(ph, s, 8);
  REQUIRE(noisy.frames.size() == clean.frames.size());
  for (std::size_t k = 0; k < noisy.frames.size(); ++k) {
    double ss = 0, sm = 0;
    const auto a = noisy.frames[k].pixels(), c = clean.frames[k].pixels();
    for (std::size_t i = 0; i < a.size(); ++i) {
      sm += a[i] - c[i];
      ss += (a[i] - c[i]) * (a[i] - c[i]);
    }
    const double n = static_cast<double>(a.size());
    const double sd = std::sqrt(ss / n - (sm / n) * (sm / n));
    CHECK(std::abs(sd - 0.01) <= 0.0005);
  }
}

TEST_CASE("sequence structure and determinism") {
  const MotionScript s = small_script();
  const ImageGray ph = make_phantom(s.phantom);
  const GroundTruthBundle a = generate_sequence(ph, s, 4);
  const GroundTruthBundle b = generate_sequence(ph, s, 4);
  REQUIRE(a.frames.size() == 9);
  for (std::size_t k = 0; k < a.frames.size(); ++k) CHECK(a.frames[k] == b.frames[k]);
  CHECK_FALSE(generate_sequence(ph, s, 5).frames[1] == a.frames[1]);

  CHECK(a.frame_truth[4].index_in_view == -1);
  CHECK(a.frame_truth[5].index_in_view == 0);
  CHECK(a.view_first_frame == std::vector<std::size_t>{0, 5});
  CHECK(a.view_transforms.size() == 2);
  CHECK(a.view_truth[0].width() == 128);
  for (const auto& t : a.frame_truth) {
    CHECK((t.gain >= 0.5 && t.gain <= 2.0));
    if (t.index_in_view == 0) CHECK(t.motion.b1 == 0.0);
  }
  // first frames of the two views are 40 px apart horizontally
  const EyeTrack track = a.true_track();
  CHECK(std::abs(track[0]->center.x - track[5]->center.x - 40.0) <= 2.0);
  for (const auto& f : a.frames) {
    for (double v : f.pixels()) CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("scripts") {
  SUBCASE("text round trip") {
    const MotionScript s = ten_view_script();
    const std::string text = serialize_motion_script(s);
    CHECK(serialize_motion_script(parse_motion_script(text)) == text);
    CHECK(parse_motion_script(text).views.size() == 10);
  }
  SUBCASE("ten-view layout keeps consecutive starts apart") {
    const MotionScript s = ten_view_script();
    for (std::size_t i = 1; i < s.views.size(); ++i) {
      CHECK(distance(s.views[i].offset, s.views[i - 1].offset) >= 100.0);
    }
  }
  SUBCASE("script exceeding the phantom") {
    MotionScript s = small_script();
    s.views[1].offset = {200, 0};
    try {
      generate_sequence(make_phantom(s.phantom), s, 1);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("script exceeds phantom") != std::string::npos);
    }
  }
  SUBCASE("malformed scripts") {
    CHECK_THROWS_AS(parse_motion_script("frame_width = abc\n"), Error);
    CHECK_THROWS_AS(parse_motion_script("[view]\njitter = 9\n"), Error);
  }
}

TEST_CASE("bundle export") {
  const MotionScript s = small_script();
  const GroundTruthBundle b = generate_sequence(make_phantom(s.phantom), s, 2);
  const fs::path d1 = fs::temp_directory_path() / "retmosaic_bundle_1";
  const fs::path d2 = fs::temp_directory_path() / "retmosaic_bundle_2";
  fs::remove_all(d1);
  fs::remove_all(d2);
  export_bundle(b, d1);
  export_bundle(generate_sequence(make_phantom(s.phantom), s, 2), d2);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(file_bytes(e.path()) == file_bytes(d2 / fs::relative(e.path(), d1)));
  }
  CHECK(files >= 9 + 3);
  CHECK(read_pgm(d1 / "frames" / "frame_0000.pgm") == read_pgm(d2 / "frames" / "frame_0000.pgm"));
  CHECK(fs::exists(d1 / "track.txt"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("psnr") {
  const ImageGray a(10, 10, 0.5);
  CHECK(psnr(a, ImageGray(10, 10, 0.6)) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(a, a) == kPsnrIdentical);
  const ImageGray x = oracle::random_image(9, 7, 1), y = oracle::random_image(9, 7, 2);
  double mse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x.pixels()[i] - y.pixels()[i]) * (x.pixels()[i] - y.pixels()[i]);
  mse /= x.size();
  CHECK(psnr(x, y) == doctest::Approx(10 * std::log10(1 / mse)).epsilon(1e-12));
  PixelMask m(9, 7);
  m.set(3, 3, true);
  const double d = x(3, 3) - y(3, 3);
  CHECK(psnr(x, y, &m) == doctest::Approx(10 * std::log10(1 / (d * d))).epsilon(1e-12));
}
