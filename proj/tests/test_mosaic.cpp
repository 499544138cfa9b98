#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "retmosaic/error.hpp"
#include "retmosaic/mosaic.hpp"

using namespace retmosaic;

namespace {

const ImageGray& phantom() {
  static const ImageGray p = make_phantom(PhantomSpec{});
  return p;
}

ImageGray window(Point2 origin, int w, int h) {
  return warp_image(phantom(), [&](Point2 p) { return origin + p; }, w, h).image;
}

RegisteredView constant_view(int w, int h, double value, const ImageGray& weight, const PixelMask& mask) {
  RegisteredView v;
  v.image = ImageGray(w, h, value);
  v.mask = mask;
  v.weight = weight;
  v.included = true;
  return v;
}

// Reference at the window origin plus neighbours shifted by whole pixels.
struct Layout {
  std::vector<ImageGray> views;
  std::vector<QuadraticTransform> transforms;
};

Layout translated_layout(const std::vector<Point2>& shifts, int w, int h) {
  Layout l;
  for (Point2 s : shifts) {
    l.views.push_back(window(Point2{400, 300} + s, w, h));
    l.transforms.push_back(QuadraticTransform::translation({-s.x, -s.y}));
  }
  return l;
}

}  // namespace

TEST_CASE("canvas") {
  SUBCASE("single view") {
    const Canvas c = compute_canvas({QuadraticTransform{}}, 64, 48);
    CHECK(c.width == 68);
    CHECK(c.height == 52);
    CHECK(c.offset == Point2{2, 2});
  }
  SUBCASE("second view shifted by half a width") {
    const Canvas c = compute_canvas({QuadraticTransform{}, QuadraticTransform::translation({-32, 0})}, 64, 48);
    CHECK(c.width == 96 + 4);
    CHECK(c.height == 52);
  }
  SUBCASE("every covered pixel lies inside the canvas") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<QuadraticTransform> ts{QuadraticTransform{}};
      for (int i = 0; i < 3; ++i) {
        const double q[6] = {2e-4 * u(rng), 2e-4 * u(rng), 2e-4 * u(rng),
                             2e-4 * u(rng), 2e-4 * u(rng), 2e-4 * u(rng)};
        ts.push_back(fixture::centred_quadratic({39.5, 29.5}, 0.05 * u(rng), {50 * u(rng), 40 * u(rng)}, q));
      }
      const Canvas c = compute_canvas(ts, 80, 60);
      for (const auto& t : ts) {
        // each view pixel, mapped back to reference coordinates
        for (int y = 0; y < 60; ++y) {
          for (int x = 0; x < 80; ++x) {
            const auto r = t.invert({double(x), double(y)});
            REQUIRE(r.has_value());
            const Point2 cp = *r + c.offset;
            CHECK((cp.x >= 0 && cp.y >= 0 && cp.x <= c.width - 1 && cp.y <= c.height - 1));
          }
        }
      }
    }
  }
}

TEST_CASE("gating") {
  const ImageGray ref = window({400, 300}, 160, 120);
  const Canvas canvas = compute_canvas({QuadraticTransform{}}, 160, 120);
  const CanvasView r = warp_to_canvas(ref, QuadraticTransform{}, canvas, FrangiParams{});
  const MosaicConfig cfg;
  SUBCASE("reference against itself") {
    const GateResult g = gate_view(r, r, cfg);
    CHECK(g.included);
    CHECK(g.rho_intensity == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.rho_vessel == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.reason.empty());
  }
  SUBCASE("noise is excluded") {
    const CanvasView n =
        warp_to_canvas(oracle::random_image(160, 120, 3), QuadraticTransform{}, canvas, FrangiParams{});
    const GateResult g = gate_view(n, r, cfg);
    CHECK_FALSE(g.included);
    CHECK(std::abs(g.rho_intensity) < 0.1);
    CHECK_FALSE(g.reason.empty());
  }
  SUBCASE("no overlap") {
    CanvasView empty = r;
    empty.mask = PixelMask(r.mask.width(), r.mask.height());
    const GateResult g = gate_view(empty, r, cfg);
    CHECK_FALSE(g.included);
    CHECK(g.reason == "no overlap");
  }
  SUBCASE("thresholds are strict") {
    MosaicConfig strict;
    strict.rho_i_min = 1.0;
    CHECK_FALSE(gate_view(r, r, strict).included);
  }
}

TEST_CASE("weights") {
  const ImageGray kappa = distance_map(9, 9);
  PixelMask mask(9, 9, true);
  mask.set(4, 0, false);
  CHECK(compute_weights(mask, GateResult{false, 0.9, 0.9, "x"}, kappa) == ImageGray(9, 9));
  const ImageGray w = compute_weights(mask, GateResult{true, 0.9, 0.8, {}}, kappa);
  CHECK(w(4, 4) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(w(0, 4) == 0.0);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      CHECK(w(x, y) == (mask(x, y) ? 1.0 : 0.0) * kappa(x, y) * 0.8);
      CHECK(w(x, y) >= 0.0);
    }
  }
}

TEST_CASE("stitching") {
  SUBCASE("closed-form weighted mean of two constants") {
    const ImageGray wa = oracle::random_image(12, 10, 1);
    const ImageGray wb = oracle::random_image(12, 10, 2);
    const PixelMask all(12, 10, true);
    const MosaicResult m = stitch({constant_view(12, 10, 0.2, wa, all), constant_view(12, 10, 0.6, wb, all)});
    for (int y = 0; y < 10; ++y) {
      for (int x = 0; x < 12; ++x) {
        const double expect = (0.2 * wa(x, y) + 0.6 * wb(x, y)) / (wa(x, y) + wb(x, y));
        CHECK(m.z(x, y) == doctest::Approx(expect).epsilon(1e-14));
      }
    }
    CHECK(m.coverage.count() == 120);
  }
  SUBCASE("zero-weight ring falls back to the unweighted mean") {
    const PixelMask all(5, 5, true);
    const MosaicResult m = stitch({constant_view(5, 5, 0.2, ImageGray(5, 5), all),
                                   constant_view(5, 5, 0.4, ImageGray(5, 5), all)});
    CHECK(m.z(2, 2) == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("nothing included") {
    RegisteredView v = constant_view(4, 4, 0.5, ImageGray(4, 4, 1.0), PixelMask(4, 4, true));
    v.included = false;
    CHECK_THROWS_AS(stitch({v}), Error);
  }
  SUBCASE("random views: convexity, permutation and weight-scale invariance") {
    std::mt19937_64 rng(12);
    std::vector<RegisteredView> views;
    for (int i = 0; i < 5; ++i) {
      RegisteredView v;
      v.image = oracle::random_image(20, 16, 10 + i);
      v.weight = oracle::random_image(20, 16, 30 + i);
      v.mask = PixelMask(20, 16);
      for (std::size_t j = 0; j < v.mask.size(); ++j) {
        v.mask.set(j, (rng() % 3) != 0);
        if (!v.mask.at(j)) v.weight.pixels()[j] = 0.0;
        if (rng() % 7 == 0) v.weight.pixels()[j] = 0.0;
      }
      v.included = i != 3;
      views.push_back(v);
    }
    const MosaicResult m = stitch(views);
    for (std::size_t j = 0; j < m.z.size(); ++j) {
      double lo = 1e9, hi = -1e9;
      bool any = false;
      for (const auto& v : views) {
        if (!v.included || !v.mask.at(j)) continue;
        any = true;
        lo = std::min(lo, v.image.pixels()[j]);
        hi = std::max(hi, v.image.pixels()[j]);
      }
      CHECK(m.coverage.at(j) == any);
      if (any) {
        CHECK(m.z.pixels()[j] >= lo);
        CHECK(m.z.pixels()[j] <= hi);
        CHECK(std::isfinite(m.z.pixels()[j]));
      }
    }
    std::vector<RegisteredView> perm = views;
    std::reverse(perm.begin(), perm.end());
    std::swap(perm[0], perm[2]);
    CHECK(stitch(perm).z == m.z);
    std::vector<RegisteredView> doubled = views;
    for (auto& v : doubled) {
      for (double& w : v.weight.pixels()) w *= 2.0;
    }
    CHECK(stitch(doubled).z == m.z);
  }
}

TEST_CASE("mosaic assembly") {
  const int w = 200, h = 150;
  SUBCASE("single view reproduces itself") {
    const Layout l = translated_layout({{0, 0}}, w, h);
    const MosaicBuild b = build_mosaic(l.views, l.transforms, 0, MosaicConfig{});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) CHECK(b.mosaic.z(x + 2, y + 2) == l.views[0](x, y));
    }
    CHECK(b.mosaic.coverage.count() == static_cast<std::size_t>(w * h));
  }
  const Layout l = translated_layout({{0, 0}, {100, 0}, {0, 70}, {-100, -30}}, w, h);
  const MosaicBuild b = build_mosaic(l.views, l.transforms, 0, MosaicConfig{});
  SUBCASE("consistent views are included and enlarge the coverage") {
    for (const auto& r : b.mosaic.report) CHECK(r.included);
    CHECK(b.mosaic.coverage.count() > static_cast<std::size_t>(w * h));
    // identical content in the overlaps leaves no seam
    const ImageGray truth = window(Point2{400, 300} - b.canvas.offset, b.canvas.width, b.canvas.height);
    double worst = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (b.mosaic.coverage.at(j)) worst = std::max(worst, std::abs(b.mosaic.z.pixels()[j] - truth.pixels()[j]));
    }
    CHECK(worst <= 0.02);
  }
  SUBCASE("excluding every other view leaves the reference") {
    MosaicConfig strict;
    strict.rho_i_min = 1.5;
    strict.rho_v_min = 1.5;
    const MosaicBuild s = build_mosaic(l.views, l.transforms, 0, strict);
    for (std::size_t i = 1; i < s.views.size(); ++i) CHECK_FALSE(s.views[i].included);
    for (std::size_t j = 0; j < s.mosaic.z.size(); ++j) {
      if (s.views[0].mask.at(j)) CHECK(s.mosaic.z.pixels()[j] == s.views[0].image.pixels()[j]);
    }
    CHECK(s.mosaic.coverage == s.views[0].mask);
  }
  SUBCASE("weights vanish outside the mask and for excluded views") {
    for (const auto& v : b.views) {
      for (std::size_t j = 0; j < v.weight.size(); ++j) {
        CHECK(v.weight.pixels()[j] >= 0.0);
        if (!v.mask.at(j)) CHECK(v.weight.pixels()[j] == 0.0);
      }
    }
  }
  SUBCASE("view order does not matter") {
    const Layout p = translated_layout({{-100, -30}, {0, 70}, {100, 0}, {0, 0}}, w, h);
    const MosaicBuild c = build_mosaic(p.views, p.transforms, 3, MosaicConfig{});
    CHECK(c.mosaic.z == b.mosaic.z);
    CHECK(c.mosaic.coverage == b.mosaic.coverage);
  }
  SUBCASE("inclusion report text") {
    const std::string text = serialize_inclusion_report(b.mosaic.report);
    CHECK(text.find("view 0 included 1") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  }
}
