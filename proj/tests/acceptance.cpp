// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "retmosaic/error.hpp"
#include "retmosaic/image_io.hpp"
#include "retmosaic/mosaic.hpp"
#include "retmosaic/pipeline.hpp"
#include "retmosaic/quality.hpp"
#include "retmosaic/simulate.hpp"
#include "retmosaic/superres.hpp"
#include "retmosaic/tracking.hpp"

using namespace retmosaic;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "retmosaic_acceptance";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

ImageGray quantize8(ImageGray img) {
  for (double& v : img.pixels()) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  return img;
}

// --- shared 10-view run -------------------------------------------------------

struct TenViewRun {
  GroundTruthBundle bundle;
  fs::path frames_dir;
  fs::path out;
  RunManifest manifest;
  double seconds = 0.0;
};

const TenViewRun& ten_view_run() {
  static const TenViewRun run = [] {
    TenViewRun r;
    const MotionScript s = ten_view_script();
    r.bundle = generate_sequence(make_phantom(s.phantom), s, 3);
    const fs::path dir = kRoot / "ten_view";
    fs::remove_all(dir);
    export_bundle(r.bundle, dir);
    r.frames_dir = dir / "frames";
    r.out = kRoot / "ten_view_out";
    fs::remove_all(r.out);
    PipelineConfig cfg;
    cfg.input_dir = r.frames_dir;
    cfg.output_dir = r.out;
    cfg.threads = 1;
    const auto t0 = std::chrono::steady_clock::now();
    r.manifest = run_pipeline(cfg);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  }();
  return run;
}

struct SrViews {
  std::vector<ImageGray> images;
  std::vector<QuadraticTransform> transforms;
};

SrViews load_sr_views(const TenViewRun& r) {
  SrViews v;
  for (std::size_t i = 0; i < r.manifest.views.size(); ++i) {
    v.images.push_back(read_dimg(r.out / files::view_sr(i)));
    v.transforms.push_back(read_transform(r.out / files::view_transform(i)));
  }
  return v;
}

// --- criteria -------------------------------------------------------------------

Outcome fov_expansion() {
  const TenViewRun& r = ten_view_run();
  const ImageGray ref = read_dimg(r.out / files::view_sr(r.manifest.reference));
  const double single = static_cast<double>(ref.width()) * ref.height();
  const double ratio = static_cast<double>(r.manifest.coverage_pixels) / single;
  const auto included = std::count_if(r.manifest.views.begin(), r.manifest.views.end(),
                                      [](const ViewRecord& v) { return v.included; });
  std::ostringstream d;
  d << "coverage " << fmt("%.3f", ratio) << "x of one view (>= 1.8), runtime " << fmt("%.1f", r.seconds)
    << " s single-threaded (<= 300), views " << included << "/" << r.manifest.views.size() << " included";
  return {ratio >= 1.8 && r.seconds <= 300.0, d.str()};
}

Outcome registration_accuracy() {
  // Curvature is drawn per pixel about the image centre, which bends the
  // grid far more than the same bound in [-1,1] units.
  const ImageGray phantom = make_phantom(PhantomSpec{});
  std::mt19937_64 rng(2025);
  constexpr int kCases = 30;
  int ok = 0;
  double sum = 0.0, worst = 0.0;
  for (int i = 0; i < kCases; ++i) {
    const fixture::QuadPair pair = fixture::make_quad_pair(phantom, rng, 1e-4, 120.0, 3.0);
    double epe = 1e9;
    try {
      const RegistrationResult res =
          hierarchical_register(pair.view, pair.reference, pair.u_view, pair.u_ref, 2);
      epe = fixture::endpoint_error(pair.truth, res.transform, pair.reference.width(),
                                    pair.reference.height());
    } catch (const Error&) {
    }
    ok += epe <= 0.3;
    sum += std::min(epe, 1e3);
    worst = std::max(worst, epe);
  }
  const double rate = static_cast<double>(ok) / kCases;
  const double mean = sum / kCases;
  std::ostringstream d;
  d << ok << "/" << kCases << " cases with EPE <= 0.3 px (" << fmt("%.0f", 100 * rate)
    << " %, need >= 95 %), mean " << fmt("%.4f", mean) << " px, worst " << fmt("%.4f", worst) << " px";
  return {rate >= 0.95 && mean <= 0.3, d.str()};
}

Outcome sr_gain() {
  double gain_sum = 0.0;
  std::ostringstream per;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    MotionScript s;
    s.noise_sigma = 0.01;
    s.magnification = 2;
    s.phantom.seed = seed;
    ViewScript v;
    v.frames = 6;
    s.views = {v};
    const GroundTruthBundle b = generate_sequence(make_phantom(s.phantom), s, seed);
    std::vector<ImageGray> frames;
    for (const auto& f : b.frames) frames.push_back(quantize8(f));

    // same steps as the pipeline's super-resolution stage
    const MotionEstimate motion = estimate_frame_motion(frames);
    const ObservationModel model = build_observation_model(frames, motion, 2, s.psf_sigma, 16.0);
    SRConfig cfg;
    cfg.lambda = select_lambda(frames, model, cfg, default_lambda_grid());
    const ImageGray x0 = upsample_bilinear(frames[0], 2);
    const SRResult sr = solve_sr(frames, model, cfg, x0);

    const ImageGray& truth = b.view_truth[0];
    PixelMask inner(truth.width(), truth.height());
    for (int y = 8; y < truth.height() - 8; ++y) {
      for (int x = 8; x < truth.width() - 8; ++x) inner.set(x, y, true);
    }
    const double p_sr = psnr(sr.image, truth, &inner);
    const double p_bl = psnr(x0, truth, &inner);
    gain_sum += p_sr - p_bl;
    per << (seed > 1 ? ", " : "") << fmt("%.2f", p_sr) << "/" << fmt("%.2f", p_bl);
  }
  const double gain = gain_sum / 5.0;
  return {gain >= 1.5, "mean gain " + fmt("%.2f", gain) + " dB (>= 1.5); SR/bilinear dB per seed: " + per.str()};
}

Outcome quality_trend() {
  const TenViewRun& r = ten_view_run();
  const std::size_t ref = r.manifest.reference;
  const std::size_t first = r.manifest.views[ref].first;
  std::size_t stanza = r.bundle.view_first_frame.size();
  for (std::size_t s = 0; s < r.bundle.view_first_frame.size(); ++s) {
    if (r.bundle.view_first_frame[s] == first) stanza = s;
  }
  if (stanza == r.bundle.view_first_frame.size()) return {false, "reference view does not start on a scripted view"};
  const ImageGray& truth = r.bundle.view_truth[stanza];

  const std::vector<ImageGray> frames = load_frames(r.frames_dir);
  const ImageGray raw = upsample_bilinear(frames[first], 2);
  const ImageGray mosaic = read_dimg(r.out / files::kMosaic);
  const SrViews sv = load_sr_views(r);
  const Canvas canvas = compute_canvas(sv.transforms, sv.images[ref].width(), sv.images[ref].height());
  const int ox = static_cast<int>(canvas.offset.x), oy = static_cast<int>(canvas.offset.y);

  // ROIs chosen from the ground truth alone: flattest and busiest tiles
  constexpr int kTile = 32;
  struct Tile {
    RectROI roi;
    double sd;
  };
  std::vector<Tile> tiles;
  for (int y = 8; y + kTile <= truth.height() - 8; y += kTile) {
    for (int x = 8; x + kTile <= truth.width() - 8; x += kTile) {
      double s = 0, ss = 0;
      for (int j = 0; j < kTile; ++j) {
        for (int i = 0; i < kTile; ++i) {
          s += truth(x + i, y + j);
          ss += truth(x + i, y + j) * truth(x + i, y + j);
        }
      }
      const double n = kTile * kTile;
      tiles.push_back({{x, y, kTile, kTile}, std::sqrt(std::max(0.0, ss / n - (s / n) * (s / n)))});
    }
  }
  std::sort(tiles.begin(), tiles.end(), [](const Tile& a, const Tile& b) { return a.sd < b.sd; });
  constexpr std::size_t kRois = 6;
  const auto shifted = [&](RectROI roi) { return RectROI{roi.x + ox, roi.y + oy, roi.width, roi.height}; };

  double snr_m = 0, snr_r = 0, edge_m = 0, edge_r = 0;
  for (std::size_t i = 0; i < kRois; ++i) {
    const RectROI roi = tiles[i].roi;
    snr_m += q_snr(mosaic, shifted(roi)) / kRois;
    snr_r += q_snr(raw, roi) / kRois;
  }
  for (std::size_t i = 0; i < kRois; ++i) {
    const RectROI roi = tiles[tiles.size() - 1 - i].roi;
    edge_m += q_edge(mosaic, shifted(roi)).sum_form / kRois;
    edge_r += q_edge(raw, roi).sum_form / kRois;
  }
  std::ostringstream d;
  d << "Q_snr mosaic " << fmt("%.2f", snr_m) << " dB vs raw " << fmt("%.2f", snr_r) << " dB; Q_edge mosaic "
    << fmt("%.3f", edge_m) << " vs raw " << fmt("%.3f", edge_r) << " (" << kRois << " ROIs each)";
  return {snr_m > snr_r && edge_m > edge_r, d.str()};
}

Outcome gating() {
  const TenViewRun& r = ten_view_run();
  const SrViews sv = load_sr_views(r);
  const std::size_t ref = r.manifest.reference;
  const MosaicConfig cfg;
  const MosaicBuild clean = build_mosaic(sv.images, sv.transforms, ref, cfg);
  std::size_t bad = sv.images.size();
  for (std::size_t i = 0; i < sv.images.size(); ++i) {
    if (i != ref && clean.views[i].included) {
      bad = i;
      break;
    }
  }
  if (bad == sv.images.size()) return {false, "no non-reference view was included to begin with"};

  // inject after registration: 25 px extra shift of the bad view
  std::vector<QuadraticTransform> shifted = sv.transforms;
  shifted[bad][5] += 25.0;
  const MosaicBuild with_bad = build_mosaic(sv.images, shifted, ref, cfg);

  std::vector<ImageGray> kept_images;
  std::vector<QuadraticTransform> kept_transforms;
  for (std::size_t i = 0; i < sv.images.size(); ++i) {
    if (i == bad) continue;
    kept_images.push_back(sv.images[i]);
    kept_transforms.push_back(sv.transforms[i]);
  }
  const MosaicBuild without = build_mosaic(kept_images, kept_transforms, ref > bad ? ref - 1 : ref, cfg);

  const auto& g = with_bad.mosaic.report[bad];
  const int dx = static_cast<int>(without.canvas.offset.x - with_bad.canvas.offset.x);
  const int dy = static_cast<int>(without.canvas.offset.y - with_bad.canvas.offset.y);
  double worst = 0.0;
  std::size_t disputed = 0, coverage_mismatch = 0;
  const PixelMask& m = with_bad.views[bad].mask;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      ++disputed;
      const int bx = x + dx, by = y + dy;
      const bool in_b = bx >= 0 && by >= 0 && bx < without.canvas.width && by < without.canvas.height &&
                        without.mosaic.coverage(bx, by);
      if (in_b != with_bad.mosaic.coverage(x, y)) {
        ++coverage_mismatch;
        continue;
      }
      if (in_b) worst = std::max(worst, std::abs(with_bad.mosaic.z(x, y) - without.mosaic.z(bx, by)));
    }
  }
  std::ostringstream d;
  d << "view " << bad << " shifted 25 px: rho_i " << fmt("%.3f", g.rho_intensity) << ", rho_v "
    << fmt("%.3f", g.rho_vessel) << ", " << (g.included ? "included" : "excluded") << "; max difference "
    << worst << " over " << disputed << " disputed pixels, coverage mismatches " << coverage_mismatch;
  return {!g.included && worst <= 1e-12 && coverage_mismatch == 0 && disputed > 0, d.str()};
}

Outcome numerical_core() {
  std::vector<std::string> failed;
  const auto check = [&](bool ok, const std::string& name) {
    if (!ok) failed.push_back(name);
  };
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);

  // adjoint identity
  double adj = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ObservationModel model;
    model.magnification = 1 + trial % 3;
    model.psf_sigma = 0.4 * (trial % 4);
    model.low_width = 14;
    model.low_height = 11;
    AffineMotion a;
    a.a11 = 1 + 0.05 * u(rng);
    a.a12 = 0.05 * u(rng);
    a.a21 = 0.05 * u(rng);
    a.a22 = 1 + 0.05 * u(rng);
    a.b1 = 2 * u(rng);
    a.b2 = 2 * u(rng);
    model.motions = {AffineMotion::identity(), a};
    const ImageGray x = oracle::random_image(model.high_width(), model.high_height(), 300 + trial, -1, 1);
    const ImageGray rr = oracle::random_image(14, 11, 400 + trial, -1, 1);
    const FrameOperator op(model, 1);
    const ImageGray wx = op.apply(x).image, wtr = op.adjoint(rr);
    double lhs = 0, rhs = 0, nx = 0, nr = 0;
    for (std::size_t i = 0; i < wx.size(); ++i) lhs += wx.pixels()[i] * rr.pixels()[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.pixels()[i] * wtr.pixels()[i];
    for (double v : x.pixels()) nx += v * v;
    for (double v : rr.pixels()) nr += v * v;
    adj = std::max(adj, std::abs(lhs - rhs) / std::sqrt(nx * nr));
  }
  check(adj <= 1e-10, "adjoint");

  // BTV gradient
  double btv = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ImageGray x = oracle::random_image(9, 8, seed);
    const BtvValue b = btv_value_grad(x, 2, 0.7, 1e-3);
    double err = 0, ref = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-7;
      ImageGray p = x, q = x;
      p.pixels()[i] += h;
      q.pixels()[i] -= h;
      const double fd = (btv_value_grad(p, 2, 0.7, 1e-3).value - btv_value_grad(q, 2, 0.7, 1e-3).value) / (2 * h);
      err += (fd - b.gradient.pixels()[i]) * (fd - b.gradient.pixels()[i]);
      ref += fd * fd;
    }
    btv = std::max(btv, std::sqrt(err / ref));
  }
  check(btv <= 1e-5, "btv gradient");

  // warp Jacobian with respect to the parameters
  double jac = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    QuadraticTransform::Params p;
    for (double& v : p) v = u(rng);
    const Point2 pt{3 * u(rng), 3 * u(rng)};
    const auto J = quad_jacobian(pt);
    for (std::size_t k = 0; k < 12; ++k) {
      QuadraticTransform::Params a = p, b = p;
      a[k] += 1e-6;
      b[k] -= 1e-6;
      const Point2 fa = quad_apply(QuadraticTransform(a), pt), fb = quad_apply(QuadraticTransform(b), pt);
      jac = std::max(jac, std::abs((fa.x - fb.x) / 2e-6 - J[0][k]));
      jac = std::max(jac, std::abs((fa.y - fb.y) / 2e-6 - J[1][k]));
    }
  }
  check(jac <= 1e-8, "jacobian");

  // ECC correlation trace
  const ImageGray phantom = make_phantom(PhantomSpec{});
  std::mt19937_64 prng(7);
  bool ecc_mono = true;
  for (int i = 0; i < 3; ++i) {
    const fixture::QuadPair pair = fixture::make_quad_pair(phantom, prng, 1e-4, 40.0, 0.0, 320, 240, {480, 360});
    for (MotionModel level : {MotionModel::Translation, MotionModel::Affine, MotionModel::Quadratic}) {
      QuadraticTransform init = QuadraticTransform::translation({pair.truth[5] + 1.5, pair.truth[11] - 1.0});
      const EccResult e = ecc_register(pair.view, pair.reference, init, level);
      for (std::size_t k = 1; k < e.rho_trace.size(); ++k) ecc_mono &= e.rho_trace[k] >= e.rho_trace[k - 1];
    }
  }
  check(ecc_mono, "ecc rho trace");

  // SR objective trace
  MotionScript s;
  s.frame_width = 96;
  s.frame_height = 72;
  s.noise_sigma = 0.01;
  s.phantom.width = 400;
  s.phantom.height = 320;
  s.phantom.disk_center = {200, 160};
  s.phantom.disk_radius = 24;
  s.reference_origin = Point2{70, 80};
  ViewScript v;
  v.frames = 5;
  s.views = {v};
  const GroundTruthBundle b = generate_sequence(make_phantom(s.phantom), s, 11);
  const ViewReconstruction rec = reconstruct_view(b.frames, ViewSrOptions{});
  bool sr_mono = rec.result.objective_trace.size() >= 2;
  for (std::size_t k = 1; k < rec.result.objective_trace.size(); ++k) {
    sr_mono &= rec.result.objective_trace[k] <= rec.result.objective_trace[k - 1];
  }
  check(sr_mono, "sr objective trace");

  // EM log-likelihood
  bool em_mono = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> uu(0, 1);
    std::normal_distribution<double> nb(0.3, 0.05), nf(0.5, 0.08);
    std::vector<double> xs(2000);
    for (double& x : xs) x = uu(g) < 0.3 + 0.04 * seed ? nb(g) : nf(g);
    const GmmFit f = fit_gmm2(xs);
    for (std::size_t k = 1; k < f.loglik_trace.size(); ++k) {
      em_mono &= f.loglik_trace[k] >= f.loglik_trace[k - 1] - 1e-9 * std::abs(f.loglik_trace[k - 1]);
    }
  }
  check(em_mono, "em log-likelihood");

  // convex-combination bounds of the stitched mosaic
  std::vector<RegisteredView> views;
  for (int i = 0; i < 6; ++i) {
    RegisteredView rv;
    rv.image = oracle::random_image(24, 18, 500 + i);
    rv.weight = oracle::random_image(24, 18, 600 + i);
    rv.mask = PixelMask(24, 18);
    for (std::size_t j = 0; j < rv.mask.size(); ++j) {
      rv.mask.set(j, (rng() % 3) != 0);
      if (!rv.mask.at(j) || rng() % 5 == 0) rv.weight.pixels()[j] = 0.0;
    }
    rv.included = i != 2;
    views.push_back(rv);
  }
  const MosaicResult mr = stitch(views);
  bool convex = true;
  for (std::size_t j = 0; j < mr.z.size(); ++j) {
    double lo = 1e300, hi = -1e300;
    bool any = false;
    for (const auto& rv : views) {
      if (!rv.included || !rv.mask.at(j)) continue;
      any = true;
      lo = std::min(lo, rv.image.pixels()[j]);
      hi = std::max(hi, rv.image.pixels()[j]);
    }
    convex &= mr.coverage.at(j) == any;
    if (any) convex &= mr.z.pixels()[j] >= lo && mr.z.pixels()[j] <= hi;
  }
  check(convex, "convex bounds");

  // bit-identical repeat runs of the whole pipeline
  MotionScript small;
  small.frame_width = 128;
  small.frame_height = 96;
  small.phantom.width = 480;
  small.phantom.height = 400;
  small.phantom.disk_center = {240, 200};
  small.phantom.disk_radius = 24;
  ViewScript a, c;
  c.offset = {40, 0};
  c.transit = 1;
  small.views = {a, c};
  const fs::path bdir = kRoot / "determinism";
  fs::remove_all(bdir);
  export_bundle(generate_sequence(make_phantom(small.phantom), small, 5), bdir);
  std::string first_mosaic, first_manifest;
  bool same = true;
  for (int run = 0; run < 2; ++run) {
    PipelineConfig cfg;
    cfg.partition.d_min = 30;
    cfg.disk_radius = {8, 16};
    cfg.input_dir = bdir / "frames";
    cfg.output_dir = kRoot / "determinism_out";
    fs::remove_all(cfg.output_dir);
    run_pipeline(cfg);
    const std::string zm = bytes(cfg.output_dir / files::kMosaic);
    const std::string zf = bytes(cfg.output_dir / files::kManifest);
    if (run == 0) {
      first_mosaic = zm;
      first_manifest = zf;
    } else {
      same = zm == first_mosaic && zf == first_manifest;
    }
  }
  check(same, "determinism");

  std::ostringstream d;
  d << "adjoint " << adj << " (<= 1e-10), btv " << btv << " (<= 1e-5), jacobian " << jac << " (<= 1e-8)";
  d << "; traces, bounds and repeat runs " << (failed.empty() ? "all hold" : "broken:");
  for (const auto& f : failed) d << " " << f;
  return {failed.empty(), d.str()};
}

EyeTrack random_track(std::mt19937_64& rng, double d_max) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EyeTrack t;
  Point2 pos{u(rng) * 300, u(rng) * 300};
  const int fixations = 3 + static_cast<int>(u(rng) * 10);
  for (int f = 0; f < fixations; ++f) {
    const int len = 1 + static_cast<int>(u(rng) * 14);
    for (int i = 0; i < len; ++i) {
      if (u(rng) < 0.07) {
        t.push_back(std::nullopt);
        continue;
      }
      const Point2 jitter{(u(rng) - 0.5) * 1.6 * d_max, (u(rng) - 0.5) * 1.6 * d_max};
      t.push_back(DiskDetection{pos + jitter, 15.0, 0.8});
    }
    const int transit = static_cast<int>(u(rng) * 4);
    const Point2 jump{(u(rng) - 0.5) * 320, (u(rng) - 0.5) * 320};
    for (int i = 1; i <= transit; ++i) t.push_back(DiskDetection{pos + (i / (transit + 1.0)) * jump, 15.0, 0.5});
    pos = pos + jump;
  }
  return t;
}

Outcome partition_correctness() {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0, produced = 0, bad = 0;
  std::string first_error;
  for (int trial = 0; trial < 200; ++trial) {
    // first half: the default 5 / 100 / 6 parameters; second half varied
    PartitionParams p;
    if (trial >= 100) p = {1.0 + 9.0 * u(rng), 20.0 + 150.0 * u(rng), 1 + static_cast<std::size_t>(u(rng) * 8)};
    const EyeTrack t = random_track(rng, p.d_max);
    ++checked;
    ViewPartition part;
    try {
      part = partition_views(t, p);
    } catch (const Error& e) {
      // "no stable views" is the only acceptable failure
      if (e.kind() != ErrorKind::Quality) ++bad;
      continue;
    }
    ++produced;
    const std::string err = oracle::validate_partition(t, part, p.d_max, p.d_min, p.k_min);
    if (!err.empty()) {
      ++bad;
      if (first_error.empty()) first_error = "trial " + std::to_string(trial) + ": " + err;
    }
  }
  std::ostringstream d;
  d << checked << " random tracks (100 at d_max 5, d_min 100, k_min 6), " << produced
    << " partitioned, violations " << bad;
  if (!first_error.empty()) d << " (" << first_error << ")";
  return {bad == 0 && produced >= 100, d.str()};
}

}  // namespace

int main() {
  fs::create_directories(kRoot);
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"fov expansion", fov_expansion},
      {"registration accuracy", registration_accuracy},
      {"super-resolution gain", sr_gain},
      {"quality metric trend", quality_trend},
      {"gating", gating},
      {"numerical core properties", numerical_core},
      {"view partition", partition_correctness},
  };
  int failures = 0, n = 0;
  for (const auto& [name, fn] : criteria) {
    ++n;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s criterion %d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", n - failures, n);
  return failures == 0 ? 0 : 1;
}
