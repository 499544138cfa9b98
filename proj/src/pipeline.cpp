#include "retmosaic/pipeline.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/image_io.hpp"
#include "retmosaic/quality.hpp"

namespace retmosaic {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (!(partition.d_max >= 0.0)) throw Error(ErrorKind::Config, "d_max must be >= 0");
  if (!(partition.d_min >= 0.0)) throw Error(ErrorKind::Config, "d_min must be >= 0");
  if (partition.k_min < 1) throw Error(ErrorKind::Config, "k_min must be >= 1");
  if (!(disk_radius.min > 0.0 && disk_radius.max >= disk_radius.min)) {
    throw Error(ErrorKind::Config, "disk radius range must satisfy 0 < min <= max");
  }
  if (magnification < 1) throw Error(ErrorKind::Config, "magnification must be >= 1");
  if (!(psf_sigma >= 0.0)) throw Error(ErrorKind::Config, "psf_sigma must be >= 0");
  if (!(illumination_sigma > 0.0)) throw Error(ErrorKind::Config, "illumination_sigma must be > 0");
  sr.validate();
  if (lambda && !(*lambda >= 0.0)) throw Error(ErrorKind::Config, "lambda must be >= 0");
  if (!lambda) {
    if (lambda_grid.empty()) throw Error(ErrorKind::Config, "lambda grid is empty");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      if (!(lambda_grid[i] > 0.0)) throw Error(ErrorKind::Config, "lambda grid must be positive");
      if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1])) {
        throw Error(ErrorKind::Config, "lambda grid must be sorted ascending");
      }
    }
  }
  if (registration.pyramid_levels < 1) throw Error(ErrorKind::Config, "pyramid_levels must be >= 1");
  mosaic.validate();
  if (threads < 1) throw Error(ErrorKind::Config, "threads must be >= 1");
}

namespace {

std::vector<double> parse_list(const std::string& key, std::string value) {
  std::replace(value.begin(), value.end(), ',', ' ');
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw Error(ErrorKind::Config, key + ": not a number: " + tok);
    out.push_back(v);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  const auto v = parse_list(key, value);
  if (v.size() != 1) throw Error(ErrorKind::Config, key + " expects one number");
  return v.front();
}

long parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (v != std::floor(v)) throw Error(ErrorKind::Config, key + " expects an integer");
  return static_cast<long>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

void set_config_value(PipelineConfig& c, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "d_max") {
    c.partition.d_max = parse_double(key, value);
  } else if (key == "d_min") {
    c.partition.d_min = parse_double(key, value);
  } else if (key == "k_min") {
    const long v = parse_int(key, value);
    if (v < 1) throw Error(ErrorKind::Config, "k_min must be >= 1");
    c.partition.k_min = static_cast<std::size_t>(v);
  } else if (key == "disk_radius_min") {
    c.disk_radius.min = parse_double(key, value);
  } else if (key == "disk_radius_max") {
    c.disk_radius.max = parse_double(key, value);
  } else if (key == "magnification") {
    c.magnification = static_cast<int>(parse_int(key, value));
  } else if (key == "psf_sigma") {
    c.psf_sigma = parse_double(key, value);
  } else if (key == "illumination_sigma") {
    c.illumination_sigma = parse_double(key, value);
  } else if (key == "lambda") {
    if (value == "auto") {
      c.lambda.reset();
    } else {
      c.lambda = parse_double(key, value);
    }
  } else if (key == "lambda_grid") {
    c.lambda_grid = parse_list(key, value);
  } else if (key == "btv_radius") {
    c.sr.btv_radius = static_cast<int>(parse_int(key, value));
  } else if (key == "btv_alpha") {
    c.sr.btv_alpha = parse_double(key, value);
  } else if (key == "charbonnier_eps") {
    c.sr.charbonnier_eps = parse_double(key, value);
  } else if (key == "max_scg_iters") {
    c.sr.max_scg_iters = static_cast<int>(parse_int(key, value));
  } else if (key == "grad_tol") {
    c.sr.grad_tol = parse_double(key, value);
  } else if (key == "pyramid_levels") {
    c.registration.pyramid_levels = static_cast<int>(parse_int(key, value));
  } else if (key == "ecc_max_iters") {
    c.registration.ecc.max_iters = static_cast<int>(parse_int(key, value));
  } else if (key == "ecc_tol") {
    c.registration.ecc.tol = parse_double(key, value);
  } else if (key == "min_rho") {
    c.registration.min_rho = parse_double(key, value);
  } else if (key == "rho_i_min") {
    c.mosaic.rho_i_min = parse_double(key, value);
  } else if (key == "rho_v_min") {
    c.mosaic.rho_v_min = parse_double(key, value);
  } else if (key == "frangi_scales") {
    c.mosaic.frangi.scales = parse_list(key, value);
  } else if (key == "frangi_beta") {
    c.mosaic.frangi.beta = parse_double(key, value);
  } else if (key == "input") {
    c.input_dir = value;
  } else if (key == "output") {
    c.output_dir = value;
  } else if (key == "track") {
    if (value.empty()) {
      c.external_track.reset();
    } else {
      c.external_track = fs::path(value);
    }
  } else if (key == "rois") {
    if (value.empty()) {
      c.roi_file.reset();
    } else {
      c.roi_file = fs::path(value);
    }
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_int(key, value));
  } else {
    throw Error(ErrorKind::Config, "unknown config key: " + key);
  }
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_config_value(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  return parse_config(read_text_file(path), std::move(base));
}

std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << std::setprecision(17);
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    out << '\n';
  };
  out << "d_max = " << c.partition.d_max << '\n'
      << "d_min = " << c.partition.d_min << '\n'
      << "k_min = " << c.partition.k_min << '\n'
      << "disk_radius_min = " << c.disk_radius.min << '\n'
      << "disk_radius_max = " << c.disk_radius.max << '\n'
      << "magnification = " << c.magnification << '\n'
      << "psf_sigma = " << c.psf_sigma << '\n'
      << "illumination_sigma = " << c.illumination_sigma << '\n';
  out << "lambda = ";
  if (c.lambda) {
    out << *c.lambda << '\n';
  } else {
    out << "auto\n";
  }
  out << "lambda_grid = ";
  list(c.lambda_grid);
  out << "btv_radius = " << c.sr.btv_radius << '\n'
      << "btv_alpha = " << c.sr.btv_alpha << '\n'
      << "charbonnier_eps = " << c.sr.charbonnier_eps << '\n'
      << "max_scg_iters = " << c.sr.max_scg_iters << '\n'
      << "grad_tol = " << c.sr.grad_tol << '\n'
      << "pyramid_levels = " << c.registration.pyramid_levels << '\n'
      << "ecc_max_iters = " << c.registration.ecc.max_iters << '\n'
      << "ecc_tol = " << c.registration.ecc.tol << '\n'
      << "min_rho = " << c.registration.min_rho << '\n'
      << "rho_i_min = " << c.mosaic.rho_i_min << '\n'
      << "rho_v_min = " << c.mosaic.rho_v_min << '\n'
      << "frangi_scales = ";
  list(c.mosaic.frangi.scales);
  out << "frangi_beta = " << c.mosaic.frangi.beta << '\n'
      << "input = " << c.input_dir.string() << '\n'
      << "output = " << c.output_dir.string() << '\n'
      << "track = " << (c.external_track ? c.external_track->string() : "") << '\n'
      << "rois = " << (c.roi_file ? c.roi_file->string() : "") << '\n'
      << "threads = " << c.threads << '\n';
  return out.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ImageGray> load_frames(const fs::path& dir, std::vector<fs::path>* files) {
  const auto paths = list_frame_files(dir);
  if (paths.empty()) throw Error(ErrorKind::Io, "no PGM/PNG frames in " + dir.string());
  std::vector<ImageGray> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) {
    frames.push_back(read_image(p));
    if (frames.back().width() != frames.front().width() ||
        frames.back().height() != frames.front().height()) {
      throw Error(ErrorKind::Config, "frame " + p.filename().string() + " differs in size");
    }
  }
  if (files) *files = paths;
  return frames;
}

std::string input_checksum(const std::vector<fs::path>& paths) {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::Io, "sha256 unavailable");
  }
  for (const auto& p : paths) {
    const std::string name = p.filename().string();
    const std::string bytes = read_text_file(p);
    EVP_DigestUpdate(ctx, name.data(), name.size() + 1);
    EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

EyeTrack stage_track(const std::vector<ImageGray>& frames, const PipelineConfig& cfg) {
  return track_sequence(frames, cfg.disk_radius);
}

ViewPartition stage_partition(const EyeTrack& track, const PipelineConfig& cfg) {
  return partition_views(track, cfg.partition);
}

std::vector<ImageGray> view_frames(const std::vector<ImageGray>& frames, const View& view) {
  std::vector<ImageGray> out;
  for (std::size_t k : view.frames) {
    if (k >= frames.size()) throw Error(ErrorKind::Config, "partition refers to a missing frame");
    out.push_back(frames[k]);
  }
  return out;
}

SrStage stage_superres(const std::vector<ImageGray>& frames, const ViewPartition& partition,
                       const PipelineConfig& cfg,
                       const std::function<void(std::size_t, const ViewSr&)>& on_view) {
  const std::size_t n = partition.views.size();
  if (n == 0 || partition.reference >= n) throw Error(ErrorKind::Config, "empty partition");
  std::vector<std::vector<ImageGray>> vf(n);
  std::vector<MotionEstimate> motion(n);
  std::vector<ObservationModel> models(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    try {
      vf[i] = view_frames(frames, partition.views[i]);
      if (vf[i].size() == 1) {
        motion[i] = {{AffineMotion::identity()}, {true}, {1.0}};
      } else {
        motion[i] = estimate_frame_motion(vf[i]);
      }
      models[i] = build_observation_model(vf[i], motion[i], cfg.magnification, cfg.psf_sigma,
                                          cfg.illumination_sigma);
    } catch (const Error& e) {
      throw Error(e.kind(), "view " + std::to_string(i) + ": " + e.what());
    }
  });

  SrStage out;
  const std::size_t r = partition.reference;
  out.lambda = cfg.lambda ? *cfg.lambda : select_lambda(vf[r], models[r], cfg.sr, cfg.lambda_grid);
  out.views.resize(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    try {
      SRConfig sc = cfg.sr;
      sc.lambda = out.lambda;
      ViewSr v;
      v.motion = motion[i];
      v.usable_frames = static_cast<std::size_t>(
          std::count(motion[i].usable.begin(), motion[i].usable.end(), true));
      v.result = solve_sr(vf[i], models[i], sc, upsample_bilinear(vf[i].front(), cfg.magnification));
      if (on_view) on_view(i, v);
      out.views[i] = std::move(v);
    } catch (const Error& e) {
      throw Error(e.kind(), "view " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

RegistrationStage stage_register(const std::vector<ImageGray>& sr_images,
                                 const ViewPartition& partition, const PipelineConfig& cfg) {
  const std::size_t n = partition.views.size();
  if (sr_images.size() != n || partition.reference >= n) {
    throw Error(ErrorKind::Config, "one super-resolved image per view required");
  }
  RegistrationStage out;
  out.transforms.assign(n, QuadraticTransform::identity());
  out.results.resize(n);
  out.failures.resize(n);
  const std::size_t r = partition.reference;
  out.results[r].final_rho = 1.0;
  out.results[r].converged = true;
  out.results[r].note = "reference";
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    if (i == r) return;
    const Point2 ui = partition.views[i].start;
    const Point2 ur = partition.views[r].start;
    try {
      out.results[i] = hierarchical_register(sr_images[i], sr_images[r], ui, ur,
                                             cfg.magnification, cfg.registration);
      out.transforms[i] = out.results[i].transform;
    } catch (const Error& e) {
      // Left to the gate: the tracked translation alone.
      out.transforms[i] = QuadraticTransform::translation(cfg.magnification * (ui - ur));
      out.results[i].transform = out.transforms[i];
      out.results[i].note = std::string("registration failed: ") + e.what();
      out.failures[i] = e.what();
    }
  });
  return out;
}

MosaicBuild stage_stitch(const std::vector<ImageGray>& sr_images,
                         const std::vector<QuadraticTransform>& transforms,
                         const ViewPartition& partition, const PipelineConfig& cfg) {
  return build_mosaic(sr_images, transforms, partition.reference, cfg.mosaic);
}

namespace files {
std::string view_sr(std::size_t i) { return "views/view_" + std::to_string(i) + "_sr.dimg"; }
std::string view_sr_png(std::size_t i) { return "views/view_" + std::to_string(i) + "_sr.png"; }
std::string view_transform(std::size_t i) {
  return "views/view_" + std::to_string(i) + ".transform";
}
}  // namespace files

void write_mosaic_outputs(const MosaicBuild& build, const fs::path& out_dir,
                          const PipelineConfig& cfg, RunManifest* manifest) {
  fs::create_directories(out_dir);
  write_dimg(out_dir / files::kMosaic, build.mosaic.z);
  write_png(out_dir / files::kMosaicPng, build.mosaic.z);
  ImageGray cov(build.mosaic.coverage.width(), build.mosaic.coverage.height());
  for (std::size_t i = 0; i < cov.size(); ++i) cov.pixels()[i] = build.mosaic.coverage.at(i) ? 1.0 : 0.0;
  write_png(out_dir / files::kCoverage, cov);
  write_text_file(out_dir / files::kInclusion, serialize_inclusion_report(build.mosaic.report));
  if (manifest) {
    manifest->outputs.emplace_back("mosaic", files::kMosaic);
    manifest->outputs.emplace_back("mosaic_png", files::kMosaicPng);
    manifest->outputs.emplace_back("coverage", files::kCoverage);
    manifest->outputs.emplace_back("inclusion_report", files::kInclusion);
  }
  if (cfg.roi_file) {
    const QualityReport q = evaluate_rois(build.mosaic.z, load_rois(*cfg.roi_file));
    write_text_file(out_dir / files::kQuality, serialize_quality_report(q));
    if (manifest) manifest->outputs.emplace_back("quality_report", files::kQuality);
  }
}

std::string serialize_manifest(const RunManifest& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "tool_version=" << m.tool_version << '\n'
      << "input_checksum=" << m.input_checksum << '\n'
      << "frame_count=" << m.frame_count << '\n';
  std::istringstream cfg(m.config);
  std::string line;
  while (std::getline(cfg, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out << "config." << trim(line.substr(0, eq)) << '=' << trim(line.substr(eq + 1)) << '\n';
  }
  out << "partition.views=" << m.views.size() << '\n'
      << "partition.reference=" << m.reference << '\n'
      << "partition.centroid=" << m.centroid.x << ' ' << m.centroid.y << '\n'
      << "lambda=" << m.lambda << '\n';
  for (std::size_t i = 0; i < m.views.size(); ++i) {
    const auto& v = m.views[i];
    const std::string p = "view." + std::to_string(i) + ".";
    out << p << "first=" << v.first << '\n'
        << p << "last=" << v.last << '\n'
        << p << "frames=" << v.frames << '\n'
        << p << "usable_frames=" << v.usable_frames << '\n'
        << p << "lambda=" << v.lambda << '\n'
        << p << "sr_iterations=" << v.sr_iterations << '\n'
        << p << "sr_objective=" << v.sr_objective << '\n'
        << p << "rho_per_level=";
    for (std::size_t l = 0; l < v.rho_per_level.size(); ++l) out << (l ? " " : "") << v.rho_per_level[l];
    out << '\n'
        << p << "registration_converged=" << (v.registration_converged ? 1 : 0) << '\n'
        << p << "registration_note=" << v.registration_note << '\n'
        << p << "included=" << (v.included ? 1 : 0) << '\n'
        << p << "rho_intensity=" << v.rho_intensity << '\n'
        << p << "rho_vessel=" << v.rho_vessel << '\n'
        << p << "reason=" << v.reason << '\n';
  }
  out << "mosaic.width=" << m.canvas_width << '\n'
      << "mosaic.height=" << m.canvas_height << '\n'
      << "mosaic.coverage_pixels=" << m.coverage_pixels << '\n';
  for (const auto& [name, file] : m.outputs) out << "output." << name << '=' << file << '\n';
  return out.str();
}

std::string serialize_timings(const RunManifest& m) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  for (const auto& [stage, secs] : m.timings) out << stage << '=' << secs << '\n';
  return out.str();
}

namespace {

template <class F>
auto in_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + stage + "] " + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::Io, std::string("[") + stage + "] " + e.what());
  }
}

class StageClock {
public:
  explicit StageClock(RunManifest& m) : m_(m), t_(std::chrono::steady_clock::now()) {}
  void lap(const char* stage) {
    const auto now = std::chrono::steady_clock::now();
    m_.timings.emplace_back(stage, std::chrono::duration<double>(now - t_).count());
    t_ = now;
  }

private:
  RunManifest& m_;
  std::chrono::steady_clock::time_point t_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
  in_stage("config", [&] {
    cfg.validate();
    if (cfg.input_dir.empty() || cfg.output_dir.empty()) {
      throw Error(ErrorKind::Config, "input and output directories are required");
    }
  });
  RunManifest m;
  m.config = serialize_config(cfg);
  StageClock clock(m);
  const fs::path out = cfg.output_dir;

  std::vector<fs::path> paths;
  const auto frames = in_stage("ingest", [&] {
    fs::create_directories(out / "views");
    auto f = load_frames(cfg.input_dir, &paths);
    if (f.size() < cfg.partition.k_min) {
      throw Error(ErrorKind::Config, "fewer frames than k_min");
    }
    return f;
  });
  m.frame_count = frames.size();
  m.input_checksum = input_checksum(paths);
  clock.lap("ingest");

  const EyeTrack track = in_stage("track", [&] {
    EyeTrack t = cfg.external_track ? load_external_track(*cfg.external_track)
                                    : stage_track(frames, cfg);
    if (t.size() != frames.size()) {
      throw Error(ErrorKind::Config, "track length differs from the frame count");
    }
    write_text_file(out / files::kTrack, serialize_track(t));
    return t;
  });
  m.outputs.emplace_back("track", files::kTrack);
  clock.lap("track");

  const ViewPartition partition = in_stage("partition", [&] {
    ViewPartition p = stage_partition(track, cfg);
    write_text_file(out / files::kPartition, serialize_partition(p));
    return p;
  });
  m.outputs.emplace_back("partition", files::kPartition);
  m.reference = partition.reference;
  m.centroid = partition.centroid;
  clock.lap("partition");

  const SrStage sr = in_stage("superres", [&] {
    SrStage s = stage_superres(frames, partition, cfg, [&](std::size_t i, const ViewSr& v) {
      write_dimg(out / files::view_sr(i), v.result.image);
      write_png(out / files::view_sr_png(i), v.result.image);
    });
    std::ostringstream lam;
    lam << std::setprecision(17) << s.lambda << '\n';
    write_text_file(out / files::kLambda, lam.str());
    return s;
  });
  m.lambda = sr.lambda;
  m.outputs.emplace_back("lambda", files::kLambda);
  for (std::size_t i = 0; i < sr.views.size(); ++i) {
    m.outputs.emplace_back("view_" + std::to_string(i) + "_sr", files::view_sr(i));
  }
  clock.lap("superres");

  std::vector<ImageGray> sr_images;
  for (const auto& v : sr.views) sr_images.push_back(v.result.image);
  const RegistrationStage reg = in_stage("register", [&] {
    RegistrationStage r = stage_register(sr_images, partition, cfg);
    for (std::size_t i = 0; i < r.transforms.size(); ++i) {
      write_transform(out / files::view_transform(i), r.transforms[i]);
    }
    return r;
  });
  for (std::size_t i = 0; i < reg.transforms.size(); ++i) {
    m.outputs.emplace_back("view_" + std::to_string(i) + "_transform", files::view_transform(i));
  }
  clock.lap("register");

  const MosaicBuild build = in_stage("stitch", [&] {
    MosaicBuild b = stage_stitch(sr_images, reg.transforms, partition, cfg);
    write_mosaic_outputs(b, out, cfg, &m);
    return b;
  });
  m.canvas_width = build.canvas.width;
  m.canvas_height = build.canvas.height;
  m.coverage_pixels = build.mosaic.coverage.count();
  clock.lap("stitch");

  for (std::size_t i = 0; i < partition.views.size(); ++i) {
    const View& v = partition.views[i];
    ViewRecord rec;
    rec.first = v.frames.front();
    rec.last = v.frames.back();
    rec.frames = v.frames.size();
    rec.usable_frames = sr.views[i].usable_frames;
    rec.lambda = sr.views[i].result.lambda_used;
    rec.sr_iterations = sr.views[i].result.iterations_used;
    rec.sr_objective = sr.views[i].result.final_objective;
    rec.rho_per_level = reg.results[i].rho_per_level;
    rec.registration_converged = reg.results[i].converged;
    rec.registration_note = reg.results[i].note;
    rec.included = build.views[i].included;
    rec.rho_intensity = build.views[i].rho_intensity;
    rec.rho_vessel = build.views[i].rho_vessel;
    rec.reason = build.views[i].reason;
    m.views.push_back(std::move(rec));
  }
  m.outputs.emplace_back("manifest", files::kManifest);
  in_stage("manifest", [&] {
    write_text_file(out / files::kManifest, serialize_manifest(m));
    write_text_file(out / files::kTimings, serialize_timings(m));
  });
  return m;
}

}  // namespace retmosaic
