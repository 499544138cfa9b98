#include <CLI11.hpp>

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "retmosaic/error.hpp"
#include "retmosaic/image_io.hpp"
#include "retmosaic/pipeline.hpp"
#include "retmosaic/quality.hpp"
#include "retmosaic/simulate.hpp"

using namespace retmosaic;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  int threads = 0;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config, "key = value configuration file");
  app->add_option("--set", o.overrides, "override one config entry, key=value")->take_all();
  app->add_option("--threads", o.threads, "worker threads");
}

PipelineConfig resolve(const CommonOptions& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "--set expects key=value: " + kv);
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.threads > 0) cfg.threads = o.threads;
  return cfg;
}

ViewPartition read_partition(const fs::path& p) { return parse_partition(read_text_file(p)); }

std::vector<ImageGray> read_sr_images(const fs::path& dir, std::size_t n) {
  std::vector<ImageGray> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(read_dimg(dir / files::view_sr(i)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super-resolved retinal mosaics from fundus video frames"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string input, out, track_file, rois, partition_file, sr_dir, transforms_dir, image, script;
  std::optional<double> lambda;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "full pipeline");
  add_common(run, common);
  run->add_option("--input", input, "frame directory");
  run->add_option("--out", out, "output directory");
  run->add_option("--track", track_file, "external eye track");
  run->add_option("--rois", rois, "ROI file for the quality report");

  auto* sim = app.add_subcommand("simulate", "render a synthetic sequence with ground truth");
  sim->add_option("--script", script, "motion script (default: ten-view layout)");
  sim->add_option("--out", out, "bundle directory")->required();
  sim->add_option("--seed", seed, "noise and jitter seed");

  auto* trk = app.add_subcommand("track", "optic disk track of a frame directory");
  add_common(trk, common);
  trk->add_option("--input", input, "frame directory")->required();
  trk->add_option("--out", out, "track file")->required();

  auto* part = app.add_subcommand("partition", "split a track into views");
  add_common(part, common);
  part->add_option("--track", track_file, "track file")->required();
  part->add_option("--out", out, "partition file")->required();

  auto* sr = app.add_subcommand("sr", "super-resolve every view");
  add_common(sr, common);
  sr->add_option("--input", input, "frame directory")->required();
  sr->add_option("--partition", partition_file, "partition file")->required();
  sr->add_option("--out", out, "output directory")->required();
  sr->add_option("--lambda", lambda, "fixed regularization weight");

  auto* reg = app.add_subcommand("register", "register every view to the reference");
  add_common(reg, common);
  reg->add_option("--sr-dir", sr_dir, "directory written by `sr`")->required();
  reg->add_option("--partition", partition_file, "partition file")->required();
  reg->add_option("--out", out, "output directory")->required();

  auto* st = app.add_subcommand("stitch", "photometric matching, gating and blending");
  add_common(st, common);
  st->add_option("--sr-dir", sr_dir, "directory written by `sr`")->required();
  st->add_option("--transforms-dir", transforms_dir, "directory written by `register`");
  st->add_option("--partition", partition_file, "partition file")->required();
  st->add_option("--out", out, "output directory")->required();
  st->add_option("--rois", rois, "ROI file for the quality report");

  auto* met = app.add_subcommand("metrics", "blind quality metrics over ROIs");
  met->add_option("--image", image, "image (.pgm, .png, .dimg)")->required();
  met->add_option("--rois", rois, "ROI file")->required();
  met->add_option("--out", out, "report file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::Config);
  }

  try {
    if (*run) {
      PipelineConfig cfg = resolve(common);
      if (!input.empty()) cfg.input_dir = input;
      if (!out.empty()) cfg.output_dir = out;
      if (!track_file.empty()) cfg.external_track = fs::path(track_file);
      if (!rois.empty()) cfg.roi_file = fs::path(rois);
      const RunManifest m = run_pipeline(cfg);
      std::size_t included = 0;
      for (const auto& v : m.views) included += v.included ? 1 : 0;
      std::cout << "views " << m.views.size() << " included " << included << " lambda " << m.lambda
                << " mosaic " << m.canvas_width << "x" << m.canvas_height << "\n";
    } else if (*sim) {
      const MotionScript s = script.empty() ? ten_view_script() : load_motion_script(script);
      const ImageGray phantom = make_phantom(s.phantom);
      const GroundTruthBundle b = generate_sequence(phantom, s, seed);
      export_bundle(b, out);
      std::cout << "frames " << b.frames.size() << " views " << b.view_transforms.size() << "\n";
    } else if (*trk) {
      const PipelineConfig cfg = resolve(common);
      write_text_file(out, serialize_track(stage_track(load_frames(input), cfg)));
    } else if (*part) {
      const PipelineConfig cfg = resolve(common);
      write_text_file(out, serialize_partition(stage_partition(load_external_track(track_file), cfg)));
    } else if (*sr) {
      PipelineConfig cfg = resolve(common);
      if (lambda) cfg.lambda = lambda;
      const fs::path dir = out;
      fs::create_directories(dir / "views");
      const SrStage s = stage_superres(load_frames(input), read_partition(partition_file), cfg,
                                       [&](std::size_t i, const ViewSr& v) {
                                         write_dimg(dir / files::view_sr(i), v.result.image);
                                         write_png(dir / files::view_sr_png(i), v.result.image);
                                       });
      std::ostringstream lam;
      lam << std::setprecision(17) << s.lambda << '\n';
      write_text_file(dir / files::kLambda, lam.str());
    } else if (*reg) {
      const PipelineConfig cfg = resolve(common);
      const ViewPartition p = read_partition(partition_file);
      const RegistrationStage r = stage_register(read_sr_images(sr_dir, p.views.size()), p, cfg);
      for (std::size_t i = 0; i < r.transforms.size(); ++i) {
        write_transform(fs::path(out) / files::view_transform(i), r.transforms[i]);
        std::cout << "view " << i << " rho " << r.results[i].final_rho
                  << (r.failures[i].empty() ? "" : " failed: " + r.failures[i]) << "\n";
      }
    } else if (*st) {
      PipelineConfig cfg = resolve(common);
      if (!rois.empty()) cfg.roi_file = fs::path(rois);
      const ViewPartition p = read_partition(partition_file);
      const fs::path tdir = transforms_dir.empty() ? fs::path(sr_dir) : fs::path(transforms_dir);
      std::vector<QuadraticTransform> transforms;
      for (std::size_t i = 0; i < p.views.size(); ++i) {
        transforms.push_back(read_transform(tdir / files::view_transform(i)));
      }
      const MosaicBuild b = stage_stitch(read_sr_images(sr_dir, p.views.size()), transforms, p, cfg);
      write_mosaic_outputs(b, out, cfg);
      std::cout << serialize_inclusion_report(b.mosaic.report);
    } else if (*met) {
      const QualityReport q = evaluate_rois(read_image(image), load_rois(rois));
      const std::string text = serialize_quality_report(q);
      if (out.empty()) {
        std::cout << text;
      } else {
        write_text_file(out, text);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
