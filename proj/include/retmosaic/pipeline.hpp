#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "retmosaic/mosaic.hpp"
#include "retmosaic/registration.hpp"
#include "retmosaic/superres.hpp"
#include "retmosaic/tracking.hpp"

namespace retmosaic {

inline constexpr const char* kToolVersion = "retmosaic 1.0.0";

struct PipelineConfig {
  PartitionParams partition{};
  RadiusRange disk_radius{};
  int magnification = 2;
  double psf_sigma = 0.8;
  double illumination_sigma = 16.0;
  SRConfig sr{};
  std::optional<double> lambda;  // fixed; selected on the reference view when unset
  std::vector<double> lambda_grid = default_lambda_grid();
  HierarchicalOptions registration{};
  MosaicConfig mosaic{};
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> external_track;
  std::optional<std::filesystem::path> roi_file;
  int threads = 1;

  void validate() const;
};

/// Sets one `key = value` entry; throws Error(Config) for unknown keys or
/// malformed values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` text, `#` comments.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});

/// Every key with its resolved value, in a fixed order.
std::string serialize_config(const PipelineConfig& cfg);

/// Frame files of a directory in lexicographic order; all must share one size.
std::vector<ImageGray> load_frames(const std::filesystem::path& dir,
                                   std::vector<std::filesystem::path>* files = nullptr);

/// SHA-256 over the frame file names and contents, hex encoded.
std::string input_checksum(const std::vector<std::filesystem::path>& files);

/// Runs fn(0..n-1) on up to `threads` workers; rethrows the failure of the
/// lowest index.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn);

// Stages, shared by run_pipeline and the stage subcommands.

EyeTrack stage_track(const std::vector<ImageGray>& frames, const PipelineConfig& cfg);
ViewPartition stage_partition(const EyeTrack& track, const PipelineConfig& cfg);

struct ViewSr {
  SRResult result;
  MotionEstimate motion;
  std::size_t usable_frames = 0;
};

struct SrStage {
  double lambda = 0.0;
  std::vector<ViewSr> views;
};

std::vector<ImageGray> view_frames(const std::vector<ImageGray>& frames, const View& view);

/// Lambda from the reference view (unless fixed), then every view with it.
/// `on_view` runs after each view completes.
SrStage stage_superres(const std::vector<ImageGray>& frames, const ViewPartition& partition,
                       const PipelineConfig& cfg,
                       const std::function<void(std::size_t, const ViewSr&)>& on_view = {});

struct RegistrationStage {
  std::vector<QuadraticTransform> transforms;    // identity for the reference
  std::vector<RegistrationResult> results;       // reference: rho 1, no levels
  std::vector<std::string> failures;             // empty when registration ran through
};

RegistrationStage stage_register(const std::vector<ImageGray>& sr_images,
                                 const ViewPartition& partition, const PipelineConfig& cfg);

MosaicBuild stage_stitch(const std::vector<ImageGray>& sr_images,
                         const std::vector<QuadraticTransform>& transforms,
                         const ViewPartition& partition, const PipelineConfig& cfg);

struct ViewRecord {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t frames = 0;
  std::size_t usable_frames = 0;
  double lambda = 0.0;
  int sr_iterations = 0;
  double sr_objective = 0.0;
  std::vector<double> rho_per_level;
  bool registration_converged = false;
  std::string registration_note;
  bool included = false;
  double rho_intensity = 0.0;
  double rho_vessel = 0.0;
  std::string reason;
};

struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config;  // serialize_config of the resolved configuration
  std::string input_checksum;
  std::size_t frame_count = 0;
  std::size_t reference = 0;
  Point2 centroid;
  double lambda = 0.0;
  int canvas_width = 0;
  int canvas_height = 0;
  std::size_t coverage_pixels = 0;
  std::vector<ViewRecord> views;
  std::vector<std::pair<std::string, std::string>> outputs;  // name, file relative to the output dir
  std::vector<std::pair<std::string, double>> timings;       // seconds per stage
};

/// Everything except timings, which go to serialize_timings.
std::string serialize_manifest(const RunManifest& m);
std::string serialize_timings(const RunManifest& m);

/// Standard file names inside an output directory.
namespace files {
inline constexpr const char* kTrack = "track.txt";
inline constexpr const char* kPartition = "partition.txt";
inline constexpr const char* kLambda = "lambda.txt";
inline constexpr const char* kMosaic = "mosaic.dimg";
inline constexpr const char* kMosaicPng = "mosaic.png";
inline constexpr const char* kCoverage = "coverage.png";
inline constexpr const char* kInclusion = "inclusion_report.txt";
inline constexpr const char* kQuality = "quality_report.txt";
inline constexpr const char* kManifest = "manifest.txt";
inline constexpr const char* kTimings = "timings.txt";
std::string view_sr(std::size_t i);         // views/view_<i>_sr.dimg
std::string view_sr_png(std::size_t i);     // views/view_<i>_sr.png
std::string view_transform(std::size_t i);  // views/view_<i>.transform
}  // namespace files

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Mosaic, coverage and inclusion report; quality report when ROIs are given.
void write_mosaic_outputs(const MosaicBuild& build, const std::filesystem::path& out_dir,
                          const PipelineConfig& cfg, RunManifest* manifest = nullptr);

/// The whole chain; errors are rethrown with the failing stage in the message.
RunManifest run_pipeline(const PipelineConfig& cfg);

}  // namespace retmosaic

#include "retmosaic/pipeline_impl.hpp"
