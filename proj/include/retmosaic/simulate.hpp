#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "retmosaic/image.hpp"
#include "retmosaic/registration.hpp"
#include "retmosaic/superres.hpp"
#include "retmosaic/tracking.hpp"

namespace retmosaic {

struct VesselStroke {
  std::vector<Point2> points;
  double width = 4.0;      // px
  double contrast = 0.2;   // darkening at the centerline
};

struct PhantomSpec {
  int width = 1280;
  int height = 960;
  Point2 disk_center{640.0, 480.0};
  double disk_radius = 30.0;
  double disk_contrast = 0.35;
  std::vector<VesselStroke> vessels;  // generated from the seed when empty
  double background = 0.45;
  double gradient_amplitude = 0.08;
  double vignetting = 0.15;
  double texture_amplitude = 0.02;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Vessel tree rooted at the disk; deterministic per seed.
std::vector<VesselStroke> generate_vessel_tree(const PhantomSpec& spec);

ImageGray make_phantom(const PhantomSpec& spec);

struct ViewScript {
  Point2 offset;  // window shift relative to the reference window, low-res px
  double rotation_deg = 0.0;
  std::array<double, 6> curvature{};  // u1^2, u2^2, u1*u2 per output row; high-res px^-1 about the view centre
  int frames = 6;
  double jitter = 1.0;   // per-frame translation amplitude, low-res px
  double gain = 1.0;
  double intensity_offset = 0.0;
  int transit = 0;  // single frames rendered on the way from the previous view
};

struct MotionScript {
  int frame_width = 320;
  int frame_height = 240;
  int magnification = 2;
  double psf_sigma = 0.8;
  double noise_sigma = 0.01;
  double gain_drift = 0.0;  // relative gain change per frame within a view
  std::optional<Point2> reference_origin;  // high-res phantom position of the reference window
  PhantomSpec phantom{};
  std::vector<ViewScript> views;

  void validate() const;
  /// Reference window origin; centred in the phantom unless set.
  Point2 origin() const;
};

/// Script text: global `key = value` lines, then one `[view]` stanza per view.
MotionScript parse_motion_script(const std::string& text);
MotionScript load_motion_script(const std::filesystem::path& path);
std::string serialize_motion_script(const MotionScript& script);

/// Ten complementary fixations with consecutive offsets at least 100 low-res
/// px apart.
MotionScript ten_view_script();

/// Map from reference-window high-res coordinates to the view's high-res
/// coordinates.
QuadraticTransform view_transform(const ViewScript& view, int magnification, int frame_width,
                                  int frame_height);

struct FrameTruth {
  std::size_t view = 0;          // stanza index
  int index_in_view = 0;         // -1 for transit frames
  AffineMotion motion;           // frame -> first frame of its view, low-res px
  Point2 track;                  // disk centre in frame coordinates, low-res px
  double gain = 1.0;
  double offset = 0.0;
};

struct GroundTruthBundle {
  MotionScript script;
  std::uint64_t seed = 0;
  ImageGray phantom;
  std::vector<ImageGray> frames;
  std::vector<FrameTruth> frame_truth;
  std::vector<QuadraticTransform> view_transforms;  // reference window -> view, high-res
  std::vector<ImageGray> view_truth;                 // high-res content of each view's first frame
  std::vector<std::size_t> view_first_frame;

  EyeTrack true_track() const;
};

/// Gain and offset applied to a prediction of apply_system.
ImageGray forward_render(const ImageGray& x, const ObservationModel& model, std::size_t k);

/// Renders every frame of the script. Throws Error(Config) "script exceeds
/// phantom" when a view samples more than 10 % of its area outside the phantom.
GroundTruthBundle generate_sequence(const ImageGray& phantom, const MotionScript& script,
                                    std::uint64_t seed);

/// Frames as numbered PGM files plus ground-truth sidecars.
void export_bundle(const GroundTruthBundle& bundle, const std::filesystem::path& dir);

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(1 / MSE) over masked pixels (all pixels without a mask).
double psnr(const ImageGray& a, const ImageGray& b, const PixelMask* mask = nullptr);

}  // namespace retmosaic
