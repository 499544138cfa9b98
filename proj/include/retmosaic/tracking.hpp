#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "retmosaic/image.hpp"

namespace retmosaic {

struct DiskDetection {
  Point2 center;       // frame pixels
  double radius = 0.0;  // frame pixels
  double confidence = 0.0;
};

/// One entry per frame; nullopt where detection failed.
using EyeTrack = std::vector<std::optional<DiskDetection>>;

struct RadiusRange {
  double min = 8.0;
  double max = 30.0;
};

/// Brightest roughly circular blob with radius in range, found by normalized
/// correlation against a bright-disk template on a Gaussian pyramid and then
/// refined at full resolution. nullopt when the best score is below 0.2.
std::optional<DiskDetection> detect_optic_disk(const ImageGray& frame, RadiusRange range);

EyeTrack track_sequence(const std::vector<ImageGray>& frames, RadiusRange range);

struct View {
  std::vector<std::size_t> frames;  // 0-based frame indices, ascending
  Point2 start;                     // u_i: eye position in the first frame
};

struct ViewPartition {
  std::vector<View> views;
  std::size_t reference = 0;  // 0-based index into views
  Point2 centroid;            // u_0
};

struct PartitionParams {
  double d_max = 5.0;
  double d_min = 100.0;
  std::size_t k_min = 6;
};

/// Sequential scan: a view opens at a usable frame at least d_min from the
/// previous view's start (the first opens unconditionally), collects frames
/// within d_max of its start, and closes at the first frame outside d_max.
/// Transit frames and failed detections are discarded; views shorter than
/// k_min are dropped. Reference and centroid are filled in. Throws
/// Error(Quality) "no stable views" when nothing survives.
ViewPartition partition_views(const EyeTrack& track, const PartitionParams& params);

/// u_0 = mean of view starts; the view closest to it (lowest index on ties).
std::size_t select_reference(const ViewPartition& partition);
Point2 views_centroid(const ViewPartition& partition);

/// Track file: one record per frame, `k u1 u2 radius` or `k -`; `#` starts a
/// comment. Frame indices must be 0..K-1, each exactly once.
EyeTrack parse_track(const std::string& text);
EyeTrack load_external_track(const std::filesystem::path& path);
std::string serialize_track(const EyeTrack& track);

/// One line per view:
///   view <i> first <k> last <k> frames <k,k,...> u <u1> <u2> reference <0|1>
std::string serialize_partition(const ViewPartition& p);
ViewPartition parse_partition(const std::string& text);

}  // namespace retmosaic
