#pragma once

#include "slforce/constitutive.hpp"
#include "slforce/forcenet.hpp"
#include "slforce/geometry.hpp"
#include "slforce/io.hpp"
#include "slforce/mesh.hpp"
#include "slforce/pattern.hpp"
#include "slforce/render.hpp"
#include "slforce/stereo.hpp"

#include <string>
#include <vector>

namespace slforce::sim {

struct PullProfile {
  double speed_mps = 0.01;
  double duration_s = 5.0;
  double sample_rate_hz = 30.0;
  double target_force_n = 3.0;  // elongation holds once the lumped force hits this
  // When set, the speed is rescaled so the target is reached at
  // ramp_fraction * duration, giving the run a genuine hold phase.
  bool rescale_speed_to_target = false;
  double ramp_fraction = 0.75;
};

struct NuisanceConfig {
  double pixel_noise_sigma = 2.0 / 255.0;
  double albedo_tint = 0.10;        // +-10% per channel per pull
  double pose_jitter_m = 0.0015;
  double pose_jitter_deg = 1.0;
};

struct SceneConfig {
  int image_width = 640, image_height = 480;
  double focal_px = 700.0;
  double baseline_m = 0.03;
  double projector_focal_px = 700.0;
  double projector_tilt_deg = 5.0;
  double projector_y_offset_m = -0.02;

  pattern::PatternSpec pattern_spec;
  TubeModel tube;
  constitutive::MaterialParams material;
  PullProfile pull;
  NuisanceConfig nuisance;
  stereo::MatchParams match;

  int points_per_cloud = 256;
  bool save_images = false;
  std::string material_id = "k40";
};

// Canonical tabletop scene; see tests and the bundled configs.
SceneConfig default_scene();

// Key-value overrides on top of default_scene(); unknown keys error.
SceneConfig scene_from_config(const io::Config& cfg);

geom::StereoRig rig_of(const SceneConfig& scene);
Pinhole left_camera(const SceneConfig& scene);
Pinhole right_camera(const SceneConfig& scene);
Pinhole projector(const SceneConfig& scene);

std::vector<double> sample_times(const PullProfile& pull);

// Elongation ramp at the pull speed, held at the first sample where the
// lumped force reaches the target. Returns one value per sample time.
std::vector<double> elongation_profile(const SceneConfig& scene,
                                       const std::vector<double>& times);

struct StereoRender {
  Rgb left, right;            // pattern projection
  Rgb left_ref, right_ref;    // white projection reference
};

StereoRender render_stereo(const SceneConfig& scene, const TriMesh& mesh,
                           const std::array<double, 3>& albedo);

struct SampleMeta {
  long sample_id = 0;
  std::string cloud_path;  // relative to the dataset root
  double force_n = 0.0;
  std::string material_id;
  double t_s = 0.0;
  int pull_id = 0;
};

struct DatasetManifest {
  std::vector<SampleMeta> samples;
};

// Full synthetic protocol: per pull, deform -> render -> match ->
// triangulate -> sample; clouds land as PLY files plus manifest.csv under
// out_dir. Frames with a collapsed match density are reported on stderr.
DatasetManifest generate_dataset(const SceneConfig& scene, int n_pulls,
                                 std::uint64_t seed,
                                 const std::string& out_dir);

void write_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::string& path);

struct LoadedDataset {
  net::Batch batch;                 // normalized clouds + force targets
  std::vector<SampleMeta> meta;     // aligned with batch entries
};

// Loads manifest + clouds, normalizing each cloud. pull_filter < 0 loads
// everything; otherwise keeps pulls with (pull_id < pull_filter) when
// `keep_below` or the complement otherwise.
LoadedDataset load_dataset(const std::string& dir, int pull_filter = -1,
                           bool keep_below = true);

}  // namespace slforce::sim
