#include "slforce/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace slforce::sim {

SceneConfig default_scene() {
  SceneConfig scene;
  scene.pattern_spec = pattern::make_spec(3, 4, 40, 16, 256);
  scene.tube.rest_length_m = 0.12;
  scene.tube.radius_m = 0.012;
  scene.tube.center = Eigen::Vector3d(scene.baseline_m / 2.0, 0.0, 0.25);
  scene.material.model = constitutive::Model::KelvinVoigt;
  scene.material.lumped_stiffness_n_per_m = 40.0;
  scene.material.lumped_damping_n_s_per_m = 2.0;  // 0.05 * k * 1s
  scene.material.elastic_modulus_pa = 40.0;
  scene.material.viscosity_pa_s = 2.0;
  // Tube front sits near z = 0.238..0.25: d = f B / z in [84, 88].
  scene.match.d_min = 76;
  scene.match.d_max = 96;
  return scene;
}

SceneConfig scene_from_config(const io::Config& cfg) {
  SceneConfig scene = default_scene();
  scene.image_width = cfg.get_int("image_width", scene.image_width);
  scene.image_height = cfg.get_int("image_height", scene.image_height);
  scene.focal_px = cfg.get_double("focal_px", scene.focal_px);
  scene.baseline_m = cfg.get_double("baseline_m", scene.baseline_m);
  scene.projector_focal_px =
      cfg.get_double("projector_focal_px", scene.focal_px);
  scene.projector_tilt_deg =
      cfg.get_double("projector_tilt_deg", scene.projector_tilt_deg);
  scene.projector_y_offset_m =
      cfg.get_double("projector_y_offset_m", scene.projector_y_offset_m);

  const int fringe_count =
      cfg.get_int("fringe_count", scene.pattern_spec.fringe_count);
  const int fringe_width =
      cfg.get_int("fringe_width_px", scene.pattern_spec.fringe_width_px);
  const int pattern_height =
      cfg.get_int("pattern_height_px", scene.pattern_spec.height_px);
  scene.pattern_spec = pattern::make_spec(3, 4, fringe_count, fringe_width,
                                          pattern_height);

  scene.tube.rest_length_m =
      cfg.get_double("tube_length_m", scene.tube.rest_length_m);
  scene.tube.radius_m = cfg.get_double("tube_radius_m", scene.tube.radius_m);
  scene.tube.center.z() = cfg.get_double("tube_z_m", scene.tube.center.z());
  scene.tube.center.x() =
      cfg.get_double("tube_x_m", scene.baseline_m / 2.0);
  scene.tube.center.y() = cfg.get_double("tube_y_m", 0.0);
  scene.tube.rings = cfg.get_int("tube_rings", scene.tube.rings);
  scene.tube.segments = cfg.get_int("tube_segments", scene.tube.segments);

  const double k =
      cfg.get_double("stiffness_n_per_m", scene.material.lumped_stiffness_n_per_m);
  scene.material.lumped_stiffness_n_per_m = k;
  scene.material.lumped_damping_n_s_per_m =
      cfg.get_double("damping_n_s_per_m", 0.05 * k);
  scene.material.elastic_modulus_pa = k;
  scene.material.viscosity_pa_s =
      std::max(scene.material.lumped_damping_n_s_per_m, 1e-6);

  scene.pull.speed_mps = cfg.get_double("pull_speed_mps", scene.pull.speed_mps);
  scene.pull.duration_s = cfg.get_double("pull_duration_s", scene.pull.duration_s);
  scene.pull.sample_rate_hz =
      cfg.get_double("sample_rate_hz", scene.pull.sample_rate_hz);
  scene.pull.target_force_n =
      cfg.get_double("target_force_n", scene.pull.target_force_n);
  scene.pull.rescale_speed_to_target = cfg.get_bool(
      "rescale_speed_to_target", scene.pull.rescale_speed_to_target);
  scene.pull.ramp_fraction =
      cfg.get_double("ramp_fraction", scene.pull.ramp_fraction);

  scene.nuisance.pixel_noise_sigma =
      cfg.get_double("pixel_noise_sigma", scene.nuisance.pixel_noise_sigma);
  scene.nuisance.albedo_tint =
      cfg.get_double("albedo_tint", scene.nuisance.albedo_tint);
  scene.nuisance.pose_jitter_m =
      cfg.get_double("pose_jitter_m", scene.nuisance.pose_jitter_m);
  scene.nuisance.pose_jitter_deg =
      cfg.get_double("pose_jitter_deg", scene.nuisance.pose_jitter_deg);

  scene.match.d_min = cfg.get_int("d_min", scene.match.d_min);
  scene.match.d_max = cfg.get_int("d_max", scene.match.d_max);
  scene.match.relocation_radius =
      cfg.get_int("relocation_radius", scene.match.relocation_radius);
  scene.match.sgm.p1 = cfg.get_double("sgm_p1", scene.match.sgm.p1);
  scene.match.sgm.p2 = cfg.get_double("sgm_p2", scene.match.sgm.p2);
  if (cfg.get_int("sgm_paths", 8) == 4) {
    scene.match.sgm.path_directions = stereo::four_path_directions();
  }
  scene.match.decode.max_bridge_px =
      cfg.get_int("decode_max_bridge_px", scene.match.decode.max_bridge_px);

  scene.points_per_cloud = cfg.get_int("points_per_cloud", scene.points_per_cloud);
  scene.save_images = cfg.get_bool("save_images", scene.save_images);
  scene.material_id = cfg.get_string("material_id", scene.material_id);
  if (scene.match.d_min < 0) {
    throw ConfigError("d_min must be >= 0 (the disparity file format "
                      "reserves negatives for invalid pixels)");
  }
  return scene;
}

geom::StereoRig rig_of(const SceneConfig& scene) {
  geom::StereoRig rig;
  rig.focal_px = scene.focal_px;
  rig.cx = (scene.image_width - 1) / 2.0;
  rig.cy = (scene.image_height - 1) / 2.0;
  rig.baseline_m = scene.baseline_m;
  return rig;
}

Pinhole left_camera(const SceneConfig& scene) {
  Pinhole cam;
  cam.width = scene.image_width;
  cam.height = scene.image_height;
  cam.f = scene.focal_px;
  cam.cx = (scene.image_width - 1) / 2.0;
  cam.cy = (scene.image_height - 1) / 2.0;
  return cam;
}

Pinhole right_camera(const SceneConfig& scene) {
  Pinhole cam = left_camera(scene);
  cam.position = Eigen::Vector3d(scene.baseline_m, 0.0, 0.0);
  return cam;
}

Pinhole projector(const SceneConfig& scene) {
  Pinhole proj;
  proj.width = scene.pattern_spec.width_px();
  proj.height = scene.pattern_spec.height_px;
  proj.f = scene.projector_focal_px;
  proj.cx = (proj.width - 1) / 2.0;
  proj.cy = (proj.height - 1) / 2.0;
  proj.position = Eigen::Vector3d(scene.baseline_m / 2.0,
                                  scene.projector_y_offset_m, 0.0);
  // Tilt the device toward +y (image y runs down) so fringes land on the
  // scene slightly from above.
  const double a = scene.projector_tilt_deg * M_PI / 180.0;
  Eigen::Matrix3d rx;
  rx << 1, 0, 0, 0, std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a);
  proj.rot = rx.transpose();
  return proj;
}

std::vector<double> sample_times(const PullProfile& pull) {
  if (!(pull.sample_rate_hz > 0.0) || !(pull.duration_s > 0.0)) {
    throw std::invalid_argument("pull profile: rate and duration must be > 0");
  }
  const int n = static_cast<int>(std::lround(pull.duration_s * pull.sample_rate_hz));
  std::vector<double> t(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<size_t>(i)] = i / pull.sample_rate_hz;
  return t;
}

std::vector<double> elongation_profile(const SceneConfig& scene,
                                       const std::vector<double>& times) {
  const double k = scene.material.lumped_stiffness_n_per_m;
  const double c = scene.material.lumped_damping_n_s_per_m;
  double v = scene.pull.speed_mps;
  if (!(v > 0.0)) throw std::invalid_argument("pull speed must be positive");
  if (scene.pull.rescale_speed_to_target) {
    const double t_ramp = scene.pull.ramp_fraction * scene.pull.duration_s;
    v = scene.pull.target_force_n / (k * t_ramp + c);
  }
  // Lumped ramp force k v t + c v reaches the target at t*.
  const double t_star = (scene.pull.target_force_n - c * v) / (k * v);
  std::vector<double> x(times.size());
  for (size_t i = 0; i < times.size(); ++i) {
    x[i] = v * std::min(times[i], std::max(t_star, 0.0));
  }
  return x;
}

StereoRender render_stereo(const SceneConfig& scene, const TriMesh& mesh,
                           const std::array<double, 3>& albedo) {
  const Bvh bvh(mesh);
  const Pinhole lcam = left_camera(scene);
  const Pinhole rcam = right_camera(scene);
  const Pinhole proj = projector(scene);
  const Rgb pattern_img = pattern::generate_pattern(scene.pattern_spec);

  const HitBuffer lhits = cast_camera(lcam, bvh);
  const HitBuffer rhits = cast_camera(rcam, bvh);

  StereoRender out;
  out.left = shade(lhits, lcam, proj, &pattern_img, albedo);
  out.right = shade(rhits, rcam, proj, &pattern_img, albedo);
  out.left_ref = shade(lhits, lcam, proj, nullptr, albedo);
  out.right_ref = shade(rhits, rcam, proj, nullptr, albedo);
  return out;
}

namespace {

std::string sample_name(long id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clouds/s%06ld.ply", id);
  return buf;
}

}  // namespace

DatasetManifest generate_dataset(const SceneConfig& scene, int n_pulls,
                                 std::uint64_t seed,
                                 const std::string& out_dir) {
  if (n_pulls < 1) throw std::invalid_argument("generate_dataset: n_pulls < 1");
  io::ensure_directory(out_dir);
  io::ensure_directory(out_dir + "/clouds");
  if (scene.save_images) io::ensure_directory(out_dir + "/images");

  const std::vector<double> times = sample_times(scene.pull);
  const std::vector<double> elongation = elongation_profile(scene, times);
  const std::vector<double> force =
      constitutive::traction_force(scene.material, elongation, times);
  const geom::StereoRig rig = rig_of(scene);

  DatasetManifest manifest;
  long sample_id = 0;
  for (int pull = 0; pull < n_pulls; ++pull) {
    std::mt19937_64 pull_rng(derive_seed(seed, static_cast<std::uint64_t>(pull), 1));
    std::array<double, 3> albedo = scene.tube.albedo;
    for (auto& a : albedo) {
      a *= 1.0 + scene.nuisance.albedo_tint * (2.0 * uniform01(pull_rng) - 1.0);
      a = std::clamp(a, 0.0, 1.0);
    }
    const Eigen::Vector3d jitter_t =
        scene.nuisance.pose_jitter_m *
        Eigen::Vector3d(2.0 * uniform01(pull_rng) - 1.0,
                        2.0 * uniform01(pull_rng) - 1.0,
                        2.0 * uniform01(pull_rng) - 1.0);
    const double jr = scene.nuisance.pose_jitter_deg * M_PI / 180.0;
    const Eigen::Vector3d angles(jr * (2.0 * uniform01(pull_rng) - 1.0),
                                 jr * (2.0 * uniform01(pull_rng) - 1.0),
                                 jr * (2.0 * uniform01(pull_rng) - 1.0));
    const Eigen::Matrix3d jitter_r =
        (Eigen::AngleAxisd(angles.z(), Eigen::Vector3d::UnitZ()) *
         Eigen::AngleAxisd(angles.y(), Eigen::Vector3d::UnitY()) *
         Eigen::AngleAxisd(angles.x(), Eigen::Vector3d::UnitX()))
            .toRotationMatrix();

    for (size_t frame = 0; frame < times.size(); ++frame) {
      TriMesh mesh = deform_tube(scene.tube, elongation[frame]);
      // Jitter about the tube center so the object stays in frame.
      for (auto& v : mesh.vertices) {
        v = jitter_r * (v - scene.tube.center) + scene.tube.center + jitter_t;
      }

      StereoRender images = render_stereo(scene, mesh, albedo);
      std::mt19937_64 noise_rng(derive_seed(
          seed, static_cast<std::uint64_t>(pull),
          2 + static_cast<std::uint64_t>(frame)));
      add_pixel_noise(images.left, scene.nuisance.pixel_noise_sigma, noise_rng);
      add_pixel_noise(images.right, scene.nuisance.pixel_noise_sigma, noise_rng);
      add_pixel_noise(images.left_ref, scene.nuisance.pixel_noise_sigma, noise_rng);
      add_pixel_noise(images.right_ref, scene.nuisance.pixel_noise_sigma, noise_rng);

      stereo::StereoPair pair{images.left, images.right, true};
      const stereo::DisparityMap disparity = stereo::match(
          pair, scene.pattern_spec, scene.match, &images.left_ref,
          &images.right_ref);

      int valid = 0;
      for (int r = 0; r < disparity.height(); ++r) {
        for (int col = 0; col < disparity.width(); ++col) {
          const auto tag = disparity.tag_at(r, col);
          valid += tag == stereo::MatchTag::Verified ||
                   tag == stereo::MatchTag::Relocated;
        }
      }
      const double density =
          static_cast<double>(valid) /
          (static_cast<double>(disparity.height()) * disparity.width());
      if (density < 0.10) {
        std::cerr << "warning: match density " << density << " below 10% at pull "
                  << pull << " frame " << frame << "\n";
      }

      const auto tri = geom::triangulate(disparity, rig);
      if (tri.cloud.pts.rows() < 4) {
        std::cerr << "warning: degenerate cloud at pull " << pull << " frame "
                  << frame << ", sample dropped\n";
        continue;
      }
      const geom::Cloud sampled = geom::sample_points(
          tri.cloud.pts, scene.points_per_cloud,
          derive_seed(seed, static_cast<std::uint64_t>(pull),
                      1000000 + static_cast<std::uint64_t>(frame)));

      SampleMeta meta;
      meta.sample_id = sample_id;
      meta.cloud_path = sample_name(sample_id);
      meta.force_n = force[frame];
      meta.material_id = scene.material_id;
      meta.t_s = times[frame];
      meta.pull_id = pull;
      io::write_ply(out_dir + "/" + meta.cloud_path, sampled,
                    "force_n=" + std::to_string(force[frame]));
      if (scene.save_images) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "images/s%06ld_%s.png", sample_id, "l");
        io::write_png(out_dir + "/" + buf, images.left);
        std::snprintf(buf, sizeof(buf), "images/s%06ld_%s.png", sample_id, "r");
        io::write_png(out_dir + "/" + buf, images.right);
      }
      manifest.samples.push_back(meta);
      ++sample_id;
    }
  }
  write_manifest(out_dir + "/manifest.csv", manifest);
  return manifest;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest: " + path);
  out << "sample_id,cloud_path,force_newtons,material_id,t_s,pull_id\n";
  out.precision(17);
  for (const auto& s : manifest.samples) {
    out << s.sample_id << "," << s.cloud_path << "," << s.force_n << ","
        << s.material_id << "," << s.t_s << "," << s.pull_id << "\n";
  }
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty manifest: " + path);
  DatasetManifest manifest;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    SampleMeta meta;
    std::string field;
    std::getline(ss, field, ',');
    meta.sample_id = std::stol(field);
    std::getline(ss, meta.cloud_path, ',');
    std::getline(ss, field, ',');
    meta.force_n = std::stod(field);
    std::getline(ss, meta.material_id, ',');
    std::getline(ss, field, ',');
    meta.t_s = std::stod(field);
    std::getline(ss, field, ',');
    meta.pull_id = std::stoi(field);
    manifest.samples.push_back(meta);
  }
  return manifest;
}

LoadedDataset load_dataset(const std::string& dir, int pull_filter,
                           bool keep_below) {
  const DatasetManifest manifest = read_manifest(dir + "/manifest.csv");
  LoadedDataset out;
  std::vector<double> targets;
  for (const auto& meta : manifest.samples) {
    if (pull_filter >= 0) {
      const bool below = meta.pull_id < pull_filter;
      if (below != keep_below) continue;
    }
    const geom::Cloud raw = io::read_ply(dir + "/" + meta.cloud_path);
    out.batch.clouds.push_back(geom::normalize_cloud(raw).pts);
    targets.push_back(meta.force_n);
    out.meta.push_back(meta);
  }
  out.batch.targets = Eigen::Map<const Eigen::VectorXd>(
      targets.data(), static_cast<Eigen::Index>(targets.size()));
  return out;
}

}  // namespace slforce::sim
