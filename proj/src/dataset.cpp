#include "fss3d/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "fss3d/errors.hpp"
#include "fss3d/rng.hpp"

namespace fss {

namespace fsys = std::filesystem;
using nlohmann::json;

Vec3 dataset_object_center(const DatasetConfig& cfg) { return {0.0, cfg.object_range, 0.0}; }

InterfaceModel dataset_interface(const DatasetConfig& cfg) {
  if (!cfg.multipath) return {};
  return InterfaceModel::from_reference(cfg.depth, cfg.pitch, cfg.sigma, cfg.interface_seed);
}

std::vector<SonarPose> make_pose_schedule(const DatasetConfig& cfg) {
  const Vec3 center = dataset_object_center(cfg);
  const InterfaceModel iface = InterfaceModel::from_reference(cfg.depth, cfg.pitch);
  const Vec3 axis = iface.normal;  // orbit about the surface normal
  std::vector<SonarPose> poses;
  poses.reserve(cfg.view_count());
  for (int i = 0; i < cfg.n_positions; ++i) {
    const double psi = 2.0 * M_PI * i / cfg.n_positions;
    const Mat3 Rpos = Eigen::AngleAxisd(psi, axis).toRotationMatrix();
    const Vec3 t = center - Rpos * center;
    for (int j = 0; j < cfg.n_rolls; ++j) {
      const double roll = -M_PI + j * (M_PI / cfg.n_rolls);
      const Mat3 R = Rpos * Eigen::AngleAxisd(roll, Vec3::UnitY()).toRotationMatrix();
      SonarPose p;
      Eigen::AngleAxisd aa(R);
      p.rotation = aa.angle() * aa.axis();
      p.translation = t;
      p.depth = iface.depth_of(p);
      p.pitch = iface.pitch_of(p);
      poses.push_back(p);
    }
  }
  return poses;
}

namespace {

std::string view_stem(int index) {
  std::ostringstream ss;
  ss << "view_" << (index < 100 ? (index < 10 ? "00" : "0") : "") << index;
  return ss.str();
}

}  // namespace

Dataset gen_dataset_in_memory(const TriangleMesh& truth, const DatasetConfig& cfg) {
  cfg.geometry.validate();
  Dataset ds;
  ds.geometry = cfg.geometry;
  ds.config = cfg;
  ds.poses = make_pose_schedule(cfg);
  ds.interface_nominal = dataset_interface(cfg);

  MultipathRenderConfig rc;
  rc.surface_reflectivity = cfg.surface_reflectivity;

  for (int m = 0; m < cfg.view_count(); ++m) {
    const InterfaceModel iface_view =
        cfg.multipath ? perturb_interface(ds.interface_nominal, static_cast<std::uint64_t>(m))
                      : InterfaceModel{};
    ComponentRender r = render_components(truth, ds.poses[m], cfg.geometry, iface_view, rc);
    BeamBinImage img = r.combined;  // already peak-normalized
    if (cfg.noise_sigma > 0.0) {
      Rng rng(derive_seed(cfg.noise_seed, static_cast<std::uint64_t>(m), 0x4015ULL));
      for (auto& v : img.intensities)
        v = std::max(0.0f, v + static_cast<float>(rng.gaussian(0.0, cfg.noise_sigma)));
    }
    ds.images.push_back(std::move(img));
    ds.masks.push_back(std::move(r.masks));
  }
  return ds;
}

Dataset gen_dataset(const TriangleMesh& truth, const DatasetConfig& cfg,
                    const std::string& out_dir) {
  Dataset ds = gen_dataset_in_memory(truth, cfg);
  fsys::create_directories(out_dir);

  json manifest;
  manifest["format"] = "fss3d-dataset-1";
  manifest["views"] = cfg.view_count();
  manifest["n_positions"] = cfg.n_positions;
  manifest["n_rolls"] = cfg.n_rolls;
  manifest["geometry"] = {{"n_beams", cfg.geometry.n_beams}, {"n_bins", cfg.geometry.n_bins},
                          {"r_min", cfg.geometry.r_min},     {"r_max", cfg.geometry.r_max},
                          {"w_theta", cfg.geometry.w_theta}, {"w_phi", cfg.geometry.w_phi}};
  manifest["interface"] = {{"enabled", ds.interface_nominal.enabled},
                           {"depth", cfg.depth},
                           {"pitch", cfg.pitch},
                           {"sigma", cfg.sigma},
                           {"seed", cfg.interface_seed}};
  manifest["noise"] = {{"sigma", cfg.noise_sigma}, {"seed", cfg.noise_seed}};
  manifest["object_range"] = cfg.object_range;
  manifest["surface_reflectivity"] = cfg.surface_reflectivity;

  json files = json::array();
  std::ofstream poses_csv(fsys::path(out_dir) / "poses.csv");
  poses_csv.precision(17);
  poses_csv << "view,rx,ry,rz,tx,ty,tz,depth,pitch\n";

  for (int m = 0; m < cfg.view_count(); ++m) {
    const std::string stem = view_stem(m);
    const std::string img_path = (fsys::path(out_dir) / (stem + ".img")).string();
    const std::string meta_path = (fsys::path(out_dir) / (stem + ".meta")).string();
    const std::string mask_path = (fsys::path(out_dir) / (stem + ".mask")).string();
    save_image(ds.images[m], img_path, meta_path);
    save_masks(ds.masks[m], mask_path);
    const SonarPose& p = ds.poses[m];
    poses_csv << m << "," << p.rotation.x() << "," << p.rotation.y() << "," << p.rotation.z()
              << "," << p.translation.x() << "," << p.translation.y() << ","
              << p.translation.z() << "," << p.depth << "," << p.pitch << "\n";
    for (const std::string& f : {img_path, meta_path, mask_path})
      files.push_back({{"path", fsys::path(f).filename().string()},
                       {"role", fsys::path(f).extension().string().substr(1)},
                       {"fnv1a", fnv1a_hex(f)}});
  }
  poses_csv.close();
  files.push_back({{"path", "poses.csv"},
                   {"role", "poses"},
                   {"fnv1a", fnv1a_hex((fsys::path(out_dir) / "poses.csv").string())}});
  manifest["files"] = files;

  std::ofstream mf(fsys::path(out_dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  return ds;
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream mf(fsys::path(dir) / "manifest.json");
  if (!mf) throw Error(ErrorCode::IoError, "no manifest.json in " + dir);
  json manifest = json::parse(mf);

  Dataset ds;
  ds.config.n_positions = manifest["n_positions"];
  ds.config.n_rolls = manifest["n_rolls"];
  auto& jg = manifest["geometry"];
  ds.geometry.n_beams = jg["n_beams"];
  ds.geometry.n_bins = jg["n_bins"];
  ds.geometry.r_min = jg["r_min"];
  ds.geometry.r_max = jg["r_max"];
  ds.geometry.w_theta = jg["w_theta"];
  ds.geometry.w_phi = jg["w_phi"];
  ds.config.geometry = ds.geometry;
  auto& ji = manifest["interface"];
  ds.config.depth = ji["depth"];
  ds.config.pitch = ji["pitch"];
  ds.config.sigma = ji["sigma"];
  ds.config.interface_seed = ji["seed"];
  ds.config.multipath = ji["enabled"];
  ds.config.noise_sigma = manifest["noise"]["sigma"];
  ds.config.noise_seed = manifest["noise"]["seed"];
  ds.config.object_range = manifest["object_range"];
  ds.config.surface_reflectivity = manifest["surface_reflectivity"];
  ds.interface_nominal = dataset_interface(ds.config);

  const int n = manifest["views"];
  for (int m = 0; m < n; ++m) {
    const std::string stem = view_stem(m);
    BeamBinImage img = load_image((fsys::path(dir) / (stem + ".img")).string(),
                                  (fsys::path(dir) / (stem + ".meta")).string());
    ds.masks.push_back(load_masks(img.geom, (fsys::path(dir) / (stem + ".mask")).string()));
    ds.poses.push_back(img.pose);
    ds.images.push_back(std::move(img));
  }
  return ds;
}

std::string fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open for checksum: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

}  // namespace fss
