// Command-line pipeline: dataset generation, space carving, iterative
// refinement, interface-fluctuation experiments and mesh metrics.
//
// Exit codes: 0 success, 2 configuration error, 3 pipeline error.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "fss3d/carve.hpp"
#include "fss3d/dataset.hpp"
#include "fss3d/errors.hpp"
#include "fss3d/metrics.hpp"
#include "fss3d/refine.hpp"
#include "fss3d/rng.hpp"
#include "fss3d/shapes.hpp"

using namespace fss;
namespace fsys = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = 0.017453292519943295;

struct SceneArgs {
  DatasetConfig cfg;
  double w_theta_deg = 15.0;
  double w_phi_deg = 8.0;
  double pitch_deg = 5.0;
  std::string mesh_path;
  std::string builtin = "rocky";

  void attach(CLI::App* app, bool with_mesh = true) {
    app->add_option("--beams", cfg.geometry.n_beams, "beam count");
    app->add_option("--bins", cfg.geometry.n_bins, "range bin count");
    app->add_option("--r-min", cfg.geometry.r_min, "range window start [m]");
    app->add_option("--r-max", cfg.geometry.r_max, "range window end [m]");
    app->add_option("--w-theta-deg", w_theta_deg, "half horizontal FoV [deg]");
    app->add_option("--w-phi-deg", w_phi_deg, "half vertical FoV [deg]");
    app->add_option("--positions", cfg.n_positions, "sonar positions around the object");
    app->add_option("--rolls", cfg.n_rolls, "roll angles per position");
    app->add_option("--range", cfg.object_range, "object center range [m]");
    app->add_option("--depth", cfg.depth, "sonar depth below the interface [m]");
    app->add_option("--pitch-deg", pitch_deg, "boresight pitch toward the interface [deg]");
    app->add_option("--sigma", cfg.sigma, "interface fluctuation std dev [m]");
    app->add_option("--seed", cfg.interface_seed, "interface seed");
    app->add_option("--noise", cfg.noise_sigma, "additive intensity noise std dev");
    app->add_option("--noise-seed", cfg.noise_seed, "noise seed");
    app->add_option("--rho", cfg.surface_reflectivity, "surface reflection coefficient");
    app->add_flag("!--no-multipath", cfg.multipath, "disable interface multipath");
    if (with_mesh) {
      app->add_option("--mesh", mesh_path, "truth mesh (OBJ)");
      app->add_option("--builtin", builtin, "built-in truth shape: sphere|sphere-bump|rocky");
    }
  }

  DatasetConfig finalize() {
    cfg.geometry.w_theta = w_theta_deg * kDeg;
    cfg.geometry.w_phi = w_phi_deg * kDeg;
    cfg.pitch = pitch_deg * kDeg;
    cfg.geometry.validate();
    return cfg;
  }

  TriangleMesh truth_mesh() {
    if (!mesh_path.empty()) return load_mesh(mesh_path);
    const Vec3 c = dataset_object_center(cfg);
    if (builtin == "sphere") return make_icosphere(0.12, 4, c);
    if (builtin == "sphere-bump")
      return make_sphere_with_bump(0.12, 4, c, Vec3(1, 0, 0), 0.03, 0.5);
    if (builtin == "rocky") {
      TriangleMesh m = make_sphere_with_bump(0.12, 4, c, Vec3(1, 0, 0), 0.03, 0.5);
      roughen_radial(m, c, 0.08);
      return m;
    }
    throw Error(ErrorCode::InvalidConfig, "unknown --builtin shape: " + builtin);
  }
};

struct CarveArgs {
  int grid = 96;
  double half_extent = 0.3;
  int target_triangles = 2000;
  int min_views = 2;

  void attach(CLI::App* app) {
    app->add_option("--grid", grid, "voxel grid resolution per axis");
    app->add_option("--half-extent", half_extent, "half extent of the carve box [m]");
    app->add_option("--target-triangles", target_triangles, "simplification budget");
    app->add_option("--min-views", min_views, "minimum views a voxel must be seen in");
  }
};

struct RefineArgs {
  RefineConfig cfg;
  bool no_ghost_mask = false;
  bool no_mirror = false;
  double d1_cm = 0.5, d2_cm = 2.0;

  void attach(CLI::App* app) {
    app->add_option("--max-iter", cfg.max_iter, "refinement iterations");
    app->add_option("--stop-tol", cfg.stop_tol, "E_I stopping tolerance");
    app->add_option("--lambda-gate", cfg.lambda_gate, "view relevance gate [m]");
    app->add_option("--seg-threshold", cfg.segment_threshold, "segmentation threshold");
    app->add_option("--block-beams", cfg.correlation.block_beams, "correlation block beams (W_b)");
    app->add_option("--block-bins", cfg.correlation.block_bins, "correlation block bins (W_B)");
    app->add_option("--search-beams", cfg.correlation.search_beams, "search window beams (W_W)");
    app->add_option("--search-bins", cfg.correlation.search_bins, "search window bins (W_H)");
    app->add_option("--blend-d1-cm", d1_cm, "full contour weight inside this distance [cm]");
    app->add_option("--blend-d2-cm", d2_cm, "contour weight decays to 0.01 here [cm]");
    app->add_flag("--no-ghost-mask", no_ghost_mask, "ablation: keep ghost-corrupted pixels");
    app->add_flag("--no-mirror-contour", no_mirror, "do not use the mirror lower contour");
    app->add_flag("--no-subpixel", "disable sub-cell correlation refinement");
  }

  RefineConfig finalize(CLI::App* app) {
    cfg.mask_corrupted = !no_ghost_mask;
    cfg.use_mirror_contour = !no_mirror;
    cfg.blend.d1_cm = d1_cm;
    cfg.blend.d2_cm = d2_cm;
    if (app->count("--no-subpixel")) cfg.correlation.subpixel = false;
    return cfg;
  }
};

CarveResult carve_dataset(const Dataset& ds, const CarveArgs& ca) {
  std::vector<CarveView> views;
  views.reserve(ds.images.size());
  for (size_t m = 0; m < ds.images.size(); ++m)
    views.push_back({feasible_region(ds.images[m], &ds.masks[m]), ds.poses[m]});
  VoxelGrid grid;
  const Vec3 c = dataset_object_center(ds.config);
  grid.lo = c - Vec3::Constant(ca.half_extent);
  grid.hi = c + Vec3::Constant(ca.half_extent);
  grid.nx = grid.ny = grid.nz = ca.grid;
  CarveConfig cc;
  cc.target_triangles = ca.target_triangles;
  cc.min_views_in_fov = ca.min_views;
  return carve(views, grid, cc);
}

void write_reports_csv(const std::string& path, const std::vector<IterationReport>& reports) {
  std::ofstream out(path);
  out << "iteration,aie,ace,naie,nace,e_i,relevant_views,total_views,mean_motion,max_motion,"
         "patches_solved,nve\n";
  out.precision(10);
  for (const auto& r : reports)
    out << r.iteration << "," << r.aie << "," << r.ace << "," << r.naie << "," << r.nace << ","
        << r.e_i << "," << r.relevant_views << "," << r.total_views << "," << r.mean_motion
        << "," << r.max_motion << "," << r.patches_solved << ","
        << (r.nve_truth >= 0.0 ? std::to_string(r.nve_truth) : "") << "\n";
}

void dump_motions(const std::string& dir, const std::vector<MotionField2D>& fields) {
  fsys::create_directories(dir);
  for (size_t m = 0; m < fields.size(); ++m) {
    std::ostringstream name;
    name << "motions_view_" << m << ".csv";
    std::ofstream out(fsys::path(dir) / name.str());
    out << "b,B,vx,vy,alpha,score,source\n";
    out.precision(9);
    for (const auto& [key, mv] : fields[m].vectors)
      out << (key >> 16) << "," << (key & 0xffff) << "," << mv.v.x() << "," << mv.v.y() << ","
          << mv.alpha << "," << mv.score << "," << static_cast<int>(mv.source) << "\n";
  }
}

int cmd_gen(SceneArgs& scene, const std::string& out_dir, bool save_truth) {
  DatasetConfig cfg = scene.finalize();
  TriangleMesh truth = scene.truth_mesh();
  gen_dataset(truth, cfg, out_dir);
  if (save_truth) save_mesh(truth, (fsys::path(out_dir) / "truth.obj").string());
  std::cout << "wrote " << cfg.view_count() << " views to " << out_dir << "\n";
  return 0;
}

int cmd_carve(const std::string& dataset_dir, const CarveArgs& ca, const std::string& out_mesh,
              const std::string& dump_occupancy) {
  Dataset ds = load_dataset(dataset_dir);
  CarveResult res = carve_dataset(ds, ca);
  save_mesh(res.mesh, out_mesh);
  if (!dump_occupancy.empty()) {
    std::ofstream raw(dump_occupancy, std::ios::binary);
    raw << "fss3d-occupancy " << res.grid.nx << " " << res.grid.ny << " " << res.grid.nz << " "
        << res.grid.lo.transpose() << " " << res.grid.hi.transpose() << "\n";
    raw.write(reinterpret_cast<const char*>(res.occupancy.data()),
              static_cast<std::streamsize>(res.occupancy.size()));
  }
  std::cout << "carved " << res.occupied << " voxels -> " << res.mesh.triangle_count()
            << " triangles -> " << out_mesh << "\n";
  return 0;
}

int cmd_reconstruct(const std::string& dataset_dir, const CarveArgs& ca, RefineArgs& ra,
                    CLI::App* sub, const std::string& out_dir, const std::string& init_path,
                    const std::string& truth_path, bool dump_iters, bool dump_motion_fields) {
  Dataset ds = load_dataset(dataset_dir);
  fsys::create_directories(out_dir);

  TriangleMesh initial =
      init_path.empty() ? carve_dataset(ds, ca).mesh : load_mesh(init_path);
  save_mesh(initial, (fsys::path(out_dir) / "initial.obj").string());

  TriangleMesh truth;
  const bool have_truth = !truth_path.empty();
  if (have_truth) truth = load_mesh(truth_path);

  RefineConfig cfg = ra.finalize(sub);
  std::vector<MotionField2D> motions;
  if (dump_motion_fields) cfg.motion_out = &motions;

  ViewSet views = ViewSet::from_dataset(ds);
  RunResult run = run_refinement(initial, views, cfg, have_truth ? &truth : nullptr);

  save_mesh(run.best_mesh, (fsys::path(out_dir) / "refined.obj").string());
  write_reports_csv((fsys::path(out_dir) / "reports.csv").string(), run.reports);
  if (dump_motion_fields) dump_motions((fsys::path(out_dir) / "motions").string(), motions);
  if (dump_iters) {
    // re-run to capture intermediate meshes (cheap relative to clarity)
    TriangleMesh current = initial;
    for (int k = 0; k < static_cast<int>(run.reports.size()) - 1; ++k) {
      IterateResult step = iterate(current, views, k, cfg, true);
      current = step.mesh;
      std::ostringstream name;
      name << "mesh_iter_" << k + 1 << ".obj";
      save_mesh(current, (fsys::path(out_dir) / name.str()).string());
    }
  }

  json summary;
  summary["iterations"] = run.reports.size() - 1;
  summary["best_iteration"] = run.best_iteration;
  summary["best_e_i"] = run.reports.empty() ? 1.0 : run.reports[run.best_iteration].e_i;
  summary["final_e_i"] = run.reports.back().e_i;
  summary["relevant_views_final"] = run.reports.back().relevant_views;
  summary["config"] = {{"max_iter", cfg.max_iter},
                       {"stop_tol", cfg.stop_tol},
                       {"lambda_gate", cfg.lambda_gate},
                       {"segment_threshold", cfg.segment_threshold},
                       {"max_step", cfg.max_step},
                       {"mask_corrupted", cfg.mask_corrupted},
                       {"use_mirror_contour", cfg.use_mirror_contour},
                       {"subpixel", cfg.correlation.subpixel},
                       {"block", {cfg.correlation.block_beams, cfg.correlation.block_bins}},
                       {"search", {cfg.correlation.search_beams, cfg.correlation.search_bins}},
                       {"blend_d_cm", {cfg.blend.d1_cm, cfg.blend.d2_cm}},
                       {"dataset", dataset_dir},
                       {"init", init_path},
                       {"truth", truth_path}};
  if (have_truth) {
    summary["nve_initial"] = run.reports.front().nve_truth;
    summary["nve_best"] = nve(run.best_mesh, truth);
  }
  std::ofstream sj(fsys::path(out_dir) / "summary.json");
  sj << summary.dump(2) << "\n";
  std::cout << "refined model in " << out_dir << " (best E_I "
            << run.reports[run.best_iteration].e_i << ")\n";
  return 0;
}

int cmd_sweep(SceneArgs& scene, const CarveArgs& ca, RefineArgs& ra, CLI::App* sub,
              const std::string& out_dir, std::vector<double> levels, int reps, int iters) {
  DatasetConfig base = scene.finalize();
  TriangleMesh truth = scene.truth_mesh();
  fsys::create_directories(out_dir);

  RefineConfig rcfg = ra.finalize(sub);
  rcfg.max_iter = iters;
  rcfg.stop_tol = 0.0;  // always run the full iteration budget

  levels.insert(levels.begin(), 0.0);  // flat baseline first
  std::ofstream csv(fsys::path(out_dir) / "sweep.csv");
  csv << "sigma,mean_nve,std_nve,n\n";
  csv.precision(8);

  json per_run = json::array();
  for (size_t li = 0; li < levels.size(); ++li) {
    std::vector<double> nves;
    for (int rep = 0; rep < reps; ++rep) {
      DatasetConfig cfg = base;
      cfg.sigma = levels[li];
      // interface realization varies per repetition; image noise stays
      // fixed so the interface is the only source of randomness
      cfg.interface_seed = derive_seed(base.interface_seed, li, static_cast<std::uint64_t>(rep));
      Dataset ds = gen_dataset_in_memory(truth, cfg);
      TriangleMesh initial = carve_dataset(ds, ca).mesh;
      ViewSet views = ViewSet::from_dataset(ds);
      RunResult run = run_refinement(initial, views, rcfg, &truth);
      const double v = run.reports.back().nve_truth;  // after the iteration budget
      nves.push_back(v);
      per_run.push_back({{"sigma", levels[li]}, {"rep", rep}, {"nve", v}});
      std::cout << "sigma " << levels[li] << " rep " << rep << ": NVE " << v << "\n";
    }
    double mean = 0.0;
    for (double v : nves) mean += v;
    mean /= nves.size();
    double var = 0.0;
    for (double v : nves) var += (v - mean) * (v - mean);
    double stdev = nves.size() > 1 ? std::sqrt(var / (nves.size() - 1)) : 0.0;
    csv << levels[li] << "," << mean << "," << stdev << "," << nves.size() << "\n";
  }
  std::ofstream rj(fsys::path(out_dir) / "runs.json");
  rj << per_run.dump(2) << "\n";
  std::cout << "sweep written to " << out_dir << "\n";
  return 0;
}

int cmd_metrics(const std::string& mesh_a, const std::string& mesh_b, int resolution) {
  TriangleMesh a = load_mesh(mesh_a);
  TriangleMesh b = load_mesh(mesh_b);
  NveConfig nc;
  nc.resolution = resolution;
  std::cout << "NVE " << nve(a, b, nc) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"3-D object modeling from multi-view forward-scan sonar images"};
  app.require_subcommand(1);

  SceneArgs gen_scene, sweep_scene;
  CarveArgs carve_args, rec_carve, sweep_carve;
  RefineArgs rec_refine, sweep_refine;
  std::string out_dir, dataset_dir, out_mesh = "carved.obj", init_path, truth_path;
  std::string dump_occupancy, mesh_a, mesh_b;
  bool save_truth = false, dump_iters = false, dump_motion_fields = false;
  std::vector<double> levels = {0.05, 0.10, 0.15, 0.20};
  int reps = 20, sweep_iters = 5, resolution = 128;

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen_scene.attach(gen);
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_flag("--save-truth", save_truth, "also write truth.obj into the dataset");

  CLI::App* carve_cmd = app.add_subcommand("carve", "space-carve an initial model");
  carve_cmd->add_option("--dataset", dataset_dir, "dataset directory")->required();
  carve_cmd->add_option("--out", out_mesh, "output mesh (OBJ)");
  carve_cmd->add_option("--dump-occupancy", dump_occupancy, "write the raw occupancy grid");
  carve_args.attach(carve_cmd);

  CLI::App* rec = app.add_subcommand("reconstruct", "carve + iterative refinement");
  rec->add_option("--dataset", dataset_dir, "dataset directory")->required();
  rec->add_option("--out-dir", out_dir, "output directory")->required();
  rec->add_option("--init", init_path, "initial mesh (skips carving)");
  rec->add_option("--truth", truth_path, "ground-truth mesh: adds an NVE column");
  rec->add_flag("--dump-iters", dump_iters, "write the mesh after every iteration");
  rec->add_flag("--dump-motions", dump_motion_fields, "write per-view motion-field CSVs");
  rec_carve.attach(rec);
  rec_refine.attach(rec);

  CLI::App* sweep = app.add_subcommand("sweep-interface",
                                       "reconstruction accuracy vs interface fluctuation");
  sweep_scene.attach(sweep);
  sweep->add_option("--out-dir", out_dir, "output directory")->required();
  sweep->add_option("--levels", levels, "fluctuation std-dev levels [m]");
  sweep->add_option("--reps", reps, "repetitions per level");
  sweep->add_option("--iters", sweep_iters, "refinement iterations per run");
  sweep_carve.attach(sweep);
  sweep_refine.attach(sweep);

  CLI::App* met = app.add_subcommand("metrics", "volumetric error between two meshes");
  met->add_option("--mesh-a", mesh_a)->required();
  met->add_option("--mesh-b", mesh_b)->required();
  met->add_option("--resolution", resolution, "voxelization resolution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_scene, out_dir, save_truth);
    if (carve_cmd->parsed()) return cmd_carve(dataset_dir, carve_args, out_mesh, dump_occupancy);
    if (rec->parsed())
      return cmd_reconstruct(dataset_dir, rec_carve, rec_refine, rec, out_dir, init_path,
                             truth_path, dump_iters, dump_motion_fields);
    if (sweep->parsed())
      return cmd_sweep(sweep_scene, sweep_carve, sweep_refine, sweep, out_dir, levels, reps,
                       sweep_iters);
    if (met->parsed()) return cmd_metrics(mesh_a, mesh_b, resolution);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidConfig ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
