// erpdepth: command-line front end for the ERP depth toolkit.
//
// Exit codes: 0 success, 2 input/config error, 3 evaluation error,
// 4 numerical divergence.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "erpdepth/config.hpp"
#include "erpdepth/cubemap.hpp"
#include "erpdepth/distortion.hpp"
#include "erpdepth/errors.hpp"
#include "erpdepth/image_io.hpp"
#include "erpdepth/metrics.hpp"
#include "erpdepth/parallel.hpp"
#include "erpdepth/refine.hpp"
#include "erpdepth/reprojection.hpp"
#include "erpdepth/synthetic_scene.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace erpdepth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitEvaluation = 3;
constexpr int kExitDivergence = 4;

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_view(const std::string& dir, const std::string& name, const RenderedView& view,
                int bit_depth) {
  write_png_image(join(dir, name + ".png"), view.image, bit_depth);
  write_pfm(join(dir, name + "_depth.pfm"), view.depth);
  write_pose_json(join(dir, name + "_pose.json"), view.pose);
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  if (cfg.views.empty() && !cfg.pair) {
    throw ConfigError("config needs at least one entry in 'views' or a 'pair'");
  }
  ensure_directory(out_dir);
  for (const ViewConfig& view : cfg.views) {
    write_view(out_dir, view.name, render_erp(cfg.scene, view.pose, cfg.grid), cfg.bit_depth);
  }
  if (cfg.pair) {
    const auto [target, source] =
        render_pair(cfg.scene, cfg.pair->target_pose, cfg.pair->relative_pose, cfg.grid);
    write_view(out_dir, "target", target, cfg.bit_depth);
    write_view(out_dir, "source", source, cfg.bit_depth);
    write_pose_json(join(out_dir, "relative_pose.json"), cfg.pair->relative_pose);
  }
  return kExitOk;
}

int cmd_warp(const std::string& source_path, const std::string& depth_path,
             const std::string& pose_path, const std::string& out_dir) {
  const ErpImage source = read_png_image(source_path);
  const DepthMap depth = read_pfm_depth(depth_path);
  const Pose pose = read_pose_json(pose_path);
  const WarpResult warp = warp_image(source, depth, pose);
  ensure_directory(out_dir);
  write_png_image(join(out_dir, "warped.png"), warp.image, 8);
  write_png_mask(join(out_dir, "valid_mask.png"), warp.valid_mask);
  return kExitOk;
}

int cmd_weightmap(int height, int width, const std::string& out_dir) {
  const ErpGrid grid{height, width};
  grid.validate();
  const ScalarMap map = latitude_weight_map(grid);
  ensure_directory(out_dir);
  write_png_gray16(join(out_dir, "weightmap.png"), map);
  std::ostringstream csv;
  csv << "row,weight\n";
  const std::vector<double> rows = latitude_weight_rows(height);
  for (int v = 0; v < height; ++v) {
    char line[64];
    std::snprintf(line, sizeof(line), "%d,%.6f\n", v, rows[static_cast<std::size_t>(v)]);
    csv << line;
  }
  write_text_file(join(out_dir, "weightmap.csv"), csv.str());
  return kExitOk;
}

RasterImage face_image(const CubeMap& cube, CubeFace face) {
  return RasterImage{cube.face_size, cube.face_size, cube.channels,
                     cube.faces[static_cast<std::size_t>(face)]};
}

std::string format_psnr(double value) {
  if (std::isinf(value)) return "inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

int cmd_cubemap_forward(const std::string& in_path, int face_size, const std::string& out_dir) {
  const ErpImage erp = read_png_image(in_path);
  const CubeMap cube = erp_to_cubemap(erp, face_size);
  ensure_directory(out_dir);
  const std::string stem = fs::path(in_path).stem().string();
  for (int f = 0; f < 6; ++f) {
    const std::string name = stem + std::string(kCubeFaceSuffixes[static_cast<std::size_t>(f)]);
    write_png_raster(join(out_dir, name + ".png"), face_image(cube, static_cast<CubeFace>(f)), 8);
  }
  return kExitOk;
}

int cmd_cubemap_reverse(const std::vector<std::string>& faces, int height,
                        const std::string& out_path) {
  if (faces.size() != 6) {
    throw ConfigError("reverse needs exactly 6 faces in the order F B L R U D, got " +
                      std::to_string(faces.size()));
  }
  CubeMap cube;
  for (std::size_t f = 0; f < 6; ++f) {
    RasterImage face = read_png_raster(faces[f]);
    if (face.height != face.width) throw InputError("face '" + faces[f] + "' is not square");
    if (f == 0) {
      cube.face_size = face.height;
      cube.channels = face.channels;
    } else if (face.height != cube.face_size || face.channels != cube.channels) {
      throw InputError("face '" + faces[f] + "' differs in size or channels");
    }
    cube.faces[f] = std::move(face.values);
  }
  const ErpGrid grid = ErpGrid::from_height(height);
  grid.validate();
  write_png_image(out_path, cubemap_to_erp(cube, grid), 8);
  return kExitOk;
}

int cmd_cubemap_roundtrip(const std::string& in_path, int face_size) {
  const ErpImage erp = read_png_image(in_path);
  const ErpImage back = cubemap_to_erp(erp_to_cubemap(erp, face_size), erp.grid());
  std::cout << "psnr_db: " << format_psnr(psnr(erp, back)) << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& pred_path, const std::string& gt_path,
                const std::string& mask_path, const EvalConfig& eval,
                const std::string& json_path) {
  const DepthMap pred = read_pfm_depth(pred_path);
  const DepthMap gt = read_pfm_depth(gt_path);
  if (!(pred.grid == gt.grid)) throw ConfigError("prediction and ground truth differ in size");
  const Mask mask = mask_path.empty() ? Mask(gt.grid.height, gt.grid.width, 1)
                                      : load_mask(mask_path, gt.grid);
  const DepthMetrics m = compute_metrics(pred, gt, mask, eval);
  const std::string text = metrics_to_json(m);
  std::cout << text << "\n" << metrics_table(m);
  if (!json_path.empty()) write_text_file(json_path, text + "\n");
  return kExitOk;
}

json metrics_json(const DepthMetrics& m) { return json::parse(metrics_to_json(m)); }

json pose_report(const Pose& pose) { return pose_to_json(pose); }

void write_refine_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                          const RefineReport& report, const DepthMap& gt, const char* status,
                          std::optional<std::size_t> diverged_at) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["status"] = status;
  if (diverged_at) j["diverged_at_iteration"] = *diverged_at;
  j["config"] = refine_config_to_json(cfg.refine);
  j["initial_depth"] = cfg.initial_depth;
  j["iterations_completed"] =
      report.loss_trajectory.empty() ? 0 : report.loss_trajectory.size() - 1;
  j["loss_trajectory"] = report.loss_trajectory;
  j["halvings"] = report.halvings;
  j["stalled_iterations"] = report.stalled_iterations;
  j["evaluation_pixels"] = report.evaluation_pixels;
  j["initial_metrics"] = metrics_json(report.initial_metrics);
  if (!diverged_at) {
    j["final_metrics"] = metrics_json(report.final_metrics);
    j["rotation_error_deg"] = report.rotation_error_deg;
    j["translation_error_m"] = report.translation_error_m;
    j["final_pose"] = pose_report(report.final_pose);
  }
  j["final_objective"] = {
      {"loss", report.final_objective.loss},
      {"photometric", report.final_objective.photometric},
      {"smoothness", report.final_objective.smoothness},
      {"automask_applied", report.final_objective.automask_applied},
      {"automask_kept_fraction", report.final_objective.automask_kept_fraction},
      {"automask_kept_fraction_poles", report.final_objective.automask_kept_fraction_poles},
  };
  write_text_file(join(out_dir, "report.json"), j.dump(2) + "\n");

  std::ostringstream csv;
  csv << "iteration,loss\n";
  for (std::size_t i = 0; i < report.loss_trajectory.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu,%.12g\n", i, report.loss_trajectory[i]);
    csv << line;
  }
  write_text_file(join(out_dir, "loss.csv"), csv.str());

  if (report.final_depth.grid.height > 0) {
    write_pfm(join(out_dir, "depth.pfm"), report.final_depth);
    // Relative error, 0.25 and above saturates to white.
    ErpImage error(gt.grid, 1, 0.0);
    for (int v = 0; v < gt.grid.height; ++v) {
      for (int u = 0; u < gt.grid.width; ++u) {
        const double d = report.final_depth.values(v, u);
        const double g = gt.values(v, u);
        const double rel = std::isfinite(d) ? std::abs(d - g) / g : 1.0;
        error(v, u, 0) = std::min(1.0, rel / 0.25);
      }
    }
    write_png_image(join(out_dir, "depth_error.png"), error, 8);
  }
}

int cmd_refine(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  if (!cfg.pair) throw ConfigError("refine needs a 'pair' block");
  const auto [target, source] =
      render_pair(cfg.scene, cfg.pair->target_pose, cfg.pair->relative_pose, cfg.grid);
  const Pose initial_pose = cfg.initial_pose.value_or(cfg.pair->relative_pose);
  const DepthMap initial(cfg.grid, cfg.initial_depth);
  ensure_directory(out_dir);
  try {
    const RefineReport report = refine(initial, initial_pose, target.image, source.image,
                                       target.depth, cfg.pair->relative_pose, cfg.refine);
    write_refine_outputs(out_dir, cfg, report, target.depth, "completed", std::nullopt);
    std::cout << "abs_rel " << report.initial_metrics.abs_rel << " -> "
              << report.final_metrics.abs_rel << "\n"
              << metrics_table(report.final_metrics);
  } catch (const RefineDivergedError& e) {
    write_refine_outputs(out_dir, cfg, e.partial_report(), target.depth, "diverged",
                         e.iteration());
    throw;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equirectangular depth toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads for per-pixel loops")
      ->check(CLI::NonNegativeNumber);

  std::string config_path, out_dir;

  auto* synth = app.add_subcommand("synth", "Render views of a synthetic box room");
  synth->add_option("--config", config_path, "Experiment JSON")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  std::string source_path, depth_path, pose_path;
  auto* warp = app.add_subcommand("warp", "Inverse-warp a source view into the target view");
  warp->add_option("--source", source_path, "Source image PNG")->required();
  warp->add_option("--depth", depth_path, "Target depth PFM")->required();
  warp->add_option("--pose", pose_path, "Target-to-source pose JSON")->required();
  warp->add_option("--out", out_dir, "Output directory")->required();

  int height = 0, width = 0;
  auto* weightmap = app.add_subcommand("weightmap", "Latitude weight map");
  weightmap->add_option("--height", height, "Rows")->required()->check(CLI::PositiveNumber);
  weightmap->add_option("--width", width, "Columns (must be 2 x height)")
      ->required()
      ->check(CLI::PositiveNumber);
  weightmap->add_option("--out", out_dir, "Output directory")->required();

  std::string in_path, out_path;
  int face_size = 0;
  bool reverse = false, roundtrip = false;
  std::vector<std::string> faces;
  auto* cubemap = app.add_subcommand("cubemap", "ERP to cube faces and back");
  cubemap->add_option("--in", in_path, "ERP PNG (forward, roundtrip)");
  cubemap->add_option("--face-size", face_size, "Face edge in pixels");
  cubemap->add_option("--out", out_path, "Output directory (forward) or ERP PNG (reverse)");
  cubemap->add_flag("--reverse", reverse, "Assemble an ERP image from six faces");
  cubemap->add_flag("--roundtrip", roundtrip, "Report ERP -> faces -> ERP PSNR");
  cubemap->add_option("--faces", faces, "Face PNGs in the order F B L R U D");
  cubemap->add_option("--height", height, "ERP rows for --reverse");

  std::string pred_path, gt_path, mask_path, json_path;
  EvalConfig eval;
  bool median_scale = false;
  auto* metrics = app.add_subcommand("metrics", "Depth error metrics");
  metrics->add_option("--pred", pred_path, "Predicted depth PFM")->required();
  metrics->add_option("--gt", gt_path, "Ground-truth depth PFM")->required();
  metrics->add_option("--mask", mask_path, "Evaluation mask PNG (nonzero = evaluated)");
  metrics->add_option("--max-depth", eval.max_depth, "Upper depth cap")->capture_default_str();
  metrics->add_option("--min-depth", eval.min_depth, "Lower depth cap")->capture_default_str();
  metrics->add_flag("--median-scale", median_scale, "Median-ratio scale the prediction");
  metrics->add_option("--json", json_path, "Also write the JSON to this file");

  auto* refine_cmd = app.add_subcommand("refine", "Refine depth on a synthetic pair");
  refine_cmd->add_option("--config", config_path, "Experiment JSON")->required();
  refine_cmd->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (synth->parsed()) return cmd_synth(config_path, out_dir);
    if (warp->parsed()) return cmd_warp(source_path, depth_path, pose_path, out_dir);
    if (weightmap->parsed()) return cmd_weightmap(height, width, out_dir);
    if (cubemap->parsed()) {
      if (reverse && roundtrip) throw ConfigError("--reverse and --roundtrip are exclusive");
      if (reverse) {
        if (out_path.empty() || height <= 0) {
          throw ConfigError("--reverse needs --faces, --height and --out");
        }
        return cmd_cubemap_reverse(faces, height, out_path);
      }
      if (in_path.empty() || face_size <= 0) throw ConfigError("--in and --face-size required");
      if (roundtrip) return cmd_cubemap_roundtrip(in_path, face_size);
      if (out_path.empty()) throw ConfigError("--out required");
      return cmd_cubemap_forward(in_path, face_size, out_path);
    }
    if (metrics->parsed()) {
      eval.scaling = median_scale ? DepthScaling::kMedianRatio : DepthScaling::kNone;
      return cmd_metrics(pred_path, gt_path, mask_path, eval, json_path);
    }
    if (refine_cmd->parsed()) return cmd_refine(config_path, out_dir);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const EvaluationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEvaluation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
