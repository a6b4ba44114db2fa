#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpdepth/pose.hpp"
#include "erpdepth/refine.hpp"
#include "erpdepth/sphere_geometry.hpp"
#include "erpdepth/synthetic_scene.hpp"

namespace erpdepth {

inline constexpr int kSchemaVersion = 1;

struct ViewConfig {
  std::string name;
  Pose pose;  // world -> camera
};

struct PairConfig {
  Pose target_pose;    // world -> target camera
  Pose relative_pose;  // target -> source
};

// Parsed experiment document. Every object level rejects unknown keys and
// the top level requires "schema_version": 1.
//
//   {
//     "schema_version": 1,
//     "grid": {"height": 64},
//     "scene": {"preset": "textured_room", "half_extents": [1, 1, 1],
//               "walls": [{"kind": "plaid", "frequency": [3, 3],
//                          "phase": [0, 0], "color_a": [...],
//                          "color_b": [...]}, ...]},
//     "views": [{"name": "center", "pose": {...}}],
//     "pair": {"target_pose": {...}, "relative_pose": {...}},
//     "output": {"bit_depth": 8},
//     "loss": {"alpha": 0.85, "lambda_sm": 0.1, ...},
//     "depth_range": {"min_depth": 0.1, "max_depth": 100},
//     "eval": {"min_depth": 0.1, "max_depth": 80, "median_scale": false},
//     "refine": {"iterations": 300, "step_size": 2.0, "scales": [0, 1, 2, 3],
//                "initial_depth": 2.0, ...}
//   }
struct ExperimentConfig {
  ErpGrid grid = ErpGrid::from_height(64);
  BoxScene scene = BoxScene::textured_room(Eigen::Vector3d::Ones());
  std::vector<ViewConfig> views;
  std::optional<PairConfig> pair;
  int bit_depth = 8;
  RefineConfig refine;
  double initial_depth = 2.0;
  // Starting pose for refinement; the pair's relative pose when absent.
  std::optional<Pose> initial_pose;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& document);
// Adds InputError for unreadable files and parse errors (with location).
ExperimentConfig load_experiment_config(const std::string& path);

nlohmann::json refine_config_to_json(const RefineConfig& config);

}  // namespace erpdepth
