#include "erpdepth/config.hpp"

#include <algorithm>
#include <initializer_list>
#include <string_view>

#include "erpdepth/errors.hpp"
#include "erpdepth/image_io.hpp"

namespace erpdepth {
namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<std::string_view> allowed) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <typename T>
void read_if(const json& j, const std::string& key, const std::string& where, T& out) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

Eigen::Vector3d vec3(const json& j, const std::string& key, const std::string& where) {
  const auto v = get<std::vector<double>>(j, key, where);
  if (v.size() != 3) throw ConfigError(where + "." + key + " must have 3 entries");
  return {v[0], v[1], v[2]};
}

Pose pose_field(const json& j, const std::string& key, const std::string& where) {
  try {
    return pose_from_json(j.at(key));
  } catch (const InputError& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

WallTexture parse_wall(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "frequency", "phase", "color_a", "color_b"});
  WallTexture w;
  const std::string kind = j.contains("kind") ? get<std::string>(j, "kind", where) : "plaid";
  if (kind == "plaid") {
    w.kind = TextureKind::kPlaid;
  } else if (kind == "checker") {
    w.kind = TextureKind::kChecker;
  } else if (kind == "flat") {
    w.kind = TextureKind::kFlat;
  } else {
    throw ConfigError(where + ".kind must be plaid, checker or flat");
  }
  if (j.contains("frequency")) {
    const auto f = get<std::vector<double>>(j, "frequency", where);
    if (f.size() != 2) throw ConfigError(where + ".frequency must have 2 entries");
    w.frequency_s = f[0];
    w.frequency_t = f[1];
  }
  if (j.contains("phase")) {
    const auto p = get<std::vector<double>>(j, "phase", where);
    if (p.size() != 2) throw ConfigError(where + ".phase must have 2 entries");
    w.phase_s = p[0];
    w.phase_t = p[1];
  }
  if (j.contains("color_a")) w.color_a = vec3(j, "color_a", where);
  if (j.contains("color_b")) w.color_b = vec3(j, "color_b", where);
  return w;
}

BoxScene parse_scene(const json& j) {
  const std::string where = "scene";
  check_keys(j, where, {"preset", "half_extents", "walls"});
  const Eigen::Vector3d half =
      j.contains("half_extents") ? vec3(j, "half_extents", where) : Eigen::Vector3d::Ones();
  const std::string preset =
      j.contains("preset") ? get<std::string>(j, "preset", where) : "textured_room";
  BoxScene scene;
  if (preset == "textured_room") {
    scene = BoxScene::textured_room(half);
  } else if (preset == "textureless_ceiling") {
    scene = BoxScene::textureless_ceiling(half);
  } else {
    throw ConfigError("scene.preset must be textured_room or textureless_ceiling");
  }
  if (j.contains("walls")) {
    const json& walls = j.at("walls");
    if (!walls.is_array() || walls.size() != 6) {
      throw ConfigError("scene.walls must list 6 walls (+x, -x, +y, -y, +z, -z)");
    }
    for (std::size_t i = 0; i < 6; ++i) {
      scene.walls[i] = parse_wall(walls[i], "scene.walls[" + std::to_string(i) + "]");
    }
  }
  scene.validate();
  return scene;
}

void parse_refine(const json& j, ExperimentConfig& cfg) {
  const std::string where = "refine";
  check_keys(j, where,
             {"iterations", "step_size", "pose_step_size", "optimize_pose", "scales",
              "gradient_mode", "finite_difference_step", "max_halvings", "texture_threshold",
              "initial_depth", "initial_pose"});
  RefineConfig& r = cfg.refine;
  if (j.contains("iterations")) {
    const long long it = get<long long>(j, "iterations", where);
    if (it < 0) throw ConfigError("refine.iterations must be nonnegative");
    r.iterations = static_cast<std::size_t>(it);
  }
  read_if(j, "step_size", where, r.step_size);
  read_if(j, "pose_step_size", where, r.pose_step_size);
  read_if(j, "optimize_pose", where, r.optimize_pose);
  read_if(j, "scales", where, r.scales);
  if (j.contains("gradient_mode")) {
    const auto mode = get<std::string>(j, "gradient_mode", where);
    if (mode == "analytic") {
      r.gradient_mode = GradientMode::kAnalytic;
    } else if (mode == "finite_difference") {
      r.gradient_mode = GradientMode::kFiniteDifference;
    } else {
      throw ConfigError("refine.gradient_mode must be analytic or finite_difference");
    }
  }
  read_if(j, "finite_difference_step", where, r.finite_difference_step);
  read_if(j, "max_halvings", where, r.max_halvings);
  read_if(j, "texture_threshold", where, r.texture_threshold);
  read_if(j, "initial_depth", where, cfg.initial_depth);
  if (j.contains("initial_pose")) cfg.initial_pose = pose_field(j, "initial_pose", where);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& document) {
  check_keys(document, "config",
             {"schema_version", "grid", "scene", "views", "pair", "output", "loss",
              "depth_range", "eval", "refine"});
  if (!document.contains("schema_version")) throw ConfigError("missing schema_version");
  const int version = get<int>(document, "schema_version", "config");
  if (version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }

  ExperimentConfig cfg;
  if (document.contains("grid")) {
    const json& g = document.at("grid");
    check_keys(g, "grid", {"height", "width"});
    const int height = get<int>(g, "height", "grid");
    const int width = g.contains("width") ? get<int>(g, "width", "grid") : 2 * height;
    cfg.grid = ErpGrid{height, width};
    try {
      cfg.grid.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("grid: ") + e.what());
    }
  }
  if (document.contains("scene")) cfg.scene = parse_scene(document.at("scene"));

  if (document.contains("views")) {
    const json& views = document.at("views");
    if (!views.is_array()) throw ConfigError("views must be an array");
    for (std::size_t i = 0; i < views.size(); ++i) {
      const std::string where = "views[" + std::to_string(i) + "]";
      check_keys(views[i], where, {"name", "pose"});
      ViewConfig view;
      view.name = get<std::string>(views[i], "name", where);
      if (view.name.empty() || view.name.find('/') != std::string::npos) {
        throw ConfigError(where + ".name must be a nonempty file stem");
      }
      view.pose = views[i].contains("pose") ? pose_field(views[i], "pose", where) : Pose{};
      cfg.views.push_back(std::move(view));
    }
  }
  if (document.contains("pair")) {
    const json& p = document.at("pair");
    check_keys(p, "pair", {"target_pose", "relative_pose"});
    PairConfig pair;
    if (p.contains("target_pose")) pair.target_pose = pose_field(p, "target_pose", "pair");
    pair.relative_pose = pose_field(p, "relative_pose", "pair");
    cfg.pair = pair;
  }
  if (document.contains("output")) {
    const json& o = document.at("output");
    check_keys(o, "output", {"bit_depth"});
    read_if(o, "bit_depth", "output", cfg.bit_depth);
    if (cfg.bit_depth != 8 && cfg.bit_depth != 16) {
      throw ConfigError("output.bit_depth must be 8 or 16");
    }
  }
  if (document.contains("loss")) {
    const json& l = document.at("loss");
    check_keys(l, "loss", {"alpha", "lambda_pose", "lambda_sm", "lambda_exp"});
    read_if(l, "alpha", "loss", cfg.refine.loss.alpha);
    read_if(l, "lambda_pose", "loss", cfg.refine.loss.lambda_pose);
    read_if(l, "lambda_sm", "loss", cfg.refine.loss.lambda_sm);
    read_if(l, "lambda_exp", "loss", cfg.refine.loss.lambda_exp);
  }
  if (document.contains("depth_range")) {
    const json& d = document.at("depth_range");
    check_keys(d, "depth_range", {"min_depth", "max_depth"});
    double lo = cfg.refine.mapping.min_depth;
    double hi = cfg.refine.mapping.max_depth;
    read_if(d, "min_depth", "depth_range", lo);
    read_if(d, "max_depth", "depth_range", hi);
    cfg.refine.mapping = DepthMapping::from_range(lo, hi);
  }
  if (document.contains("eval")) {
    const json& e = document.at("eval");
    check_keys(e, "eval", {"min_depth", "max_depth", "median_scale"});
    read_if(e, "min_depth", "eval", cfg.refine.eval.min_depth);
    read_if(e, "max_depth", "eval", cfg.refine.eval.max_depth);
    bool median = false;
    read_if(e, "median_scale", "eval", median);
    cfg.refine.eval.scaling = median ? DepthScaling::kMedianRatio : DepthScaling::kNone;
  }
  if (document.contains("refine")) parse_refine(document.at("refine"), cfg);
  cfg.refine.validate();
  if (!(cfg.initial_depth > 0.0)) throw ConfigError("refine.initial_depth must be positive");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_json_file(path));
}

nlohmann::json refine_config_to_json(const RefineConfig& c) {
  return json{
      {"iterations", c.iterations},
      {"step_size", c.step_size},
      {"pose_step_size", c.pose_step_size},
      {"optimize_pose", c.optimize_pose},
      {"scales", c.scales},
      {"gradient_mode",
       c.gradient_mode == GradientMode::kAnalytic ? "analytic" : "finite_difference"},
      {"finite_difference_step", c.finite_difference_step},
      {"max_halvings", c.max_halvings},
      {"texture_threshold", c.texture_threshold},
      {"loss",
       {{"alpha", c.loss.alpha},
        {"lambda_pose", c.loss.lambda_pose},
        {"lambda_sm", c.loss.lambda_sm},
        {"lambda_exp", c.loss.lambda_exp}}},
      {"depth_range", {{"min_depth", c.mapping.min_depth}, {"max_depth", c.mapping.max_depth}}},
      {"eval",
       {{"min_depth", c.eval.min_depth},
        {"max_depth", c.eval.max_depth},
        {"median_scale", c.eval.scaling == DepthScaling::kMedianRatio}}},
  };
}

}  // namespace erpdepth
