#include "mvsfuse/config.hpp"

#include <cstdlib>
#include <fstream>

#include "mvsfuse/errors.hpp"

namespace mvsfuse {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known |= it.key() == k;
    if (!known)
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double get_number(const json& j, const char* key, double fallback,
                  const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number())
    throw ConfigError(where + "." + key + ": expected a number");
  return it->get<double>();
}

int get_int(const json& j, const char* key, int fallback,
            const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer())
    throw ConfigError(where + "." + key + ": expected an integer");
  return it->get<int>();
}

std::string get_string(const json& j, const char* key,
                       const std::string& fallback, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string())
    throw ConfigError(where + "." + key + ": expected a string");
  return it->get<std::string>();
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.noise = default_noise_spec();
  c.noise.seed = 0;
  return c;
}

RunConfig RunConfig::from_json(const json& j, const std::string& where) {
  check_keys(j, where,
             {"seed", "scene", "sweep", "prior", "fusion", "noise", "eval",
              "output_dir"});
  RunConfig c = defaults();

  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer())
      throw ConfigError(where + ".seed: expected a non-negative integer");
    c.seed = it->get<std::uint64_t>();
    c.seed_source = SeedSource::File;
  }
  if (auto it = j.find("scene"); it != j.end()) c.scene = *it;
  if (auto it = j.find("output_dir"); it != j.end()) {
    if (!it->is_string())
      throw ConfigError(where + ".output_dir: expected a string");
    c.output_dir = it->get<std::string>();
  }

  if (auto it = j.find("sweep"); it != j.end()) {
    const json& s = *it;
    const std::string sw = where + ".sweep";
    check_keys(s, sw,
               {"d_min", "d_max", "n_bins", "cost", "patch_radius",
                "aggregate_radius", "temperature", "window"});
    SweepConfig& cfg = c.pipeline.sweep;
    cfg.d_min = get_number(s, "d_min", cfg.d_min, sw);
    cfg.d_max = get_number(s, "d_max", cfg.d_max, sw);
    cfg.n_bins = get_int(s, "n_bins", cfg.n_bins, sw);
    const std::string cost = get_string(s, "cost", "ssd", sw);
    if (cost == "ssd")
      cfg.cost = CostKind::SsdPatch;
    else if (cost == "ncc")
      cfg.cost = CostKind::NccPatch;
    else
      throw ConfigError(sw + ".cost: expected \"ssd\" or \"ncc\"");
    cfg.patch_radius = get_int(s, "patch_radius",
                               cfg.cost == CostKind::NccPatch ? 2 : 1, sw);
    cfg.aggregate_radius =
        get_int(s, "aggregate_radius", cfg.aggregate_radius, sw);
    cfg.window = get_int(s, "window", cfg.window, sw);
    if (auto t = s.find("temperature"); t != s.end()) {
      if (t->is_string()) {
        if (t->get<std::string>() != "auto")
          throw ConfigError(sw + ".temperature: expected \"auto\" or a number");
        cfg.temperature.reset();
      } else if (t->is_number()) {
        cfg.temperature = t->get<double>();
      } else {
        throw ConfigError(sw + ".temperature: expected \"auto\" or a number");
      }
    }
  }

  if (auto it = j.find("prior"); it != j.end()) {
    const json& p = *it;
    const std::string pw = where + ".prior";
    check_keys(p, pw,
               {"source", "scale", "smooth_err_amp", "smooth_err_scale",
                "conf_threshold"});
    const std::string source = get_string(p, "source", "synth", pw);
    if (source == "synth")
      c.prior.source = Prior::Source::Synth;
    else if (source == "file")
      c.prior.source = Prior::Source::File;
    else
      throw ConfigError(pw + ".source: expected \"synth\" or \"file\"");
    c.prior.scale = get_number(p, "scale", c.prior.scale, pw);
    c.prior.smooth_err_amp =
        get_number(p, "smooth_err_amp", c.prior.smooth_err_amp, pw);
    c.prior.smooth_err_scale =
        get_number(p, "smooth_err_scale", c.prior.smooth_err_scale, pw);
    c.pipeline.prior_conf_threshold = get_number(
        p, "conf_threshold", c.pipeline.prior_conf_threshold, pw);
  }

  if (auto it = j.find("fusion"); it != j.end()) {
    const json& f = *it;
    const std::string fw = where + ".fusion";
    check_keys(f, fw,
               {"ssim_window", "gamma", "floor", "reduce", "dynamic_threshold"});
    FusionParams& cfg = c.pipeline.fusion;
    cfg.ssim_radius = get_int(f, "ssim_window", cfg.ssim_radius, fw);
    cfg.gamma = get_number(f, "gamma", cfg.gamma, fw);
    cfg.floor = get_number(f, "floor", cfg.floor, fw);
    const std::string reduce = get_string(f, "reduce", "mean", fw);
    if (reduce == "mean")
      cfg.reduce = FusionParams::Reduce::Mean;
    else if (reduce == "min")
      cfg.reduce = FusionParams::Reduce::Min;
    else
      throw ConfigError(fw + ".reduce: expected \"mean\" or \"min\"");
    cfg.dynamic_threshold =
        get_number(f, "dynamic_threshold", cfg.dynamic_threshold, fw);
  }

  if (auto it = j.find("noise"); it != j.end()) {
    const json& n = *it;
    const std::string nw = where + ".noise";
    check_keys(n, nw, {"levels", "seed"});
    if (auto lv = n.find("levels"); lv != n.end()) {
      if (!lv->is_array() || lv->empty())
        throw ConfigError(nw + ".levels: expected a non-empty array");
      c.noise.levels.clear();
      for (const json& e : *lv) {
        try {
          if (e.is_string())
            c.noise.levels.push_back(NoiseLevel::parse(e.get<std::string>()));
          else if (e.is_number())
            c.noise.levels.push_back(NoiseLevel::coefficient(e.get<double>()));
          else
            throw InvalidRange("not a number or string");
        } catch (const InvalidRange&) {
          throw ConfigError(nw + ".levels: entries must be non-negative "
                                 "numbers or \"identity\"");
        }
      }
    }
    if (auto sd = n.find("seed"); sd != n.end()) {
      if (!sd->is_number_unsigned() && !sd->is_number_integer())
        throw ConfigError(nw + ".seed: expected a non-negative integer");
      c.noise.seed = sd->get<std::uint64_t>();
      c.noise_seed_set = true;
    }
  }

  if (auto it = j.find("eval"); it != j.end()) {
    const json& e = *it;
    const std::string ew = where + ".eval";
    check_keys(e, ew, {"min_depth", "max_depth"});
    c.pipeline.eval_min_depth =
        get_number(e, "min_depth", c.pipeline.eval_min_depth, ew);
    c.pipeline.eval_max_depth =
        get_number(e, "max_depth", c.pipeline.eval_max_depth, ew);
  }

  // Cross-field sanity.
  const SweepConfig& s = c.pipeline.sweep;
  if (!(s.d_min > 0.0) || !(s.d_max >= s.d_min))
    throw ConfigError(where + ".sweep: need 0 < d_min <= d_max");
  if (s.n_bins < 1 || s.patch_radius < 0 || s.aggregate_radius < 0 ||
      s.window < 0)
    throw ConfigError(where + ".sweep: negative or empty size parameter");
  if (!(c.prior.scale > 0.0))
    throw ConfigError(where + ".prior.scale: must be positive");
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  const SweepConfig& s = pipeline.sweep;
  j["sweep"] = {
      {"d_min", s.d_min},
      {"d_max", s.d_max},
      {"n_bins", s.n_bins},
      {"cost", s.cost == CostKind::NccPatch ? "ncc" : "ssd"},
      {"patch_radius", s.patch_radius},
      {"aggregate_radius", s.aggregate_radius},
      {"window", s.window}};
  if (s.temperature)
    j["sweep"]["temperature"] = *s.temperature;
  else
    j["sweep"]["temperature"] = "auto";
  j["prior"] = {
      {"source", prior.source == Prior::Source::File ? "file" : "synth"},
      {"scale", prior.scale},
      {"smooth_err_amp", prior.smooth_err_amp},
      {"smooth_err_scale", prior.smooth_err_scale},
      {"conf_threshold", pipeline.prior_conf_threshold}};
  const FusionParams& f = pipeline.fusion;
  j["fusion"] = {
      {"ssim_window", f.ssim_radius},
      {"gamma", f.gamma},
      {"floor", f.floor},
      {"reduce", f.reduce == FusionParams::Reduce::Min ? "min" : "mean"},
      {"dynamic_threshold", f.dynamic_threshold}};
  json levels = json::array();
  for (const NoiseLevel& l : noise.levels) {
    if (l.kind == NoiseLevel::Kind::Identity)
      levels.push_back("identity");
    else
      levels.push_back(l.delta);
  }
  j["noise"] = {{"levels", levels}, {"seed", noise_seed()}};
  j["eval"] = {{"min_depth", pipeline.eval_min_depth},
               {"max_depth", pipeline.eval_max_depth}};
  if (output_dir) j["output_dir"] = *output_dir;
  if (scene) j["scene"] = *scene;
  return j;
}

namespace {

void apply_override(json& doc, const ConfigOverride& ov) {
  std::vector<std::string> parts;
  std::string part;
  for (char ch : ov.path) {
    if (ch == '.') {
      parts.push_back(part);
      part.clear();
    } else {
      part += ch;
    }
  }
  parts.push_back(part);
  json* node = &doc;
  for (const std::string& p : parts) {
    if (!node->is_object() || !node->contains(p))
      throw ConfigError("unknown config key in override: --" + ov.path);
    node = &(*node)[p];
  }
  if (node->is_boolean()) {
    if (ov.value == "true")
      *node = true;
    else if (ov.value == "false")
      *node = false;
    else
      throw ConfigError("--" + ov.path + ": expected true or false");
    return;
  }
  if (node->is_array()) {
    json arr = json::array();
    std::string item;
    std::stringstream ss(ov.value);
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos == item.size()) {
          arr.push_back(v);
          continue;
        }
      } catch (const std::exception&) {
      }
      arr.push_back(item);
    }
    *node = arr;
    return;
  }
  if (node->is_number()) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(ov.value, &pos);
      if (pos != ov.value.size()) throw std::invalid_argument("trailing");
      if (node->is_number_integer() || node->is_number_unsigned()) {
        *node = static_cast<std::int64_t>(std::llround(v));
        if (v >= 0 && node->is_number_integer() &&
            v == std::floor(v))
          *node = static_cast<std::uint64_t>(v);
      } else {
        *node = v;
      }
      return;
    } catch (const std::exception&) {
      throw ConfigError("--" + ov.path + ": expected a number");
    }
  }
  // String-typed fields: numbers are allowed where the schema permits them
  // (e.g. temperature "auto" -> 0.1).
  try {
    std::size_t pos = 0;
    const double v = std::stod(ov.value, &pos);
    if (pos == ov.value.size()) {
      *node = v;
      return;
    }
  } catch (const std::exception&) {
  }
  *node = ov.value;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<ConfigOverride>& overrides,
                          const std::optional<std::uint64_t>& seed_flag) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
  }
  RunConfig parsed = RunConfig::from_json(doc);
  if (!overrides.empty()) {
    json resolved = parsed.to_json();
    const RunConfig::SeedSource had_seed = parsed.seed_source;
    const bool had_noise_seed = parsed.noise_seed_set;
    for (const ConfigOverride& ov : overrides) apply_override(resolved, ov);
    RunConfig next = RunConfig::from_json(resolved, "config");
    next.seed_source = had_seed;
    next.noise_seed_set = had_noise_seed;
    for (const ConfigOverride& ov : overrides) {
      if (ov.path == "seed") next.seed_source = RunConfig::SeedSource::File;
      if (ov.path == "noise.seed") next.noise_seed_set = true;
    }
    parsed = next;
  }
  if (seed_flag) {
    parsed.seed = *seed_flag;
    parsed.seed_source = RunConfig::SeedSource::Flag;
  } else if (parsed.seed_source == RunConfig::SeedSource::Default) {
    if (const char* env = std::getenv("MVSFUSE_SEED")) {
      try {
        parsed.seed = std::stoull(env);
        parsed.seed_source = RunConfig::SeedSource::Env;
      } catch (const std::exception&) {
        throw ConfigError("MVSFUSE_SEED is not a non-negative integer");
      }
    }
  }
  return parsed;
}

std::filesystem::path write_resolved_config(const RunConfig& config,
                                            const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / "config.resolved";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config.to_json().dump(2) << "\n";
  return path;
}

namespace {

Pose pose_from_scene_json(const json& j, const std::string& where) {
  check_keys(j, where, {"euler", "rotation", "translation"});
  Pose p;
  if (auto it = j.find("translation"); it != j.end()) {
    if (!it->is_array() || it->size() != 3)
      throw ConfigError(where + ".translation: expected 3 numbers");
    for (int i = 0; i < 3; ++i)
      p.translation[i] = (*it)[static_cast<std::size_t>(i)].get<double>();
  }
  const bool has_euler = j.contains("euler");
  const bool has_rot = j.contains("rotation");
  if (has_euler && has_rot)
    throw ConfigError(where + ": give either euler or rotation, not both");
  if (has_euler) {
    const json& e = j["euler"];
    if (!e.is_array() || e.size() != 3)
      throw ConfigError(where + ".euler: expected 3 numbers");
    EulerPose ep;
    for (int i = 0; i < 3; ++i)
      ep.angles[i] = e[static_cast<std::size_t>(i)].get<double>();
    ep.translation = p.translation;
    p = euler_to_pose(ep);
  } else if (has_rot) {
    const json& r = j["rotation"];
    if (!r.is_array() || r.size() != 9)
      throw ConfigError(where + ".rotation: expected 9 numbers");
    for (int row = 0; row < 3; ++row)
      for (int col = 0; col < 3; ++col)
        p.rotation(row, col) =
            r[static_cast<std::size_t>(row * 3 + col)].get<double>();
    const Eigen::Matrix3d delta =
        p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity();
    if (delta.cwiseAbs().maxCoeff() > 1e-6 || p.rotation.determinant() < 0.0)
      throw ConfigError(where + ".rotation: not SO(3)");
  }
  return p;
}

Texture texture_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "cell_size", "scale", "octaves", "value"});
  Texture t;
  const std::string kind = get_string(j, "kind", "", where);
  if (kind == "checker") {
    t.kind = Texture::Kind::Checker;
    t.cell_size = get_number(j, "cell_size", 1.0, where);
    if (!(t.cell_size > 0.0))
      throw ConfigError(where + ".cell_size: must be positive");
  } else if (kind == "value_noise") {
    t.kind = Texture::Kind::ValueNoise;
    t.scale = get_number(j, "scale", 1.0, where);
    t.octaves = get_int(j, "octaves", 3, where);
    if (!(t.scale > 0.0) || t.octaves < 1)
      throw ConfigError(where + ": malformed value_noise parameters");
  } else if (kind == "uniform") {
    t.kind = Texture::Kind::Uniform;
    t.value = get_number(j, "value", 0.5, where);
  } else {
    throw ConfigError(where +
                      ".kind: expected checker, value_noise, or uniform");
  }
  return t;
}

Primitive primitive_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "size", "pose", "texture"});
  Primitive p;
  const std::string kind = get_string(j, "kind", "", where);
  if (kind == "plane")
    p.kind = Primitive::Kind::Plane;
  else if (kind == "box")
    p.kind = Primitive::Kind::Box;
  else if (kind == "sphere")
    p.kind = Primitive::Kind::Sphere;
  else
    throw ConfigError(where + ".kind: expected plane, box, or sphere");
  if (auto it = j.find("size"); it != j.end()) {
    if (!it->is_array() || it->empty() || it->size() > 3)
      throw ConfigError(where + ".size: expected 1 to 3 numbers");
    for (std::size_t i = 0; i < it->size(); ++i)
      p.size[static_cast<int>(i)] = (*it)[i].get<double>();
    for (std::size_t i = it->size(); i < 3; ++i)
      p.size[static_cast<int>(i)] = p.size[static_cast<int>(it->size() - 1)];
  }
  if (auto it = j.find("pose"); it != j.end())
    p.pose = pose_from_scene_json(*it, where + ".pose");
  if (auto it = j.find("texture"); it != j.end())
    p.texture = texture_from_json(*it, where + ".texture");
  return p;
}

}  // namespace

SceneSpec scene_spec_from_json(const json& j) {
  check_keys(j, "scene",
             {"frames", "seed", "intrinsics", "trajectory", "primitives",
              "dynamic"});
  SceneSpec spec;
  spec.frames = get_int(j, "frames", 0, "scene");
  if (auto it = j.find("seed"); it != j.end())
    spec.seed = it->get<std::uint64_t>();
  {
    auto it = j.find("intrinsics");
    if (it == j.end()) throw ConfigError("scene.intrinsics: missing");
    check_keys(*it, "scene.intrinsics",
               {"fx", "fy", "cx", "cy", "width", "height"});
    spec.intrinsics.fx = get_number(*it, "fx", 0.0, "scene.intrinsics");
    spec.intrinsics.fy = get_number(*it, "fy", 0.0, "scene.intrinsics");
    spec.intrinsics.cx = get_number(*it, "cx", 0.0, "scene.intrinsics");
    spec.intrinsics.cy = get_number(*it, "cy", 0.0, "scene.intrinsics");
    spec.intrinsics.width = get_int(*it, "width", 0, "scene.intrinsics");
    spec.intrinsics.height = get_int(*it, "height", 0, "scene.intrinsics");
  }
  {
    auto it = j.find("trajectory");
    if (it == j.end() || !it->is_array() || it->empty())
      throw ConfigError("scene.trajectory: expected a non-empty array");
    for (std::size_t i = 0; i < it->size(); ++i)
      spec.trajectory.push_back(pose_from_scene_json(
          (*it)[i], "scene.trajectory[" + std::to_string(i) + "]"));
  }
  if (auto it = j.find("primitives"); it != j.end()) {
    if (!it->is_array())
      throw ConfigError("scene.primitives: expected an array");
    for (std::size_t i = 0; i < it->size(); ++i)
      spec.primitives.push_back(primitive_from_json(
          (*it)[i], "scene.primitives[" + std::to_string(i) + "]"));
  }
  if (auto it = j.find("dynamic"); it != j.end()) {
    check_keys(*it, "scene.dynamic", {"primitive", "velocity"});
    DynamicPrimitive dyn;
    auto pit = it->find("primitive");
    if (pit == it->end())
      throw ConfigError("scene.dynamic.primitive: missing");
    dyn.primitive = primitive_from_json(*pit, "scene.dynamic.primitive");
    if (auto vit = it->find("velocity"); vit != it->end()) {
      if (!vit->is_array() || vit->size() != 3)
        throw ConfigError("scene.dynamic.velocity: expected 3 numbers");
      for (int i = 0; i < 3; ++i)
        dyn.velocity[i] = (*vit)[static_cast<std::size_t>(i)].get<double>();
    }
    spec.dynamic = dyn;
  }
  return spec;
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scene spec is not valid JSON: " + std::string(e.what()));
  }
  if (j.contains("scene")) return scene_spec_from_json(j["scene"]);
  return scene_spec_from_json(j);
}

}  // namespace mvsfuse
