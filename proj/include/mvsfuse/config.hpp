#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvsfuse/evalbench.hpp"
#include "mvsfuse/scene_synth.hpp"

namespace mvsfuse {

// Declarative run configuration. Parsing is strict: unknown keys are
// rejected, every default is materialized, and the resolved document is
// echoed next to the outputs.
struct RunConfig {
  std::uint64_t seed = 1;
  enum class SeedSource { Default, Env, File, Flag };
  SeedSource seed_source = SeedSource::Default;

  PipelineConfig pipeline;

  struct Prior {
    enum class Source { Synth, File };
    Source source = Source::Synth;
    double scale = 1.2;
    double smooth_err_amp = 0.02;
    double smooth_err_scale = 24.0;
  } prior;

  NoiseSpec noise;         // seed 0 = follow the top-level seed
  bool noise_seed_set = false;

  std::optional<std::string> output_dir;
  std::optional<nlohmann::json> scene;  // raw scene block, parsed on demand

  static RunConfig defaults();

  // Strict parse; where names the document for error messages.
  static RunConfig from_json(const nlohmann::json& j,
                             const std::string& where = "config");

  // Fully resolved document (defaults merged, seeds resolved).
  nlohmann::json to_json() const;

  // Effective per-run noise seed.
  std::uint64_t noise_seed() const {
    return noise_seed_set ? noise.seed : seed;
  }
};

struct ConfigOverride {
  std::string path;   // dotted, e.g. "sweep.n_bins"
  std::string value;  // unparsed
};

// Loads a config file (or defaults when path is empty), applies dotted-path
// overrides, then the seed precedence: explicit seed flag > config file >
// MVSFUSE_SEED environment variable > 1.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<ConfigOverride>& overrides,
                          const std::optional<std::uint64_t>& seed_flag);

// Writes the resolved config as <dir>/config.resolved.
std::filesystem::path write_resolved_config(const RunConfig& config,
                                            const std::filesystem::path& dir);

// Scene description files for `gen --spec`.
SceneSpec scene_spec_from_json(const nlohmann::json& j);
SceneSpec load_scene_spec(const std::filesystem::path& path);

}  // namespace mvsfuse
