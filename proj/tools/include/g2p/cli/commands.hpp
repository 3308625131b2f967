#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "g2p/synth.hpp"
#include "g2p/types.hpp"

namespace g2p::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Gradient check tolerance used by `losses-check`.
inline constexpr double kLossCheckTolerance = 1e-4;

struct AugmentOptions {
  std::filesystem::path points;
  std::filesystem::path splats;
  std::filesystem::path out;
  std::optional<std::filesystem::path> labels;  ///< u16 sidecar
  PipelineConfig config;
  std::size_t threads = 1;
  ParseMode mode = ParseMode::kStrict;
};

struct BoundaryOptions {
  std::filesystem::path augmented;
  std::filesystem::path out;                    ///< one u8 flag byte per point
  std::optional<std::filesystem::path> labels;  ///< overrides labels stored in the cloud
  std::optional<std::filesystem::path> augmented_out;
  PipelineConfig config;
  std::size_t threads = 1;
};

struct EvalOptions {
  std::filesystem::path pred;
  std::filesystem::path truth;
  std::string taxonomy = "scannet20";  ///< scannet20, generic, or a JSON file
  std::optional<std::size_t> classes;  ///< for generic; default max label + 1
  std::optional<Label> ignore = kNoLabel;
};

struct LossesCheckOptions {
  std::uint64_t seed = 0;
  std::size_t trials = 100;
};

struct SynthOptions {
  SceneSpec spec;
  std::filesystem::path out;
};

// Each command writes its files and returns the JSON report it prints.
[[nodiscard]] Json run_augment(const AugmentOptions& opts);
[[nodiscard]] Json run_boundary(const BoundaryOptions& opts);
[[nodiscard]] Json run_eval(const EvalOptions& opts);
[[nodiscard]] Json run_losses_check(const LossesCheckOptions& opts);
[[nodiscard]] Json run_synth(const SynthOptions& opts);

/// Reads labels from a .ply point file, a .g2pa cloud, or a raw u16 file.
[[nodiscard]] std::vector<Label> read_label_source(const std::filesystem::path& path);

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace g2p::cli
