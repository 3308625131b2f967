#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "g2p/types.hpp"

namespace g2p::cli {

/// Applies flat `key = value` lines onto `cfg`. Keys are the PipelineConfig
/// field names; '#' starts a comment. Unknown keys and bad values throw
/// ValidationError with the line number.
void apply_config_text(std::string_view text, PipelineConfig& cfg, std::string_view source = "<config>");
void apply_config_file(const std::filesystem::path& path, PipelineConfig& cfg);

/// "0,1" -> {0, 1}; empty or "none" -> {}.
[[nodiscard]] std::set<Label> parse_label_list(std::string_view text);

/// Thread count from G2P_THREADS, else the hardware concurrency (at least 1).
[[nodiscard]] std::size_t default_threads();

}  // namespace g2p::cli
