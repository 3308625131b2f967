#include "g2p/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <thread>

#include "g2p/errors.hpp"
#include "g2p/scene_io.hpp"

namespace g2p::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view value) {
  const std::string text(value);
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ValidationError(std::string(key) + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return v;
}

}  // namespace

std::set<Label> parse_label_list(std::string_view text) {
  std::set<Label> out;
  text = trim(text);
  if (text.empty() || text == "none") return out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    const auto v = parse_count("label list", item);
    if (v >= kNoLabel) throw ValidationError("label " + std::to_string(v) + " out of range");
    out.insert(static_cast<Label>(v));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

void apply_config_text(std::string_view text, PipelineConfig& cfg, std::string_view source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ValidationError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "r_match") {
        cfg.r_match = parse_double(key, value);
      } else if (key == "k") {
        cfg.k = parse_count(key, value);
      } else if (key == "r_sem") {
        cfg.r_sem = parse_double(key, value);
      } else if (key == "eta") {
        cfg.eta = parse_double(key, value);
      } else if (key == "background_ids") {
        cfg.background_ids = parse_label_list(value);
      } else if (key == "lambda_b") {
        cfg.lambda_b = parse_double(key, value);
      } else if (key == "lambda_d") {
        cfg.lambda_d = parse_double(key, value);
      } else if (key == "eps_sigma") {
        cfg.eps_sigma = parse_double(key, value);
      } else if (key == "distance_metric") {
        cfg.distance_metric = parse_distance_metric(value);
      } else {
        throw ValidationError("unknown key '" + std::string(key) + "'");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
}

void apply_config_file(const std::filesystem::path& path, PipelineConfig& cfg) {
  const auto bytes = read_file(path);
  const std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  apply_config_text(text, cfg, path.string());
}

std::size_t default_threads() {
  if (const char* env = std::getenv("G2P_THREADS"); env != nullptr && *env != '\0') {
    std::size_t v = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size() && v > 0) return v;
    throw ValidationError("G2P_THREADS must be a positive integer, got '" + std::string(text) + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace g2p::cli
