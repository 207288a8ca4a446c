#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cao/error.hpp"

namespace cao {

// Every module default in one declarative place. The config file is flat
// "key = value" text with '#' comments; CLI flags override file values.
struct PipelineConfig {
  int block = 11;                 // adaptive threshold neighborhood (odd)
  double c = 2.0;                 // threshold offset
  double epsilon_c = 0.0;         // fiducial cluster linkage; 0 = 1% of bbox diagonal
  int tau = 60;                   // char threshold, 0..255
  double clearance = 1.0;         // mm
  double depth_increment = 4.0;   // mm
  double step_ds = 0.5;           // mm
  double margin_mm = 2.0;         // mm
  bool background_votes = true;
  std::string advance_mode = "lateral";  // lateral | deepen (deepen unimplemented)
  int threads = 1;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (block < 3 || block % 2 == 0) fail("block must be odd and >= 3");
    if (tau < 0 || tau > 255) fail("tau must be in [0, 255]");
    if (clearance < 0.0) fail("clearance must be >= 0");
    if (depth_increment <= 0.0) fail("depth-increment must be > 0");
    if (step_ds <= 0.0) fail("step-ds must be > 0");
    if (margin_mm < 0.0) fail("margin-mm must be >= 0");
    if (epsilon_c < 0.0) fail("epsilon-c must be >= 0");
    if (threads < 1) fail("threads must be >= 1");
    if (advance_mode == "deepen")
      fail("advance-mode=deepen is not implemented; use lateral");
    if (advance_mode != "lateral") fail("advance-mode must be lateral");
  }

  // Canonical rendering, used for logging and the config hash.
  std::string to_string() const {
    std::ostringstream out;
    out.precision(17);
    out << "advance-mode = " << advance_mode << "\n"
        << "background-votes = " << (background_votes ? "on" : "off") << "\n"
        << "block = " << block << "\n"
        << "c = " << c << "\n"
        << "clearance = " << clearance << "\n"
        << "depth-increment = " << depth_increment << "\n"
        << "epsilon-c = " << epsilon_c << "\n"
        << "margin-mm = " << margin_mm << "\n"
        << "step-ds = " << step_ds << "\n"
        << "tau = " << tau << "\n"
        << "threads = " << threads << "\n";
    return out.str();
  }
};

inline std::uint64_t config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (char ch : cfg.to_string()) {
    h ^= static_cast<std::uint8_t>(ch);
    h *= 0x100000001b3ull;
  }
  return h;
}

inline PipelineConfig load_config(const std::filesystem::path& path,
                                  PipelineConfig base = {}) {
  if (!std::filesystem::exists(path))
    throw Error(ErrorCode::MissingFile, "missing config file: " + path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    try {
      if (key == "block") base.block = std::stoi(value);
      else if (key == "c") base.c = std::stod(value);
      else if (key == "epsilon-c") base.epsilon_c = std::stod(value);
      else if (key == "tau") base.tau = std::stoi(value);
      else if (key == "clearance") base.clearance = std::stod(value);
      else if (key == "depth-increment") base.depth_increment = std::stod(value);
      else if (key == "step-ds") base.step_ds = std::stod(value);
      else if (key == "margin-mm") base.margin_mm = std::stod(value);
      else if (key == "background-votes") {
        if (value == "on") base.background_votes = true;
        else if (value == "off") base.background_votes = false;
        else throw Error(ErrorCode::InvalidConfig, "background-votes must be on|off");
      }
      else if (key == "advance-mode") base.advance_mode = value;
      else if (key == "threads") base.threads = std::stoi(value);
      else
        throw Error(ErrorCode::InvalidConfig,
                    path.string() + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": bad value for '" + key + "'");
    }
  }
  base.validate();
  return base;
}

}  // namespace cao
