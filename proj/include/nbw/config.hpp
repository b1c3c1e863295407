#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbw/experiments.hpp"

namespace nbw {

inline constexpr int kSchemaVersion = 1;

/// Validation failure; `path()` is the dotted key path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class ExperimentKind { wegner1, wegner2, ids, ids_conv, lipschitz, ucp, delone_check, selftest };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Parameters of the experiment block; only the fields of the chosen kind are used.
struct ExperimentParams {
  ExperimentKind kind = ExperimentKind::selftest;
  std::size_t trials = 100;
  std::vector<double> volumes;
  std::vector<SpectrumWindow> windows;
  std::optional<EnergyGrid> grid;
  /// wegner2
  std::optional<TwoVolumeSpec> two_volume;
  /// ids-conv: particle count of the N-body side and cube side.
  std::size_t conv_particles = 2;
  double conv_L = 0.0;
  /// ucp
  double M_D = 1.0;
  DeloneCheckParams delone;
};

struct OutputOptions {
  std::string directory = "out";
  bool raw = true;
  bool plot = true;
};

struct ExperimentConfig {
  nlohmann::json document;  ///< normalized, with every default filled in
  std::string hash;         ///< FNV-1a of the canonical document minus the output block
  SystemSpec system;
  ExperimentParams experiment;
  OutputOptions output;
};

/// Parses and validates a schema-1 document. Unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

struct Overrides {
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

/// Applies CLI overrides to the document and re-parses, so the hash covers them.
ExperimentConfig apply_overrides(const ExperimentConfig& cfg, const Overrides& o);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace nbw
