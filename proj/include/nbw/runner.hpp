#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nbw/config.hpp"

namespace nbw {

inline constexpr const char* kVersion = "1.0.0";

/// Rectangular table written as CSV with a leading "# config_hash=<h>" line.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double x);

void write_csv(const std::string& path, const std::string& hash, const Table& table);

/// Trial records persisted to a CSV file tagged with the config hash. A file
/// written for another config is ignored.
class FileTrialStore : public TrialStore {
 public:
  FileTrialStore(std::string path, std::string hash);
  std::optional<std::vector<double>> load(std::size_t trial) override;
  void save(std::size_t trial, const std::vector<double>& record) override;
  std::size_t loaded() const { return records_.size(); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string hash_;
  std::map<std::size_t, std::vector<double>> records_;
};

struct SelfTestCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Fast invariant suite covering every module.
std::vector<SelfTestCheck> run_selftest(std::size_t workers);

struct RunSummary {
  nlohmann::json summary;              ///< contents of summary.json
  std::vector<std::string> warnings;
  std::vector<std::string> files;      ///< artifact paths written
  bool ok = true;                      ///< false only when a selftest check fails
};

/// Executes the configured experiment and writes raw.csv, aggregate.csv,
/// summary.json, warnings.json, report.txt and plot_*.csv into the output
/// directory. Completed trials are checkpointed and reused on rerun.
RunSummary run_experiment(const ExperimentConfig& cfg, std::size_t workers, std::ostream* log = nullptr);

/// Dry-run plan: matrix dimensions, trial counts and warnings, no solves.
std::string describe(const ExperimentConfig& cfg);

}  // namespace nbw
