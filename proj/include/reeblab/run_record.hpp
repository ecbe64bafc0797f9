#pragma once
// Persistence and replay for CLI runs. A RunRecord snapshots what was asked
// (subcommand, fully resolved config, master seed) and what came out (the
// payload). Re-running the snapshot with one worker must reproduce the
// payload byte for byte; the record embeds referenced files (flows,
// streams) so it replays away from the original working directory.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace reeblab {

struct SchemaError : std::runtime_error {
  explicit SchemaError(std::vector<std::string> problem_list);
  std::vector<std::string> problems;  // one "field: message" per offense
};

struct RunRecord {
  std::string tool_version = "0.1.0";
  std::string subcommand;
  nlohmann::json config;  // resolved: defaults filled, files embedded
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::string config_hash;  // FNV-1a 64 of subcommand + config + seed
  nlohmann::json payload;
  double wall_seconds = 0.0;  // informational, not part of the contract
  std::string created;        // UTC stamp, informational

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RunRecord load(const std::string& path);
};

std::string fnv1a_hex(const std::string& bytes);
std::string config_hash_of(const std::string& subcommand,
                           const nlohmann::json& config, std::uint64_t seed);

// Validates, fills defaults, embeds file references. Throws SchemaError
// carrying every offending field, not just the first.
nlohmann::json resolve_config(const std::string& subcommand,
                              nlohmann::json config);

// Executes one resolved config. Deterministic in (subcommand, config,
// seed); the worker count is recorded but never changes the reduction
// order, so single-worker replay is the bit-exact reference.
nlohmann::json run_subcommand(const std::string& subcommand,
                              const nlohmann::json& config,
                              std::uint64_t seed, int workers);

// resolve + run + stamp + hash in one step
RunRecord execute_run(const std::string& subcommand, nlohmann::json config,
                      std::uint64_t seed, int workers);

// True when the payload contains a failed property check: any false value
// under a key named ok / all_ok / lower_ok / upper_ok, or a positive value
// under a key named violations.
bool payload_reports_failure(const nlohmann::json& payload);

// "rows" array rendered as CSV, alphabetical columns, each row ending with
// the config hash; empty string when the payload has no rows
std::string payload_csv(const RunRecord& rec);

// first two numeric fields of each row as gnuplot-ready columns
std::string payload_plot_data(const RunRecord& rec);

}  // namespace reeblab
