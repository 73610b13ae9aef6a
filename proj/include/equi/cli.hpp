#pragma once

// Command-line front end: subalg | dioph | heights | count | flow | linnik.
//
// A run is described by one JSON object (ExperimentConfig); command-line flags override
// fields of it. Every artifact written carries the FNV-1a hash of the final config.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace equi {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInvariant = 2;

/// Malformed config or flags.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  nlohmann::json doc;                  // full config, defaults filled in
  std::filesystem::path base_dir = "."; // relative paths in the config resolve here first

  std::string subcommand() const { return doc.at("subcommand").get<std::string>(); }
  std::filesystem::path output() const { return doc.at("output").get<std::string>(); }
  std::uint64_t seed() const { return doc.at("seed").get<std::uint64_t>(); }
  unsigned threads() const { return doc.at("threads").get<unsigned>(); }
  const nlohmann::json& section() const { return doc.at(subcommand()); }
};

/// Fills defaults for the subcommand and checks types and ranges; throws UsageError.
ExperimentConfig validate_config(nlohmann::json doc, const std::filesystem::path& base_dir = ".");

/// 64-bit FNV-1a of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);
/// Rounds every floating value to 12 significant digits.
nlohmann::json round_floats(const nlohmann::json& doc);

/// Runs a validated config and writes its artifacts. Throws InvariantViolation when a
/// checked invariant fails (after the artifacts are written).
void run(const ExperimentConfig& config, std::ostream& log);

/// Parses argv, runs, and maps the outcome to an exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace equi
