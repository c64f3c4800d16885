#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "festoon/estimators.hpp"

namespace festoon {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;       // bad flags / config file
inline constexpr int kExitDegeneracy = 3;   // failed-replicate budget exceeded
inline constexpr int kExitTruncation = 4;   // truncation audit failed

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kSchemaVersion = "1";

// Effective run configuration. Every field has a deterministic default
// except the master seed, which the caller must set explicitly: runs are
// reproducible by construction, never time-seeded.
struct RunConfig {
  std::string command;  // simulate | limit-model | estimate | diagnostics | report

  int dim = 2;
  Index n = 0;              // binomial sample size (with --binomial)
  bool binomial = false;    // binomial(n) input instead of Poisson(lambda)
  double lambda = 1e6;
  std::vector<double> grid;  // sweep grid; empty = single point from n/lambda
  Index reps = 0;            // 0 = per-command default
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 1;

  std::vector<double> window_lengths{4, 8, 16, 32};
  double h_max = 6.0;
  std::string route = "all";       // estimate: all | direct | limit | window
  std::string functional = "f0";   // f0 f1 f2 | volume | v1 v2
  int k = 0;                       // face dimension for score-type commands
  double failure_budget = 0.01;    // tolerated failed-replicate fraction
  std::string out_dir = ".";
  std::string config_path;         // optional JSON config file (flags win)
};

// Reads a JSON config file into cfg (only keys present in the file are
// touched; unknown keys raise ConfigError). Flag values parsed afterwards
// override file values.
void load_config_file(const std::string& path, RunConfig& cfg);

// Canonical one-line JSON rendering of the effective configuration.
std::string config_json(const RunConfig& cfg);

// FNV-1a 64-bit hash (used to stamp outputs with their configuration).
std::uint64_t fnv1a_hash(const std::string& s);

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// %.17g rendering: doubles survive a write/read round trip exactly.
std::string format_double(double x);

// Writes name.csv under dir, then reads it back and verifies an exact
// round trip (column names, row count, bitwise-equal values). Returns the
// written path.
std::string write_csv(const Table& table, const std::string& dir);
Table read_csv(const std::string& path);

// Collected outputs of one command: tables already written to disk plus
// scalar summaries for the sidecar.
struct ReportBundle {
  std::vector<std::pair<std::string, std::string>> written;  // (table, path)
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> notes;
};

// Writes <out_dir>/<command>_run.json: schema/tool versions, the effective
// configuration and its hash, written tables, scalar summaries, and a UTC
// timestamp (timestamps live only here so CSVs stay byte-stable per seed).
std::string write_sidecar(const RunConfig& cfg, const ReportBundle& bundle);

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

// Validates shared fields (seed set, dim, reps, budget); throws ConfigError.
void validate_config(const RunConfig& cfg);

// Dispatches cfg.command, writes outputs under cfg.out_dir, prints progress
// and a summary to out, and returns a process exit code.
int run_command(const RunConfig& cfg, std::ostream& out);

}  // namespace festoon
