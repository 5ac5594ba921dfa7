#pragma once

#include "berrylab/adiabatic.hpp"
#include "berrylab/berry.hpp"
#include "berrylab/grid.hpp"
#include "berrylab/loop.hpp"
#include "berrylab/potential.hpp"
#include "berrylab/spectrum.hpp"
#include "berrylab/svg.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace berrylab {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { spectrum, berry, curvature, adiabatic, hannay, check };
enum class TransportMethod { translated, resolved };

std::string to_string(ExperimentKind kind);
std::string to_string(TransportMethod method);

struct BerrySettings {
  TransportMethod method = TransportMethod::translated;
  std::vector<int> levels = {0};
};

struct CurvatureSettings {
  CurvatureRegion region;
  TransportMethod method = TransportMethod::translated;
};

struct AdiabaticSettings {
  std::vector<double> Ts = {50.0, 100.0, 200.0};
  int steps = 0;
  Ramp ramp = Ramp::per_edge;
  double inner_tol = 1e-12;
  int population_checkpoints = 16;
  bool symmetrize = false;  // also run the reversed loop at the largest T
};

struct HannaySettings {
  double omega0 = 1.0;
  std::vector<double> Ts;  // empty: T = 1e4 / omega_minus
  int ensemble_side = 8;
  double action_plus = 0.5;
  double action_minus = 0.5;
  double max_phase_step = 0.05;
  Ramp ramp = Ramp::per_edge;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::berry;
  GridSpec grid;
  FluxDensity flux{0.05};
  PotentialSpec potential = GaussianWell{};
  std::string potential_file;  // set for tabulated potentials
  Vec2 offset = Vec2::Zero();  // spectrum kind
  LoopSpec loop;
  SolverConfig solver;
  BerrySettings berry;
  CurvatureSettings curvature;
  AdiabaticSettings adiabatic;
  HannaySettings hannay;
  std::string output = "out";
  std::uint64_t seed = 0x5eedb0a7d1ce5eedULL;
  int workers = 0;  // 0 = BERRYLAB_WORKERS or hardware concurrency
};

/// The published configuration schema (a JSON Schema subset).
const nlohmann::json& config_schema();
/// Every key with its default value.
nlohmann::json default_config_json();
/// Throws ValidationError naming the offending path.
void validate_against_schema(const nlohmann::json& doc, const nlohmann::json& schema);

/// Schema check, then conversion. Relative potential files resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Semantic checks beyond the schema, including the containment rule with margins.
void validate_config(const ExperimentConfig& config);

std::uint64_t fnv1a(std::string_view bytes);
/// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_digest(const ExperimentConfig& config);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;  // numbers, integers or strings
};

struct Plot {
  std::string file;  // e.g. "phase.svg"
  std::string svg;
};

struct RunRecord {
  std::string kind;
  std::string digest;
  std::string version = kVersion;
  double wall_time = 0.0;
  int exit_code = 0;
  std::string error;
  nlohmann::json payload = nlohmann::json::object();
  std::vector<std::string> warnings;
  Table table;
  std::vector<Plot> plots;
  std::vector<std::pair<std::string, double>> summary;  // headline numbers for sweeps
  std::vector<std::string> log;

  bool ok() const { return exit_code == 0; }
  nlohmann::json to_json() const;
};

/// Dispatches to the owning module. Exceptions are mapped to exit codes 2 / 3
/// and recorded, never thrown.
RunRecord run(const ExperimentConfig& config);

/// Entries run across `workers`; the result order equals the input order and
/// a failing entry does not stop the others.
std::vector<RunRecord> sweep(const std::vector<ExperimentConfig>& configs, int workers);
/// Same, parsing each entry first; a malformed entry becomes an exit-code-2 record.
std::vector<RunRecord> sweep(const std::vector<nlohmann::json>& entries,
                             const std::filesystem::path& base_dir, int workers);

/// {"base": {...}, "overrides": [{...}, ...], "output": dir}: each entry is the
/// base with one override merged in (RFC 7386 merge patch).
std::vector<nlohmann::json> expand_sweep(const nlohmann::json& doc);

/// CSV cell rendering: 12 significant digits.
std::string csv_number(double v);
std::string render_csv(const Table& table);

/// result.json, result.csv, *.svg and run.log (or error.json on failure).
void write_outputs(const RunRecord& record, const std::filesystem::path& dir);
/// sweep.json and sweep.csv plus one subdirectory per entry.
void write_sweep_outputs(const std::vector<RunRecord>& records, const std::filesystem::path& dir);

/// Exit code for an exception escaping outside run().
int exit_code_for(const std::exception& e);

}  // namespace berrylab
