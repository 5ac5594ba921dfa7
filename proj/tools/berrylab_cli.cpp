#include "berrylab/error.hpp"
#include "berrylab/experiment.hpp"
#include "berrylab/parallel.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace berrylab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void print_summary(const RunRecord& r, const fs::path& dir) {
  if (r.ok()) {
    std::cout << r.kind << " ok (" << r.wall_time << " s)";
    for (const auto& [k, v] : r.summary) std::cout << "  " << k << "=" << csv_number(v);
    std::cout << "\n";
  } else {
    std::cerr << r.kind << " failed (exit " << r.exit_code << "): " << r.error << "\n";
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "outputs in " << dir.string() << "\n";
}

int emit_error(const std::exception& e, const std::optional<fs::path>& dir) {
  const int code = exit_code_for(e);
  const json err = {{"error",
                     {{"kind", code == 2 ? "validation" : "numerical"}, {"exit_code", code}, {"message", e.what()}}}};
  std::cerr << err.dump() << "\n";
  if (dir) {
    std::error_code ec;
    fs::create_directories(*dir, ec);
    std::ofstream(*dir / "error.json") << err.dump(2) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"berrylab: Berry phase of a well transported in a homogeneous magnetic field"};
  app.require_subcommand(0, 1);
  bool top_print = false;
  app.add_flag("--print-config", top_print, "Print the default configuration and exit");

  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;

  auto* run_cmd = app.add_subcommand("run", "Run one experiment");
  run_cmd->add_option("--config", config_path, "Experiment configuration (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default: config 'output')");
  run_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", seed, "Random seed");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a base configuration with a list of overrides");
  sweep_cmd->add_option("--config", config_path, "Sweep document (JSON)")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory");
  sweep_cmd->add_option("--workers", workers, "Concurrent sweep entries")->check(CLI::PositiveNumber);

  auto* check_cmd = app.add_subcommand("check", "Run the invariant suite");
  check_cmd->add_option("--config", config_path, "Configuration supplying grid, flux and potential");
  check_cmd->add_option("--out", out_dir, "Output directory (default: check_out)");
  check_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  auto* print_cmd = app.add_subcommand("print-config", "Print the default configuration");
  std::string kind;
  bool schema = false;
  print_cmd->add_option("--kind", kind, "Experiment kind for the emitted defaults");
  print_cmd->add_flag("--schema", schema, "Print the configuration schema instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::optional<fs::path> err_dir;
  if (out_dir) err_dir = fs::path(*out_dir);
  try {
    if (top_print || print_cmd->parsed()) {
      if (schema) {
        std::cout << config_schema().dump(2) << "\n";
        return 0;
      }
      json d = default_config_json();
      if (!kind.empty()) d = to_json(parse_config(json{{"kind", kind}}));
      std::cout << d.dump(2) << "\n";
      return 0;
    }

    if (run_cmd->parsed() || check_cmd->parsed()) {
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg = load_config(config_path);
      if (check_cmd->parsed()) {
        cfg.kind = ExperimentKind::check;
        if (!out_dir) out_dir = "check_out";
      }
      if (seed) cfg.seed = cfg.solver.seed = *seed;
      if (workers) cfg.workers = *workers;
      const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(cfg.output);
      err_dir = dir;
      const RunRecord rec = run(cfg);
      write_outputs(rec, dir);
      print_summary(rec, dir);
      return rec.exit_code;
    }

    if (sweep_cmd->parsed()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open sweep document " + config_path);
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ValidationError(config_path + ": " + e.what());
      }
      const fs::path dir = out_dir ? fs::path(*out_dir) : fs::path(doc.value("output", std::string("sweep_out")));
      err_dir = dir;
      const int w = resolve_workers(workers ? *workers : doc.value("workers", 0));
      const auto records = sweep(expand_sweep(doc), fs::path(config_path).parent_path(), w);
      write_sweep_outputs(records, dir);
      int failures = 0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        std::cout << "[" << i << "] ";
        print_summary(records[i], dir);
        failures += !records[i].ok();
      }
      std::cout << records.size() - failures << " of " << records.size() << " entries succeeded\n";
      return failures == 0 ? 0 : 3;
    }

    std::cout << app.help();
    return 0;
  } catch (const std::exception& e) {
    return emit_error(e, err_dir);
  }
}
