#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "simdfs/bench.hpp"

namespace {

int write_output(const std::vector<simdfs::bench::ResultRow>& rows,
                 const std::string& path, const std::string& format) {
  const std::string body = format == "json" ? simdfs::bench::to_jsonl(rows)
                                            : simdfs::bench::to_csv(rows);
  if (path.empty() || path == "-") {
    std::cout << body;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot open output file " << path << "\n";
    return 2;
  }
  out << body;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simdfs: SmartNIC-offloaded DFS data-plane simulator"};
  app.require_subcommand(1);

  std::string preset;
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "csv";
  bool check = false;

  auto* run = app.add_subcommand("run", "Run a named preset scenario set");
  run->add_option("--preset", preset, "fig6|fig10|fig11|fig13|fig14")
      ->required();
  run->add_option("--seed", seed, "Deterministic seed");
  run->add_option("--output", output, "Output path (default stdout)");
  run->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--check", check,
                "Evaluate the preset's trend thresholds; exit 3 on violation");

  std::string config_path;
  auto* custom = app.add_subcommand("custom", "Run a scenario from a config file");
  custom->add_option("--config", config_path, "key=value scenario file")
      ->required();
  custom->add_option("--seed", seed, "Seed override");
  custom->add_option("--output", output, "Output path (default stdout)");
  custom->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      if (!simdfs::bench::is_known_preset(preset)) {
        std::cerr << "error: unknown preset '" << preset << "'\n";
        return 2;
      }
      const auto rows = simdfs::bench::run_preset(preset, seed);
      const int rc = write_output(rows, output, format);
      if (rc != 0) return rc;
      if (check) {
        const auto results = simdfs::bench::check_preset(preset, rows);
        bool all_pass = true;
        for (const auto& c : results) {
          std::cerr << (c.pass ? "PASS" : "FAIL") << " " << c.name << ": "
                    << c.detail << "\n";
          all_pass = all_pass && c.pass;
        }
        if (!all_pass) return 3;
      }
      return 0;
    }

    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file " << config_path << "\n";
      return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    auto scenario = simdfs::bench::parse_scenario_config(buf.str());
    if (custom->count("--seed") > 0) scenario.seed = seed;
    const auto row = simdfs::bench::run_scenario(scenario);
    return write_output({row}, output, format);
  } catch (const simdfs::bench::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
