// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: scenario simulation, PPO optimization, exhaustive
// oracle tables, and the cross-module validation suites. All outputs are CSV
// (plus small text files for best allocations); re-running a command with the
// same config and seed reproduces byte-identical data rows.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lumisec/allocation.hpp"
#include "lumisec/csv.hpp"
#include "lumisec/errors.hpp"
#include "lumisec/ppo.hpp"
#include "lumisec/scene.hpp"
#include "lumisec/util.hpp"
#include "lumisec/validate.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using namespace lumisec;

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return std::string(buf);
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string user_name(int user) {
  return user == 0 ? "B" : "E" + std::to_string(user);
}

ObjectiveMode parse_mode(const std::string& text) {
  if (text == "colluding") return ObjectiveMode::kColluding;
  if (text == "non-colluding") return ObjectiveMode::kNonColluding;
  throw MalformedConfig("mode must be 'colluding' or 'non-colluding'");
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  const std::filesystem::path dir =
      path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

struct CommonArgs {
  std::string scenario_path;
  std::string mode_text = "colluding";
  std::vector<double> powers = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<std::uint64_t> seeds = {1};
  std::string out_dir = "out";
  int panels = 4096;
  int episodes = 1500;
};

QuadratureSettings quad_from(const CommonArgs& args) {
  QuadratureSettings quad;
  quad.panels = args.panels;
  return quad;
}

std::vector<double> sorted_powers(const CommonArgs& args) {
  if (args.powers.empty()) throw MalformedConfig("power sweep must not be empty");
  std::vector<double> powers = args.powers;
  std::sort(powers.begin(), powers.end());
  for (double p : powers) {
    if (!(p > 0.0)) throw MalformedConfig("power values must be positive");
  }
  return powers;
}

std::string provenance_line(const Scenario& scenario, const CommonArgs& args,
                            const std::string& extra) {
  std::ostringstream line;
  line << "lumisec v" << kVersion
       << " scenario_hash=" << hex16(fnv1a(scenario_to_json(scenario)))
       << " mode=" << args.mode_text << " power=" << join_doubles(args.powers)
       << " seeds=" << join_seeds(args.seeds) << " panels=" << args.panels;
  if (!extra.empty()) line << " " << extra;
  return line.str();
}

std::vector<std::vector<int>> active_sets_of(const Allocation& alloc,
                                             int n_users) {
  std::vector<std::vector<int>> sets(static_cast<std::size_t>(n_users));
  for (int n = 0; n < alloc.n_irs(); ++n) {
    sets[static_cast<std::size_t>(alloc.assign[static_cast<std::size_t>(n)])]
        .push_back(n);
  }
  return sets;
}

PpoConfig ppo_config_for(const CommonArgs& args, std::uint64_t seed) {
  PpoConfig config;
  config.episodes = args.episodes;
  config.seed = seed;
  return config;
}

Allocation pick_allocation(const Scenario& scenario, const std::string& optimizer,
                           ObjectiveMode mode, double power,
                           const CommonArgs& args) {
  const QuadratureSettings quad = quad_from(args);
  if (optimizer == "all-bob") return all_bob_allocation(scenario.n_irs());
  if (optimizer == "greedy") {
    return baseline(scenario, BaselineKind::kGreedy, mode, power, 0, quad).alloc;
  }
  if (optimizer == "random") {
    return baseline(scenario, BaselineKind::kUniformRandom, mode, power,
                    args.seeds.at(0), quad)
        .alloc;
  }
  if (optimizer == "brute-force") {
    return brute_force(scenario, mode, power, 10'000'000, quad).best;
  }
  if (optimizer == "ppo") {
    return train(scenario, mode, power, ppo_config_for(args, args.seeds.at(0)),
                 quad)
        .best;
  }
  throw MalformedConfig("unknown optimizer '" + optimizer + "'");
}

int cmd_simulate(const CommonArgs& args, const std::string& optimizer) {
  const Scenario scenario = load_scenario(args.scenario_path);
  const ObjectiveMode mode = parse_mode(args.mode_text);
  const std::vector<double> powers = sorted_powers(args);
  const QuadratureSettings quad = quad_from(args);
  const int n_users = scenario.n_eves() + 1;

  // One cell per power; cells are independent and may run in parallel.
  std::vector<std::vector<std::string>> cell_rows(powers.size());
  parallel_for(static_cast<int>(powers.size()), [&](int c) {
    const double power = powers[static_cast<std::size_t>(c)];
    const Allocation alloc =
        pick_allocation(scenario, optimizer, mode, power, args);
    const ObjectiveEvaluator eval(scenario, power, quad);
    const auto sets = active_sets_of(alloc, n_users);
    const std::vector<int> none;
    for (int u = 0; u < n_users; ++u) {
      const double rate_los =
          rate_exact(eval.paths(u), none, eval.prefix(), quad).rate_bps;
      const double rate_irs =
          rate_exact(eval.paths(u), sets[static_cast<std::size_t>(u)],
                     eval.prefix(), quad)
              .rate_bps;
      const double gain_pct = 100.0 * (rate_irs - rate_los) / rate_los;
      cell_rows[static_cast<std::size_t>(c)].push_back(
          format_double(power) + "," + user_name(u) + "," +
          format_double(rate_los) + "," + format_double(rate_irs) + "," +
          format_double(gain_pct));
    }
  });

  CsvWriter csv("power_w,user,rate_los_bps,rate_irs_bps,gain_pct",
                provenance_line(scenario, args, "optimizer=" + optimizer));
  for (const auto& rows : cell_rows) {
    for (const std::string& row : rows) csv.add_row(row);
  }
  const std::filesystem::path out =
      std::filesystem::path(args.out_dir) / "rates_vs_power.csv";
  csv.write(out);
  std::cout << "wrote " << out.string() << " (" << csv.row_count() << " rows)\n";
  return 0;
}

int cmd_optimize(const CommonArgs& args, bool save_checkpoints) {
  const Scenario scenario = load_scenario(args.scenario_path);
  const ObjectiveMode mode = parse_mode(args.mode_text);
  const std::vector<double> powers = sorted_powers(args);
  if (args.seeds.empty()) throw MalformedConfig("optimize needs at least one seed");
  const QuadratureSettings quad = quad_from(args);

  struct Cell {
    double power;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (double p : powers) {
    for (std::uint64_t s : args.seeds) cells.push_back({p, s});
  }

  parallel_for(static_cast<int>(cells.size()), [&](int c) {
    const Cell& cell = cells[static_cast<std::size_t>(c)];
    const double allbob_integral =
        ObjectiveEvaluator(scenario, cell.power, quad)
            .objective_integral(all_bob_allocation(scenario.n_irs()), mode);
    const PpoConfig config = ppo_config_for(args, cell.seed);
    const TrainResult result = train(scenario, mode, cell.power, config, quad);

    const std::string tag =
        "_p" + format_double(cell.power) + "_s" + std::to_string(cell.seed);
    CsvWriter csv(
        "episode,reward_bits_per_s,best_so_far_bits_per_s,allbob_bits_per_s",
        provenance_line(scenario, args,
                        "command=optimize seed=" + std::to_string(cell.seed) +
                            " power=" + format_double(cell.power)));
    for (const CurvePoint& point : result.curve) {
      csv.add_row(std::to_string(point.episode) + "," +
                  format_double(point.reward_bps) + "," +
                  format_double(point.best_so_far_bps) + "," +
                  format_double(allbob_integral));
    }
    const std::filesystem::path dir(args.out_dir);
    csv.write(dir / ("convergence" + tag + ".csv"));

    std::ostringstream best;
    best << alloc_to_string(result.best) << "\n"
         << "integral_bits_per_s=" << format_double(result.best_integral_bps)
         << "\n"
         << "capacity_bits_per_s=" << format_double(result.best_capacity_bps)
         << "\n";
    write_text_atomic(dir / ("best_allocation" + tag + ".txt"), best.str());

    if (save_checkpoints) {
      std::ostringstream rng_state;
      rng_state << std::mt19937_64(config.seed);
      save_checkpoint((dir / ("checkpoint" + tag + ".json")).string(),
                      result.nets, config, rng_state.str());
    }
  });

  std::cout << "wrote " << cells.size() << " convergence curve(s) to "
            << args.out_dir << "\n";
  return 0;
}

int cmd_oracle(const CommonArgs& args, std::uint64_t max_size) {
  const Scenario scenario = load_scenario(args.scenario_path);
  const ObjectiveMode mode = parse_mode(args.mode_text);
  const std::vector<double> powers = sorted_powers(args);
  const QuadratureSettings quad = quad_from(args);
  const int n_users = scenario.n_eves() + 1;

  for (double power : powers) {
    const BruteForceResult result =
        brute_force(scenario, mode, power, max_size, quad);
    CsvWriter csv("alloc,objective_bits_per_s",
                  provenance_line(scenario, args,
                                  "command=oracle power=" + format_double(power) +
                                      " max_size=" + std::to_string(max_size)));
    csv.add_comment("argmax alloc=" + alloc_to_string(result.best) +
                    " objective_bits_per_s=" +
                    format_double(result.best_value_bps));
    Allocation alloc = alloc_at_index(0, scenario.n_irs(), n_users);
    for (std::size_t i = 0; i < result.table.size(); ++i) {
      csv.add_row(alloc_to_string(alloc) + "," + format_double(result.table[i]));
      alloc = alloc_at_index(i + 1, scenario.n_irs(), n_users);
    }
    const std::filesystem::path out =
        std::filesystem::path(args.out_dir) /
        ("oracle_p" + format_double(power) + ".csv");
    csv.write(out);
    std::cout << "wrote " << out.string() << " (" << csv.row_count()
              << " rows)\n";
  }
  return 0;
}

int cmd_validate(std::uint64_t seed, const std::string& inject) {
  ValidateOptions options;
  options.seed = seed;
  if (!inject.empty()) {
    if (inject != "expansion-cosine") {
      throw MalformedConfig("unknown fault '" + inject + "'");
    }
    options.inject_expansion_fault = true;
  }
  const std::vector<SuiteResult> suites = run_validation_suites(options);
  bool any_failed = false;
  for (const SuiteResult& suite : suites) {
    const bool ok = suite.failures == 0;
    any_failed = any_failed || !ok;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << suite.name << ": "
              << suite.cases - suite.failures << "/" << suite.cases
              << " cases ok\n";
  }
  return any_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-aware IRS-assisted VLC secrecy simulator"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string optimizer = "all-bob";
  bool save_checkpoints = false;
  std::uint64_t max_size = 10'000'000;
  std::uint64_t validate_seed = ValidateOptions{}.seed;
  std::string inject_fault;

  auto add_common = [&args](CLI::App* cmd, bool need_scenario = true) {
    auto* scenario_opt =
        cmd->add_option("--scenario", args.scenario_path, "Scenario JSON file");
    if (need_scenario) scenario_opt->required();
    cmd->add_option("--mode", args.mode_text, "colluding | non-colluding");
    cmd->add_option("--power", args.powers, "Transmit power sweep in watts")
        ->delimiter(',');
    cmd->add_option("--seeds", args.seeds, "RNG seeds")->delimiter(',');
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--panels", args.panels, "Simpson quadrature panels");
    cmd->add_option("--episodes", args.episodes, "PPO training episodes");
  };

  CLI::App* simulate =
      app.add_subcommand("simulate", "Rates vs power under an allocation");
  add_common(simulate);
  simulate->add_option("--optimizer", optimizer,
                       "all-bob | random | greedy | brute-force | ppo");

  CLI::App* optimize =
      app.add_subcommand("optimize", "PPO convergence curves per (power, seed)");
  add_common(optimize);
  optimize->add_flag("--checkpoint", save_checkpoints,
                     "Also write network checkpoints");

  CLI::App* oracle =
      app.add_subcommand("oracle", "Exhaustive allocation table (small grids)");
  add_common(oracle);
  oracle->add_option("--max-size", max_size, "Enumeration cap");

  CLI::App* validate =
      app.add_subcommand("validate", "Run the cross-module property suites");
  validate->add_option("--seed", validate_seed, "Suite RNG seed");
  validate->add_option("--inject-fault", inject_fault, "")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(args, optimizer);
    if (optimize->parsed()) return cmd_optimize(args, save_checkpoints);
    if (oracle->parsed()) return cmd_oracle(args, max_size);
    if (validate->parsed()) return cmd_validate(validate_seed, inject_fault);
  } catch (const MalformedConfig& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyEveSet& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const SearchSpaceTooLarge& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IntegrationNotConverged& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
