// guardgame: scenario generation, reward matrices, assignment, full runs and
// trajectory replay.

#include "guardgame/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace guardgame;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kInfeasible = 3, kNumerical = 4 };

struct Options {
  std::string scenario;
  std::uint64_t seed = 1;
  int interceptors = 5;
  int threats = 3;
  double dt = 0.01;
  std::string out = ".";
  int threads = 1;
  std::string horizons;
  double emphasis_ratio = EmphasisDesign{}.ratio;
  std::string rewards;
};

/// "25:300:5" (first:last:step) or "25,50,75".
std::vector<int> parse_horizons(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    int first = 0, last = 0, step = 0;
    if (std::sscanf(text.c_str(), "%d:%d:%d", &first, &last, &step) != 3 || step < 1 || first < 1 || last < first) {
      throw std::invalid_argument("--horizons: expected first:last:step with 1 <= first <= last, step >= 1");
    }
    for (int h = first; h <= last; h += step) out.push_back(h);
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t used = 0;
    const int h = std::stoi(item, &used);
    if (used != item.size() || h < 1) throw std::invalid_argument("--horizons: bad entry '" + item + "'");
    out.push_back(h);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("--horizons: empty list");
  return out;
}

SweepConfig sweep_config(const Options& o) {
  if (!(o.dt > 0.0)) throw std::invalid_argument("--dt must be positive");
  if (o.threads < 1) throw std::invalid_argument("--threads must be >= 1");
  if (!(o.emphasis_ratio > 0.0)) throw std::invalid_argument("--emphasis-ratio must be positive");
  SweepConfig c;
  c.sample_time = o.dt;
  c.threads = o.threads;
  c.emphasis.ratio = o.emphasis_ratio;
  if (!o.horizons.empty()) c.horizons = parse_horizons(o.horizons);
  return c;
}

Scenario require_scenario(const Options& o) {
  if (o.scenario.empty()) throw ScenarioError("--scenario: required");
  return load_scenario(o.scenario);
}

fs::path output_dir(const Options& o) {
  fs::create_directories(o.out);
  return o.out;
}

void print_matrix(const RewardMatrix& r) {
  std::printf("reward matrix %d x %d (ft, '-' = no intercept)\n", r.N, r.K());
  for (int j = 0; j < r.N; ++j) {
    std::printf("T%d:", j + 1);
    for (int c = 0; c < r.K(); ++c) {
      if (r.feasible(j, c)) {
        std::printf(" %7.1f", r.values(j, c));
      } else {
        std::printf(" %7s", "-");
      }
    }
    std::printf("\n");
  }
}

std::string members_text(const std::vector<int>& members) {
  std::string s = "{";
  for (std::size_t i = 0; i < members.size(); ++i) s += (i ? ",I" : "I") + std::to_string(members[i]);
  return s + "}";
}

void print_assignment(const AssignmentSolution& s, const RewardMatrix& r) {
  std::printf("regime %s, objective %.3f ft%s\n", regime_name(s.regime), s.objective,
              s.sentinel_objective ? " (sentinel: some assigned threat has no intercept)" : "");
  for (const auto& p : s.pairs) {
    std::printf("  T%d <- group %d %s  reward %.3f ft\n", p.threat + 1, p.column + 1,
                members_text(r.groups[static_cast<std::size_t>(p.column)].members).c_str(), r.values(p.threat, p.column));
  }
}

RewardMatrix reward_matrix_from_json(const nlohmann::json& j) {
  const int M = j.at("M").get<int>();
  const auto& rows = j.at("values_ft");
  MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>((1u << M) - 1));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    if (rows[t].size() != static_cast<std::size_t>(values.cols())) throw ScenarioError("values_ft: wrong row length");
    for (std::size_t c = 0; c < rows[t].size(); ++c) {
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c].get<double>();
    }
  }
  return RewardMatrix::from_values(M, values);
}

int cmd_generate(const Options& o) {
  if (o.interceptors < 1 || o.interceptors > 20 || o.threats < 1) {
    throw std::invalid_argument("--interceptors must be in 1..20 and --threats >= 1");
  }
  const Scenario s = generate_scenario(o.seed, o.interceptors, o.threats);
  fs::path path = o.out;
  if (path.extension() != ".json") path = output_dir(o) / "scenario.json";
  save_scenario(s, path.string());
  std::printf("wrote %s (M=%d, N=%d, seed=%llu)\n", path.string().c_str(), s.M(), s.N(),
              static_cast<unsigned long long>(s.seed));
  return kOk;
}

int cmd_reward_matrix(const Options& o) {
  const Scenario s = require_scenario(o);
  const SweepConfig c = sweep_config(o);
  const RewardMatrix r = build_reward_matrix(s, c);
  print_matrix(r);
  const fs::path path = output_dir(o) / "reward_matrix.json";
  write_text(path, reward_matrix_to_json(r, c.sample_time).dump(2) + "\n");
  std::printf("wrote %s\n", path.string().c_str());
  return kOk;
}

int cmd_assign(const Options& o) {
  RewardMatrix r;
  double dt = o.dt;
  if (!o.rewards.empty()) {
    std::ifstream in(o.rewards);
    if (!in) throw ScenarioError(o.rewards + ": cannot open");
    nlohmann::json j;
    in >> j;
    r = reward_matrix_from_json(j);
  } else {
    const SweepConfig c = sweep_config(o);
    dt = c.sample_time;
    r = build_reward_matrix(require_scenario(o), c);
  }
  const AssignmentSolution s = solve_assignment(r);
  print_assignment(s, r);
  const fs::path path = output_dir(o) / "assignment.json";
  write_text(path, assignment_to_json(s, r, dt).dump(2) + "\n");
  std::printf("wrote %s\n", path.string().c_str());
  return s.sentinel_objective ? kInfeasible : kOk;
}

int cmd_run(const Options& o) {
  const Scenario s = require_scenario(o);
  const RunReport report = run_pipeline(s, sweep_config(o));
  const fs::path dir = output_dir(o);
  write_run_outputs(report, dir);
  print_assignment(report.assignment, report.rewards);
  for (const auto& t : report.threats) {
    if (!t.assigned) {
      std::printf("  T%d: not covered\n", t.threat);
    } else if (!t.feasible) {
      std::printf("  T%d: no intercept\n", t.threat);
    } else {
      std::printf("  T%d: I%d miss %.3f ft at %.2f s, %.1f ft from the asset\n", t.threat, t.capturing_interceptor,
                  t.miss_ft, t.horizon_s, t.intercept_distance_ft);
    }
  }
  std::printf("reward matrix %.2f s, assignment %.4f s\n", report.timings.reward_matrix_s,
              report.timings.assignment_s);
  std::printf("wrote %s\n", (dir / "report.json").string().c_str());
  const bool covered = report.assignment.regime == Regime::kEmployInterceptors || report.all_threats_covered();
  return (covered && !report.assignment.sentinel_objective) ? kOk : kInfeasible;
}

int cmd_replay(const Options& o) {
  const auto checks = replay_run_outputs(o.out);
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%s: replay %s, limits %s, summary %s\n", c.file.c_str(), c.replays ? "exact" : "MISMATCH",
                c.within_limits ? "ok" : "EXCEEDED", c.summary_consistent ? "consistent" : "INCONSISTENT");
    ok = ok && c.ok();
  }
  if (checks.empty()) std::printf("no trajectories to replay\n");
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-interceptor asset guarding: game-based guidance and max-min group assignment"};
  app.require_subcommand(1);
  Options o;

  auto add_sweep = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario, "Scenario JSON file");
    sub->add_option("--dt", o.dt, "Sample time in seconds")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads for the reward sweep")->capture_default_str();
    sub->add_option("--horizons", o.horizons, "Horizon set in steps: first:last:step or a comma list");
    sub->add_option("--emphasis-ratio", o.emphasis_ratio, "Weight ratio of an emphasized interceptor")
        ->capture_default_str();
  };

  auto* gen = app.add_subcommand("generate", "Generate a random scenario");
  gen->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  gen->add_option("-M,--interceptors", o.interceptors, "Interceptor count")->capture_default_str();
  gen->add_option("-N,--threats", o.threats, "Threat count")->capture_default_str();
  gen->add_option("--out", o.out, "Output directory or .json path")->capture_default_str();

  auto* rm = app.add_subcommand("reward-matrix", "Build the threat x group reward matrix");
  add_sweep(rm);
  rm->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* as = app.add_subcommand("assign", "Solve the max-min group assignment");
  add_sweep(as);
  as->add_option("--rewards", o.rewards, "Reward matrix JSON instead of building one");
  as->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* run = app.add_subcommand("run", "Full pipeline with report and trajectories");
  add_sweep(run);
  run->add_option("--out", o.out, "Output directory")->capture_default_str();

  auto* rp = app.add_subcommand("replay", "Check exported trajectories against the dynamics");
  rp->add_option("--out", o.out, "Run output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*rm) return cmd_reward_matrix(o);
    if (*as) return cmd_assign(o);
    if (*run) return cmd_run(o);
    if (*rp) return cmd_replay(o);
  } catch (const InfeasibleAssignment& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const SolvabilityError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const ScenarioError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
