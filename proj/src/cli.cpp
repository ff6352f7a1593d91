#include "advrl/cli.hpp"

#include <CLI11.hpp>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "advrl/agent.hpp"
#include "advrl/harness.hpp"
#include "advrl/metrics.hpp"
#include "advrl/textio.hpp"

#ifndef ADVRL_DATA_FILE
#define ADVRL_DATA_FILE "data/paper_tables.csv"
#endif

namespace advrl {

namespace fs = std::filesystem;

namespace {

struct VerificationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_report_dir() {
  if (const char* env = std::getenv("ADVRL_REPORT_DIR"); env && *env)
    return env;
  return "reports";
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  return in;
}

AgentCheckpoint load_agent_file(const std::string& path) {
  auto in = open_in(path);
  return load_agent(in);
}

PgnCheckpoint load_pgn_file(const std::string& path) {
  auto in = open_in(path);
  return load_pgn(in);
}

void cmd_train_agent(const std::string& env_name, std::uint64_t seed,
                     const std::string& out_path, const DQNConfig& cfg) {
  auto env = make_env(env_name);
  std::cout << "training DQN on " << env_name << " (seed " << seed << ", "
            << cfg.training_episodes << " episodes)\n";
  TrainedAgent trained = train_dqn(*env, cfg, seed);

  AgentCheckpoint ckpt;
  ckpt.env_name = env_name;
  ckpt.seed = seed;
  ckpt.config = cfg;
  ckpt.final_eval_return = trained.final_eval_return;
  ckpt.qnet = std::move(trained.qnet);
  {
    auto out = open_out(out_path);
    save_agent(out, ckpt);
  }
  {
    auto out = open_out(out_path + ".curve.csv");
    write_training_curve_csv(out, trained.curve);
  }
  std::cout << "final eval return: " << trained.final_eval_return << "\n";
  std::cout << "checkpoint: " << out_path << "\n";
}

void cmd_collect(const std::string& agent_path, int episodes,
                 std::uint64_t seed, const std::string& out_path) {
  const AgentCheckpoint ckpt = load_agent_file(agent_path);
  auto env = make_env(ckpt.env_name);
  const auto data = collect_dataset(ckpt.qnet, *env, episodes, seed);
  auto out = open_out(out_path);
  save_dataset(out, data);
  std::cout << "collected " << data.size() << " observations from " << episodes
            << " episodes of " << ckpt.env_name << "\n";
}

void cmd_train_pgn(const std::string& agent_path, const std::string& dataset_path,
                   const PGNConfig& cfg, std::uint64_t seed,
                   const std::string& out_path) {
  const AgentCheckpoint agent = load_agent_file(agent_path);
  std::vector<Observation> dataset;
  {
    auto in = open_in(dataset_path);
    dataset = load_dataset(in);
  }
  if (dataset.empty())
    throw std::runtime_error("train-pgn: dataset '" + dataset_path +
                             "' is empty; run collect first");
  std::cout << "training " << pgn_objective_name(cfg.objective) << " "
            << pgn_variant_name(cfg.variant) << " PGN on " << dataset.size()
            << " observations (" << cfg.epochs << " epochs)\n";
  PgnTrainResult result = train_pgn(dataset, agent.qnet, cfg, seed);
  {
    auto out = open_out(out_path);
    save_pgn(out, result.model, cfg);
  }
  {
    auto out = open_out(out_path + ".loss.csv");
    write_loss_curve_csv(out, result.curve);
  }
  if (!result.curve.empty())
    std::cout << "final epoch loss: total=" << result.curve.back().total
              << " l_x=" << result.curve.back().l_x
              << " l_y=" << result.curve.back().l_y
              << " l_c=" << result.curve.back().l_c << "\n";
  std::cout << "checkpoint: " << out_path << "\n";
}

std::string sanitize_label(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '-';
  return s;
}

void cmd_attack(const std::string& agent_path, const std::string& method,
                int episodes, std::uint64_t seed, const std::string& pgn_path,
                AttackSpec spec, const std::string& out_dir,
                int dump_examples) {
  const MethodSpec ms = parse_method(method);
  spec.kind = ms.kind;

  const AgentCheckpoint agent = load_agent_file(agent_path);
  auto env = make_env(agent.env_name);

  std::optional<PgnCheckpoint> pgn;
  if (ms.variant) {
    if (pgn_path.empty())
      throw std::runtime_error("attack: method '" + method +
                               "' requires --pgn <checkpoint>");
    pgn = load_pgn_file(pgn_path);
    if (pgn->model.variant != *ms.variant ||
        pgn->model.objective != *ms.objective)
      throw std::runtime_error(
          "attack: PGN checkpoint is " +
          std::string(pgn_objective_name(pgn->model.objective)) + "/" +
          pgn_variant_name(pgn->model.variant) + " but method '" + method +
          "' expects " + pgn_objective_name(*ms.objective) + "/" +
          pgn_variant_name(*ms.variant));
  }

  RunConfig rc;
  rc.env_name = agent.env_name;
  rc.attack = spec;
  rc.episodes = episodes;
  rc.base_seed = seed;
  rc.method_label = method;
  const RunOutput run =
      run_evaluation(agent.qnet, *env, rc, pgn ? &pgn->model : nullptr);

  const std::string stem =
      sanitize_label(method) + "_" + sanitize_label(agent.env_name);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / (stem + ".report.csv"));
    write_report_header(out);
    write_report_row(out, run.report);
  }
  for (std::size_t i = 0; i < run.traces.size(); ++i) {
    auto out = open_out(dir / (stem + "_ep" + std::to_string(i) + ".trace.csv"));
    write_trace_csv(out, run.traces[i]);
  }

  if (dump_examples > 0) {
    auto attacker =
        make_attacker(spec, agent.qnet, pgn ? &pgn->model : nullptr, seed);
    const auto states = collect_dataset(agent.qnet, *env, 1, seed);
    const int n = std::min<int>(dump_examples, static_cast<int>(states.size()));
    for (int i = 0; i < n; ++i) {
      auto out = open_out(dir / (stem + "_ex" + std::to_string(i) + ".txt"));
      write_adversarial_example(out, attacker->attack(states[i]));
    }
  }

  write_report_header(std::cout);
  write_report_row(std::cout, run.report);
  std::cout << "baseline (no attack) mean return: " << run.baseline_return
            << "\n";
}

void cmd_benchmark_time(const std::string& agent_path,
                        const std::vector<std::string>& methods, int n_states,
                        std::uint64_t seed, const std::string& pgn_path,
                        const std::string& out_path) {
  if (n_states < 100)
    throw std::runtime_error("benchmark-time: need --states >= 100");
  const AgentCheckpoint agent = load_agent_file(agent_path);
  auto env = make_env(agent.env_name);

  std::vector<Observation> states;
  std::uint64_t ep = 0;
  while (static_cast<int>(states.size()) < n_states) {
    auto chunk = collect_dataset(agent.qnet, *env, 1, seed + ep);
    states.insert(states.end(), chunk.begin(), chunk.end());
    ++ep;
  }
  states.resize(n_states);

  std::optional<PgnCheckpoint> pgn;
  if (!pgn_path.empty()) pgn = load_pgn_file(pgn_path);

  auto out = open_out(out_path);
  write_timing_header(out);
  write_timing_header(std::cout);
  for (const std::string& method : methods) {
    const MethodSpec ms = parse_method(method);
    if (ms.variant && !pgn)
      throw std::runtime_error("benchmark-time: method '" + method +
                               "' requires --pgn <checkpoint>");
    AttackSpec spec = default_attack_spec(ms.kind);
    auto attacker =
        make_attacker(spec, agent.qnet, pgn ? &pgn->model : nullptr, seed);
    const TimingStats stats = benchmark_latency(*attacker, method, states);
    write_timing_row(out, stats);
    write_timing_row(std::cout, stats);
  }
}

void cmd_report(const std::string& dir) {
  std::vector<MetricsReport> rows;
  if (fs::exists(dir)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) {
      std::ifstream in(p);
      std::string header;
      if (!std::getline(in, header)) continue;
      if (header != "method,env,mean_reward,acr,psnr,delta_r,ar,weak,"
                    "gen_time_mean_seconds")
        continue;
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) rows.push_back(parse_report_row(line));
    }
  }

  std::map<std::string, std::map<std::string, MetricsReport>> by_method;
  std::map<std::string, bool> envs;
  for (const MetricsReport& r : rows) {
    by_method[r.method][r.env] = r;
    envs[r.env] = true;
  }

  const auto print_block = [&](const std::string& title, auto cell) {
    std::cout << title << "\n";
    std::cout << "method";
    for (const auto& [env, _] : envs) std::cout << "," << env;
    std::cout << "\n";
    for (const auto& [method, per_env] : by_method) {
      std::cout << method;
      for (const auto& [env, _] : envs) {
        std::cout << ",";
        const auto it = per_env.find(env);
        if (it != per_env.end()) std::cout << cell(it->second);
      }
      std::cout << "\n";
    }
    std::cout << "\n";
  };

  print_block("# reward / ACR", [](const MetricsReport& r) {
    return format_fixed(r.mean_reward, 2) + " / " + format_fixed(r.acr, 4);
  });
  print_block("# PSNR (dB)", [](const MetricsReport& r) {
    return std::isfinite(r.mean_psnr) ? format_fixed(r.mean_psnr, 2)
                                      : std::string("inf");
  });
  print_block("# AR", [](const MetricsReport& r) {
    return format_fixed(r.ar, 4) + (r.weak_attack ? " (weak)" : "");
  });
}

void cmd_verify_ar(const std::string& data_path, double tolerance) {
  const auto rows = load_paper_table(data_path);
  const auto checks = verify_ar_cells(rows, tolerance);
  if (checks.empty())
    throw std::runtime_error("verify-ar: no rows with expected AR in " +
                             data_path);
  int failed = 0;
  for (const ArCheck& c : checks) {
    std::cout << (c.pass ? "PASS" : "FAIL") << " " << c.row.method << "/"
              << c.row.game << " computed=" << format_fixed(c.computed_ar, 4)
              << " expected=" << format_fixed(*c.row.ar_expected, 2) << "\n";
    if (!c.pass) ++failed;
  }
  std::cout << (checks.size() - failed) << "/" << checks.size()
            << " cells within " << tolerance << "\n";
  if (failed > 0)
    throw VerificationFailure("verify-ar: " + std::to_string(failed) +
                              " cells out of tolerance");
}

}  // namespace

std::vector<PaperRow> load_paper_table(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_paper_table: empty file " + path);
  if (line != "game,method,normal_reward,attacked_reward,acr,psnr,min_return,"
              "ar_expected")
    throw std::runtime_error("load_paper_table: unexpected header in " + path);
  std::vector<PaperRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line, ',');
    if (f.size() != 8)
      throw std::runtime_error("load_paper_table: bad row: " + line);
    PaperRow r;
    r.game = f[0];
    r.method = f[1];
    r.normal_reward = parse_double(f[2]);
    r.attacked_reward = parse_double(f[3]);
    r.acr = parse_double(f[4]);
    r.psnr = parse_double(f[5]);
    r.min_return = parse_double(f[6]);
    if (!f[7].empty()) r.ar_expected = parse_double(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ArCheck> verify_ar_cells(const std::vector<PaperRow>& rows,
                                     double tolerance) {
  std::vector<ArCheck> checks;
  const ARWeights w;
  for (const PaperRow& r : rows) {
    if (!r.ar_expected) continue;
    ArCheck c;
    c.row = r;
    const double dr = delta_r(r.normal_reward, r.attacked_reward, r.min_return);
    c.computed_ar = ar(dr, r.acr, std::min(r.psnr, kPsnrCap), w);
    c.pass = std::abs(c.computed_ar - *r.ar_expected) <= tolerance + 1e-12;
    checks.push_back(std::move(c));
  }
  return checks;
}

MethodSpec parse_method(const std::string& name) {
  MethodSpec ms;
  if (name == "none") { ms.kind = AttackKind::None; return ms; }
  if (name == "fgsm") { ms.kind = AttackKind::Fgsm; return ms; }
  if (name == "pgd") { ms.kind = AttackKind::Pgd; return ms; }
  if (name == "cw") { ms.kind = AttackKind::Cw; return ms; }
  if (name == "t-pgna" || name == "t-pgng") {
    ms.kind = AttackKind::PgnTargeted;
    ms.objective = PgnObjective::Targeted;
  } else if (name == "u-pgna" || name == "u-pgng") {
    ms.kind = AttackKind::PgnUntargeted;
    ms.objective = PgnObjective::Untargeted;
  } else {
    throw std::invalid_argument("unknown method '" + name + "'");
  }
  ms.variant = name.back() == 'a' ? PgnVariant::Autoencoder
                                  : PgnVariant::Generator;
  return ms;
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Observation attacks against small DQN agents: perturbation "
               "generation network, gradient baselines, and the "
               "effectiveness/stealthiness metrics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key-value config file with sections");

  // train-agent
  auto* ta = app.add_subcommand("train-agent", "train a DQN victim");
  std::string ta_env = "minipong";
  std::uint64_t ta_seed = 0;
  std::string ta_out = "agent.ckpt";
  DQNConfig dqn;
  ta->add_option("--env", ta_env, "minipong|collector")
      ->check(CLI::IsMember({"minipong", "collector"}))
      ->capture_default_str();
  ta->add_option("--seed", ta_seed)->capture_default_str();
  ta->add_option("--out", ta_out)->capture_default_str();
  ta->add_option("--episodes", dqn.training_episodes)->capture_default_str();
  ta->add_option("--learning-rate", dqn.learning_rate)->capture_default_str();
  ta->add_option("--batch-size", dqn.batch_size)->capture_default_str();
  ta->add_option("--gamma", dqn.gamma)->capture_default_str();
  ta->add_option("--target-sync", dqn.target_sync_every)->capture_default_str();
  ta->add_option("--replay-capacity", dqn.replay_capacity)->capture_default_str();
  ta->add_option("--eps-start", dqn.eps_start)->capture_default_str();
  ta->add_option("--eps-end", dqn.eps_end)->capture_default_str();
  ta->add_option("--hidden", dqn.hidden_dim)->capture_default_str();

  // collect
  auto* co = app.add_subcommand("collect", "roll out the victim greedily and "
                                           "store the visited observations");
  std::string co_agent, co_out = "dataset.txt";
  int co_episodes = 20;
  std::uint64_t co_seed = 0;
  co->add_option("--agent", co_agent)->required();
  co->add_option("--episodes", co_episodes)->capture_default_str();
  co->add_option("--seed", co_seed)->capture_default_str();
  co->add_option("--out", co_out)->capture_default_str();

  // train-pgn
  auto* tp = app.add_subcommand("train-pgn", "train a perturbation generator "
                                             "against a frozen victim");
  std::string tp_agent, tp_dataset, tp_out = "pgn.ckpt";
  std::string tp_variant = "ae", tp_objective = "targeted";
  std::uint64_t tp_seed = 0;
  PGNConfig pgn_cfg;
  tp->add_option("--agent", tp_agent)->required();
  tp->add_option("--dataset", tp_dataset)->required();
  tp->add_option("--variant", tp_variant, "ae|gen")
      ->check(CLI::IsMember({"ae", "gen"}))
      ->capture_default_str();
  tp->add_option("--objective", tp_objective, "targeted|untargeted")
      ->check(CLI::IsMember({"targeted", "untargeted"}))
      ->capture_default_str();
  tp->add_option("--seed", tp_seed)->capture_default_str();
  tp->add_option("--out", tp_out)->capture_default_str();
  tp->add_option("--learning-rate", pgn_cfg.learning_rate)->capture_default_str();
  tp->add_option("--batch-size", pgn_cfg.batch_size)->capture_default_str();
  tp->add_option("--epochs", pgn_cfg.epochs)->capture_default_str();
  tp->add_option("--alpha", pgn_cfg.alpha)->capture_default_str();
  tp->add_option("--beta", pgn_cfg.beta)->capture_default_str();
  tp->add_option("--kappa", pgn_cfg.kappa)->capture_default_str();
  tp->add_option("--c-threshold", pgn_cfg.c_threshold)->capture_default_str();
  tp->add_option("--noise-dim", pgn_cfg.noise_dim)->capture_default_str();
  tp->add_option("--latent-dim", pgn_cfg.latent_dim)->capture_default_str();
  tp->add_option("--hidden", pgn_cfg.hidden_dim)->capture_default_str();

  // attack
  auto* at = app.add_subcommand("attack", "run attacked episodes and report "
                                          "the metrics row");
  std::string at_agent, at_method = "fgsm", at_pgn;
  std::string at_dir = default_report_dir();
  int at_episodes = 10;
  std::uint64_t at_seed = 0;
  AttackSpec at_spec = default_attack_spec(AttackKind::Fgsm);
  int at_dump = 0;
  bool at_step_given = false;
  at->add_option("--agent", at_agent)->required();
  at->add_option("--method", at_method,
                 "none|fgsm|pgd|cw|t-pgna|t-pgng|u-pgna|u-pgng")
      ->capture_default_str();
  at->add_option("--episodes", at_episodes)->capture_default_str();
  at->add_option("--seed", at_seed)->capture_default_str();
  at->add_option("--pgn", at_pgn, "PGN checkpoint for t-pgn*/u-pgn* methods");
  at->add_option("--out-dir", at_dir)->capture_default_str();
  at->add_option("--epsilon", at_spec.epsilon)->capture_default_str();
  at->add_option("--iterations", at_spec.iterations)->capture_default_str();
  at->add_option("--step-size", at_spec.step_size)
      ->capture_default_str()
      ->each([&](const std::string&) { at_step_given = true; });
  at->add_option("--cw-c", at_spec.cw_c)->capture_default_str();
  at->add_option("--cw-lr", at_spec.cw_lr)->capture_default_str();
  at->add_option("--cw-search", at_spec.cw_search_steps)->capture_default_str();
  at->add_option("--dump-examples", at_dump,
                 "write the first N adversarial examples as flat arrays")
      ->capture_default_str();

  // benchmark-time
  auto* bt = app.add_subcommand("benchmark-time", "per-example generation "
                                                  "latency per method");
  std::string bt_agent, bt_pgn, bt_out = default_report_dir() + "/timing.csv";
  std::vector<std::string> bt_methods = {"fgsm", "pgd", "cw"};
  int bt_states = 100;
  std::uint64_t bt_seed = 0;
  bt->add_option("--agent", bt_agent)->required();
  bt->add_option("--methods", bt_methods)->delimiter(',')->capture_default_str();
  bt->add_option("--states", bt_states)->capture_default_str();
  bt->add_option("--seed", bt_seed)->capture_default_str();
  bt->add_option("--pgn", bt_pgn);
  bt->add_option("--out", bt_out)->capture_default_str();

  // report
  auto* re = app.add_subcommand("report", "merge run CSVs into summary tables");
  std::string re_dir = default_report_dir();
  re->add_option("--dir", re_dir)->capture_default_str();

  // verify-ar
  auto* va = app.add_subcommand("verify-ar", "recompute the published AR "
                                             "cells from bundled inputs");
  std::string va_data = ADVRL_DATA_FILE;
  double va_tol = 0.01;
  va->add_option("--data", va_data)->capture_default_str();
  va->add_option("--tolerance", va_tol)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  // reject unknown method names as usage errors before any work starts
  try {
    if (at->parsed()) parse_method(at_method);
    if (bt->parsed())
      for (const std::string& m : bt_methods) parse_method(m);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (ta->parsed()) cmd_train_agent(ta_env, ta_seed, ta_out, dqn);
    if (co->parsed()) cmd_collect(co_agent, co_episodes, co_seed, co_out);
    if (tp->parsed()) {
      pgn_cfg.variant = pgn_variant_from_name(tp_variant);
      pgn_cfg.objective = pgn_objective_from_name(tp_objective);
      cmd_train_pgn(tp_agent, tp_dataset, pgn_cfg, tp_seed, tp_out);
    }
    if (at->parsed()) {
      if (!at_step_given) at_spec.step_size = at_spec.epsilon / 10.0;
      cmd_attack(at_agent, at_method, at_episodes, at_seed, at_pgn, at_spec,
                 at_dir, at_dump);
    }
    if (bt->parsed())
      cmd_benchmark_time(bt_agent, bt_methods, bt_states, bt_seed, bt_pgn,
                         bt_out);
    if (re->parsed()) cmd_report(re_dir);
    if (va->parsed()) cmd_verify_ar(va_data, va_tol);
  } catch (const VerificationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace advrl
