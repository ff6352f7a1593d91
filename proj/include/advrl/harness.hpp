#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "advrl/attacks.hpp"
#include "advrl/env.hpp"
#include "advrl/metrics.hpp"
#include "advrl/pgn.hpp"

namespace advrl {

/// Per-observation attack interface; every episode step goes through it
/// (100% attack frequency).
class Attacker {
 public:
  virtual ~Attacker() = default;
  virtual AdversarialExample attack(const Observation& x) = 0;
};

/// Builds an attacker from a spec. PGN kinds require a loaded model; the
/// z_seed drives the generator variant's noise stream.
std::unique_ptr<Attacker> make_attacker(const AttackSpec& spec,
                                        const DenseNetwork& qnet,
                                        const PGNModel* pgn_model,
                                        std::uint64_t z_seed);

struct StepRecord {
  int step_index = 0;
  int clean_action = 0;
  int attacked_action = 0;
  int executed_action = 0;
  double reward = 0.0;
  bool done = false;
  double psnr_step = 0.0;  // +inf when the step was left unperturbed
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  double episode_return = 0.0;
  double gen_time_total = 0.0;

  long n_same() const;
};

/// One attacked episode: the agent genuinely perceives h(x) and executes the
/// attacked action; the clean action is recorded for ACR bookkeeping.
EpisodeTrace run_episode(const DenseNetwork& qnet, Environment& env,
                         Attacker& attacker, std::uint64_t seed);

/// Pooled ACR counts over a set of traces: (n_same, n_total).
std::pair<long, long> acr_components(const std::vector<EpisodeTrace>& traces);

struct RunConfig {
  std::string env_name;
  AttackSpec attack;
  int episodes = 10;
  std::uint64_t base_seed = 0;
  std::string method_label;  // row label in the report CSV
};

struct RunOutput {
  MetricsReport report;
  std::vector<EpisodeTrace> traces;
  double baseline_return = 0.0;  // same agent, no attack, same seeds
};

/// Runs `episodes` attacked episodes (seeds base..base+episodes-1), plus the
/// matching no-attack baseline, and aggregates the report.
RunOutput run_evaluation(const DenseNetwork& qnet, Environment& env,
                         const RunConfig& config, const PGNModel* pgn_model,
                         const ARWeights& weights = ARWeights{});

struct TimingStats {
  std::string method;
  double mean_s = 0.0;
  double median_s = 0.0;
  double stddev_s = 0.0;
  int n = 0;
};

/// Wall-clock per-example generation latency, single-threaded, with 10
/// warm-up calls discarded. Requires >= 100 states.
TimingStats benchmark_latency(Attacker& attacker, const std::string& method,
                              const std::vector<Observation>& states);

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);
void write_timing_header(std::ostream& out);
void write_timing_row(std::ostream& out, const TimingStats& stats);

}  // namespace advrl
