#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "advrl/env.hpp"
#include "advrl/numerics.hpp"

namespace advrl {

struct DQNConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  double gamma = 0.99;
  int target_sync_every = 500;
  std::size_t replay_capacity = 100000;
  int training_episodes = 300;
  double eps_start = 1.0;
  double eps_end = 0.05;
  // linear epsilon decay over the first eps_decay_fraction of the episodes
  double eps_decay_fraction = 0.5;
  int hidden_dim = 128;
  int learn_start = 500;  // replay size before updates begin
  int eval_every = 10;    // episodes between training-curve evaluations
  int eval_episodes = 10;
  int final_eval_episodes = 20;
};

struct Transition {
  Vec s;
  int a = 0;
  double r = 0.0;
  Vec s_next;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& sample(Rng& rng) const;  // uniform over stored items

 private:
  std::vector<Transition> items_;
  std::size_t capacity_;
  std::size_t next_ = 0;
};

/// input -> hidden relu -> hidden relu -> action_count, identity head
DenseNetwork make_qnet(int input_dim, int action_count, int hidden, Rng& rng);

Vec q_values(const DenseNetwork& qnet, const Observation& x);

/// argmax of q_values; ties break to the lowest action index
int act_greedy(const DenseNetwork& qnet, const Observation& x);

double td_target(double r, bool done, double gamma, const Vec& q_next);

struct CurvePoint {
  int episode = 0;
  long steps = 0;
  double eval_return = 0.0;
};

// The returned qnet is the best evaluation-curve snapshot (greedy play drifts
// late in training once the behavior policy is nearly deterministic).
struct TrainedAgent {
  DenseNetwork qnet;
  std::vector<CurvePoint> curve;
  double final_eval_return = 0.0;
};

struct TrainObserver {
  // called right after each target-network sync
  std::function<void(long step, const DenseNetwork& online,
                     const DenseNetwork& target)>
      after_sync;
};

/// Seeded, single-threaded DQN training. Throws on a non-finite TD loss.
TrainedAgent train_dqn(Environment& env, const DQNConfig& config,
                       std::uint64_t seed,
                       const TrainObserver* observer = nullptr);

struct EvalResult {
  double mean_return = 0.0;
  std::vector<double> per_episode;
};

/// Greedy policy, no exploration; episode i uses env seed (seed + i).
EvalResult evaluate(const DenseNetwork& qnet, Environment& env, int episodes,
                    std::uint64_t seed);

struct AgentCheckpoint {
  std::string env_name;
  std::uint64_t seed = 0;
  DQNConfig config;
  double final_eval_return = 0.0;
  DenseNetwork qnet;
};

void save_agent(std::ostream& out, const AgentCheckpoint& ckpt);
AgentCheckpoint load_agent(std::istream& in);

void write_training_curve_csv(std::ostream& out,
                              const std::vector<CurvePoint>& curve);

}  // namespace advrl
