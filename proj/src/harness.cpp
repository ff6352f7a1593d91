#include "advrl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "advrl/agent.hpp"
#include "advrl/textio.hpp"

namespace advrl {

namespace {

using Clock = std::chrono::steady_clock;

class NoneAttacker final : public Attacker {
 public:
  AdversarialExample attack(const Observation& x) override {
    const auto t0 = Clock::now();
    AdversarialExample ex;
    ex.x = x;
    ex.x_adv = x;
    ex.delta.assign(x.pixels.size(), 0.0);
    ex.success = false;
    ex.gen_time = std::chrono::duration<double>(Clock::now() - t0).count();
    return ex;
  }
};

class FgsmAttacker final : public Attacker {
 public:
  FgsmAttacker(const DenseNetwork& qnet, double epsilon)
      : qnet_(qnet), epsilon_(epsilon) {}
  AdversarialExample attack(const Observation& x) override {
    return fgsm(qnet_, x, epsilon_);
  }

 private:
  const DenseNetwork& qnet_;
  double epsilon_;
};

class PgdAttacker final : public Attacker {
 public:
  PgdAttacker(const DenseNetwork& qnet, const AttackSpec& spec)
      : qnet_(qnet), spec_(spec) {}
  AdversarialExample attack(const Observation& x) override {
    return pgd(qnet_, x, spec_.epsilon, spec_.iterations, spec_.step_size);
  }

 private:
  const DenseNetwork& qnet_;
  AttackSpec spec_;
};

class CwAttacker final : public Attacker {
 public:
  CwAttacker(const DenseNetwork& qnet, const AttackSpec& spec)
      : qnet_(qnet), spec_(spec) {}
  AdversarialExample attack(const Observation& x) override {
    return cw_l2(qnet_, x, spec_.iterations, spec_.cw_c, spec_.cw_lr,
                 spec_.cw_search_steps);
  }

 private:
  const DenseNetwork& qnet_;
  AttackSpec spec_;
};

class PgnAttacker final : public Attacker {
 public:
  PgnAttacker(const DenseNetwork& qnet, const PGNModel& model,
              std::uint64_t z_seed)
      : qnet_(qnet), model_(model), rng_(z_seed) {}

  AdversarialExample attack(const Observation& x) override {
    const auto t0 = Clock::now();
    const Vec z = model_.variant == PgnVariant::Generator
                      ? draw_noise(model_.noise_dim, rng_)
                      : Vec{};
    Generated g = generate(model_, x, z);
    AdversarialExample ex;
    ex.x = x;
    ex.x_adv = std::move(g.h_x);
    ex.delta.resize(x.pixels.size());
    for (std::size_t i = 0; i < x.pixels.size(); ++i)
      ex.delta[i] = ex.x_adv.pixels[i] - x.pixels[i];
    ex.gen_time = std::chrono::duration<double>(Clock::now() - t0).count();
    ex.success = argmax_low(forward(qnet_, x.pixels)) !=
                 argmax_low(forward(qnet_, ex.x_adv.pixels));
    return ex;
  }

 private:
  const DenseNetwork& qnet_;
  const PGNModel& model_;
  Rng rng_;
};

}  // namespace

std::unique_ptr<Attacker> make_attacker(const AttackSpec& spec,
                                        const DenseNetwork& qnet,
                                        const PGNModel* pgn_model,
                                        std::uint64_t z_seed) {
  switch (spec.kind) {
    case AttackKind::None:
      return std::make_unique<NoneAttacker>();
    case AttackKind::Fgsm:
      return std::make_unique<FgsmAttacker>(qnet, spec.epsilon);
    case AttackKind::Pgd:
      return std::make_unique<PgdAttacker>(qnet, spec);
    case AttackKind::Cw:
      return std::make_unique<CwAttacker>(qnet, spec);
    case AttackKind::PgnTargeted:
    case AttackKind::PgnUntargeted:
      if (!pgn_model)
        throw std::invalid_argument("make_attacker: PGN kind needs a model");
      return std::make_unique<PgnAttacker>(qnet, *pgn_model, z_seed);
  }
  throw std::logic_error("make_attacker: bad kind");
}

long EpisodeTrace::n_same() const {
  long n = 0;
  for (const StepRecord& s : steps)
    if (s.clean_action == s.attacked_action) ++n;
  return n;
}

EpisodeTrace run_episode(const DenseNetwork& qnet, Environment& env,
                         Attacker& attacker, std::uint64_t seed) {
  EpisodeTrace trace;
  Observation obs = env.reset(seed);
  bool done = false;
  while (!done) {
    StepRecord rec;
    rec.clean_action = act_greedy(qnet, obs);
    AdversarialExample ex = attacker.attack(obs);
    rec.attacked_action = act_greedy(qnet, ex.x_adv);
    rec.executed_action = rec.attacked_action;
    rec.psnr_step = psnr(obs.pixels, ex.x_adv.pixels);
    trace.gen_time_total += ex.gen_time;

    StepResult sr = env.step(rec.executed_action);
    rec.step_index = sr.step_index;
    rec.reward = sr.reward;
    rec.done = sr.done;
    trace.episode_return += sr.reward;
    trace.steps.push_back(rec);

    obs = std::move(sr.observation);
    done = sr.done;
  }
  return trace;
}

std::pair<long, long> acr_components(const std::vector<EpisodeTrace>& traces) {
  long n_same = 0, n_total = 0;
  for (const EpisodeTrace& t : traces) {
    n_same += t.n_same();
    n_total += static_cast<long>(t.steps.size());
  }
  return {n_same, n_total};
}

namespace {

// per-episode PSNR is the mean over perturbed steps; untouched steps carry
// the +inf sentinel and are excluded
double episode_psnr(const EpisodeTrace& trace) {
  double sum = 0.0;
  long n = 0;
  for (const StepRecord& s : trace.steps) {
    if (std::isfinite(s.psnr_step)) {
      sum += s.psnr_step;
      ++n;
    }
  }
  if (n == 0) return std::numeric_limits<double>::infinity();
  return sum / static_cast<double>(n);
}

}  // namespace

RunOutput run_evaluation(const DenseNetwork& qnet, Environment& env,
                         const RunConfig& config, const PGNModel* pgn_model,
                         const ARWeights& weights) {
  if (config.episodes < 1)
    throw std::invalid_argument("run_evaluation: episodes must be >= 1");

  RunOutput out;

  NoneAttacker baseline_attacker;
  double baseline_sum = 0.0;
  for (int i = 0; i < config.episodes; ++i) {
    const EpisodeTrace t = run_episode(
        qnet, env, baseline_attacker, config.base_seed + static_cast<std::uint64_t>(i));
    baseline_sum += t.episode_return;
  }
  out.baseline_return = baseline_sum / config.episodes;

  std::unique_ptr<Attacker> attacker =
      make_attacker(config.attack, qnet, pgn_model, config.base_seed);
  double reward_sum = 0.0;
  double psnr_sum = 0.0;
  long psnr_n = 0;
  double gen_time_sum = 0.0;
  long gen_calls = 0;
  for (int i = 0; i < config.episodes; ++i) {
    EpisodeTrace t = run_episode(qnet, env, *attacker,
                                 config.base_seed + static_cast<std::uint64_t>(i));
    reward_sum += t.episode_return;
    const double ep_psnr = episode_psnr(t);
    if (std::isfinite(ep_psnr)) {
      psnr_sum += ep_psnr;
      ++psnr_n;
    }
    gen_time_sum += t.gen_time_total;
    gen_calls += static_cast<long>(t.steps.size());
    out.traces.push_back(std::move(t));
  }

  MetricsReport& r = out.report;
  r.method = config.method_label.empty()
                 ? attack_kind_name(config.attack.kind)
                 : config.method_label;
  r.env = env.descriptor().name;
  r.mean_reward = reward_sum / config.episodes;
  const auto [n_same, n_total] = acr_components(out.traces);
  r.acr = acr(n_same, n_total);
  r.mean_psnr = psnr_n > 0 ? psnr_sum / psnr_n
                           : std::numeric_limits<double>::infinity();
  // a baseline already at the floor cannot be damaged further
  const double r_min = env.descriptor().min_return;
  r.delta_r = out.baseline_return > r_min
                  ? delta_r(out.baseline_return, r.mean_reward, r_min)
                  : 0.0;
  r.ar = ar(r.delta_r, r.acr, std::min(r.mean_psnr, kPsnrCap), weights);
  r.weak_attack = config.attack.kind != AttackKind::None &&
                  classify_weak(r.acr, r.delta_r);
  r.gen_time_mean = gen_calls > 0 ? gen_time_sum / gen_calls : 0.0;
  return out;
}

TimingStats benchmark_latency(Attacker& attacker, const std::string& method,
                              const std::vector<Observation>& states) {
  if (states.size() < 100)
    throw std::invalid_argument("benchmark_latency: need >= 100 states");

  for (int i = 0; i < 10; ++i) attacker.attack(states[i % states.size()]);

  std::vector<double> times;
  times.reserve(states.size());
  for (const Observation& s : states) {
    const auto t0 = Clock::now();
    attacker.attack(s);
    times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }

  TimingStats stats;
  stats.method = method;
  stats.n = static_cast<int>(times.size());
  stats.mean_s = std::accumulate(times.begin(), times.end(), 0.0) / stats.n;
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  stats.median_s = stats.n % 2 == 1
                       ? sorted[stats.n / 2]
                       : 0.5 * (sorted[stats.n / 2 - 1] + sorted[stats.n / 2]);
  double var = 0.0;
  for (double t : times) var += (t - stats.mean_s) * (t - stats.mean_s);
  stats.stddev_s = std::sqrt(var / stats.n);
  return stats;
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "step_index,clean_action,attacked_action,executed_action,reward,"
         "done,psnr_step\n";
  for (const StepRecord& s : trace.steps)
    out << s.step_index << "," << s.clean_action << "," << s.attacked_action
        << "," << s.executed_action << "," << format_full(s.reward) << ","
        << (s.done ? "true" : "false") << "," << format_full(s.psnr_step)
        << "\n";
}

void write_timing_header(std::ostream& out) {
  out << "method,mean_s,median_s,stddev_s,n\n";
}

void write_timing_row(std::ostream& out, const TimingStats& s) {
  out << s.method << "," << format_full(s.mean_s) << ","
      << format_full(s.median_s) << "," << format_full(s.stddev_s) << ","
      << s.n << "\n";
}

}  // namespace advrl
