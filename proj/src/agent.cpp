#include "advrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "advrl/textio.hpp"

namespace advrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer: sample from empty");
  return items_[rng() % items_.size()];
}

DenseNetwork make_qnet(int input_dim, int action_count, int hidden, Rng& rng) {
  return make_network(
      {input_dim, hidden, hidden, action_count},
      {Activation::Relu, Activation::Relu, Activation::Identity}, rng);
}

Vec q_values(const DenseNetwork& qnet, const Observation& x) {
  return forward(qnet, x.pixels);
}

int act_greedy(const DenseNetwork& qnet, const Observation& x) {
  return argmax_low(q_values(qnet, x));
}

double td_target(double r, bool done, double gamma, const Vec& q_next) {
  if (done) return r;
  return r + gamma * *std::max_element(q_next.begin(), q_next.end());
}

namespace {

double epsilon_at(const DQNConfig& cfg, int episode) {
  const double horizon = cfg.eps_decay_fraction * cfg.training_episodes;
  if (horizon <= 0.0) return cfg.eps_end;
  const double t = std::min(1.0, episode / horizon);
  return cfg.eps_start + t * (cfg.eps_end - cfg.eps_start);
}

}  // namespace

TrainedAgent train_dqn(Environment& env, const DQNConfig& cfg,
                       std::uint64_t seed, const TrainObserver* observer) {
  if (cfg.gamma < 0.0 || cfg.gamma >= 1.0)
    throw std::invalid_argument("train_dqn: gamma must be in [0,1)");
  if (cfg.eps_start < cfg.eps_end || cfg.eps_end < 0.0)
    throw std::invalid_argument("train_dqn: eps schedule invalid");

  const EnvDescriptor& desc = env.descriptor();
  Rng rng(seed);
  DenseNetwork qnet =
      make_qnet(desc.width * desc.height, desc.action_count, cfg.hidden_dim, rng);
  DenseNetwork target = qnet;
  ReplayBuffer replay(cfg.replay_capacity);
  OptimizerState opt =
      make_optimizer(OptimizerState::Kind::Adam, cfg.learning_rate, qnet);
  NetGrads grads = zero_grads_like(qnet);

  auto eval_env = make_env(desc.name);
  const std::uint64_t eval_seed = seed * 2654435761ull + 101;

  TrainedAgent result;
  DenseNetwork best;
  double best_return = -std::numeric_limits<double>::infinity();
  long global_step = 0;
  ForwardTrace trace;

  const std::size_t learn_start =
      std::max<std::size_t>(cfg.batch_size, cfg.learn_start);

  for (int episode = 0; episode < cfg.training_episodes; ++episode) {
    const double eps = epsilon_at(cfg, episode);
    Observation obs = env.reset(rng());
    bool done = false;
    while (!done) {
      int action;
      if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < eps)
        action = static_cast<int>(rng() % desc.action_count);
      else
        action = act_greedy(qnet, obs);

      StepResult sr = env.step(action);
      replay.push(Transition{obs.pixels, action, sr.reward,
                             sr.observation.pixels, sr.done});
      obs = std::move(sr.observation);
      done = sr.done;
      ++global_step;

      if (replay.size() >= learn_start) {
        grads.zero();
        double loss = 0.0;
        const double inv_b = 1.0 / cfg.batch_size;
        for (int k = 0; k < cfg.batch_size; ++k) {
          const Transition& t = replay.sample(rng);
          const Vec q_next = forward(target, t.s_next);
          const double y = td_target(t.r, t.done, cfg.gamma, q_next);
          const Vec& q = forward(qnet, t.s, trace);
          const double err = q[t.a] - y;
          loss += err * err * inv_b;
          Vec upstream(q.size(), 0.0);
          upstream[t.a] = 2.0 * err * inv_b;
          backward(qnet, trace, upstream, &grads);
        }
        if (!std::isfinite(loss))
          throw std::runtime_error("train_dqn: TD loss diverged (non-finite)");
        optimizer_step(opt, qnet, grads);
      }

      if (global_step % cfg.target_sync_every == 0) {
        target = qnet;
        if (observer && observer->after_sync)
          observer->after_sync(global_step, qnet, target);
      }
    }

    if (cfg.eval_every > 0 && (episode + 1) % cfg.eval_every == 0) {
      const EvalResult ev =
          evaluate(qnet, *eval_env, cfg.eval_episodes, eval_seed);
      result.curve.push_back(CurvePoint{episode + 1, global_step, ev.mean_return});
      if (ev.mean_return > best_return) {
        best_return = ev.mean_return;
        best = qnet;
      }
    }
  }

  if (best_return == -std::numeric_limits<double>::infinity()) best = qnet;
  result.final_eval_return =
      cfg.training_episodes > 0
          ? evaluate(best, *eval_env, cfg.final_eval_episodes, eval_seed).mean_return
          : 0.0;
  result.qnet = std::move(best);
  return result;
}

EvalResult evaluate(const DenseNetwork& qnet, Environment& env, int episodes,
                    std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  EvalResult res;
  for (int i = 0; i < episodes; ++i) {
    Observation obs = env.reset(seed + static_cast<std::uint64_t>(i));
    double ret = 0.0;
    bool done = false;
    while (!done) {
      StepResult sr = env.step(act_greedy(qnet, obs));
      ret += sr.reward;
      obs = std::move(sr.observation);
      done = sr.done;
    }
    res.per_episode.push_back(ret);
    res.mean_return += ret;
  }
  res.mean_return /= episodes;
  return res;
}

void save_agent(std::ostream& out, const AgentCheckpoint& ckpt) {
  out << "advrl-agent v1\n";
  out << "env " << ckpt.env_name << "\n";
  out << "seed " << ckpt.seed << "\n";
  out << "final_eval_return " << format_full(ckpt.final_eval_return) << "\n";
  const DQNConfig& c = ckpt.config;
  out << "config.learning_rate " << format_full(c.learning_rate) << "\n";
  out << "config.batch_size " << c.batch_size << "\n";
  out << "config.gamma " << format_full(c.gamma) << "\n";
  out << "config.target_sync_every " << c.target_sync_every << "\n";
  out << "config.replay_capacity " << c.replay_capacity << "\n";
  out << "config.training_episodes " << c.training_episodes << "\n";
  out << "config.eps_start " << format_full(c.eps_start) << "\n";
  out << "config.eps_end " << format_full(c.eps_end) << "\n";
  out << "config.eps_decay_fraction " << format_full(c.eps_decay_fraction) << "\n";
  out << "config.hidden_dim " << c.hidden_dim << "\n";
  out << "net\n";
  save_network(out, ckpt.qnet);
}

AgentCheckpoint load_agent(std::istream& in) {
  std::string tag, version;
  in >> tag >> version;
  if (tag != "advrl-agent" || version != "v1")
    throw std::runtime_error("load_agent: bad header");
  AgentCheckpoint ckpt;
  std::string key;
  while (in >> key) {
    if (key == "net") break;
    if (key == "env") in >> ckpt.env_name;
    else if (key == "seed") in >> ckpt.seed;
    else if (key == "final_eval_return") in >> ckpt.final_eval_return;
    else if (key == "config.learning_rate") in >> ckpt.config.learning_rate;
    else if (key == "config.batch_size") in >> ckpt.config.batch_size;
    else if (key == "config.gamma") in >> ckpt.config.gamma;
    else if (key == "config.target_sync_every") in >> ckpt.config.target_sync_every;
    else if (key == "config.replay_capacity") in >> ckpt.config.replay_capacity;
    else if (key == "config.training_episodes") in >> ckpt.config.training_episodes;
    else if (key == "config.eps_start") in >> ckpt.config.eps_start;
    else if (key == "config.eps_end") in >> ckpt.config.eps_end;
    else if (key == "config.eps_decay_fraction") in >> ckpt.config.eps_decay_fraction;
    else if (key == "config.hidden_dim") in >> ckpt.config.hidden_dim;
    else throw std::runtime_error("load_agent: unknown key '" + key + "'");
    if (!in) throw std::runtime_error("load_agent: truncated metadata");
  }
  if (key != "net") throw std::runtime_error("load_agent: missing net block");
  ckpt.qnet = load_network(in);
  return ckpt;
}

void write_training_curve_csv(std::ostream& out,
                              const std::vector<CurvePoint>& curve) {
  out << "episode,steps,eval_return\n";
  for (const CurvePoint& p : curve)
    out << p.episode << "," << p.steps << "," << format_full(p.eval_return)
        << "\n";
}

}  // namespace advrl
