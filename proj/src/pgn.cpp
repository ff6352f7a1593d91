#include "advrl/pgn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "advrl/agent.hpp"
#include "advrl/attacks.hpp"
#include "advrl/textio.hpp"

namespace advrl {

namespace {

constexpr double kLogClamp = 1e-12;

}  // namespace

const char* pgn_variant_name(PgnVariant v) {
  return v == PgnVariant::Autoencoder ? "autoencoder" : "generator";
}

const char* pgn_objective_name(PgnObjective o) {
  return o == PgnObjective::Targeted ? "targeted" : "untargeted";
}

PgnVariant pgn_variant_from_name(const std::string& name) {
  if (name == "autoencoder" || name == "ae") return PgnVariant::Autoencoder;
  if (name == "generator" || name == "gen") return PgnVariant::Generator;
  throw std::invalid_argument("unknown PGN variant: " + name);
}

PgnObjective pgn_objective_from_name(const std::string& name) {
  if (name == "targeted") return PgnObjective::Targeted;
  if (name == "untargeted") return PgnObjective::Untargeted;
  throw std::invalid_argument("unknown PGN objective: " + name);
}

PGNModel make_pgn(const PGNConfig& cfg, int obs_dim, Rng& rng) {
  if (cfg.kappa <= 1.0)
    throw std::invalid_argument("make_pgn: kappa must be > 1");
  if (cfg.c_threshold <= 0.0)
    throw std::invalid_argument("make_pgn: c_threshold must be > 0");
  if (cfg.alpha < 0.0 || cfg.beta < 0.0)
    throw std::invalid_argument("make_pgn: alpha/beta must be >= 0");
  if (obs_dim <= 0) throw std::invalid_argument("make_pgn: obs_dim must be > 0");

  PGNModel model;
  model.variant = cfg.variant;
  model.objective = cfg.objective;
  model.obs_dim = obs_dim;
  model.noise_dim = cfg.variant == PgnVariant::Generator ? cfg.noise_dim : 0;
  model.delta_scale = cfg.delta_scale;
  if (cfg.variant == PgnVariant::Autoencoder) {
    model.net = make_network(
        {obs_dim, cfg.hidden_dim, cfg.latent_dim, cfg.hidden_dim, obs_dim},
        {Activation::Relu, Activation::Tanh, Activation::Relu, Activation::Tanh},
        rng);
  } else {
    model.net = make_network(
        {obs_dim + cfg.noise_dim, cfg.hidden_dim, cfg.hidden_dim, obs_dim},
        {Activation::Relu, Activation::Relu, Activation::Tanh}, rng);
  }
  return model;
}

namespace {

Vec pgn_input(const PGNModel& model, const Observation& x, const Vec& z) {
  if (static_cast<int>(x.pixels.size()) != model.obs_dim)
    throw std::invalid_argument("pgn: observation length != obs_dim");
  if (model.variant == PgnVariant::Autoencoder) return x.pixels;
  if (static_cast<int>(z.size()) != model.noise_dim)
    throw std::invalid_argument("pgn: noise length != noise_dim");
  Vec in;
  in.reserve(x.pixels.size() + z.size());
  in.insert(in.end(), x.pixels.begin(), x.pixels.end());
  in.insert(in.end(), z.begin(), z.end());
  return in;
}

}  // namespace

Generated generate(const PGNModel& model, const Observation& x, const Vec& z) {
  const Vec in = pgn_input(model, x, z);
  Vec raw = forward(model.net, in);
  Generated g;
  g.delta.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    g.delta[i] = model.delta_scale * raw[i];
  Vec sum = x.pixels;
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g.delta[i];
  g.h_x = clip_observation(x, std::move(sum));
  return g;
}

double loss_lx(const Observation& x, const Observation& h_x) {
  if (x.pixels.size() != h_x.pixels.size())
    throw std::invalid_argument("loss_lx: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = x.pixels[i] - h_x.pixels[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

Vec rerank(const Vec& q, int a_target, double kappa) {
  if (a_target < 0 || a_target >= static_cast<int>(q.size()))
    throw std::invalid_argument("rerank: a_target out of range");
  if (kappa <= 1.0) throw std::invalid_argument("rerank: kappa must be > 1");
  Vec pre = q;
  pre[a_target] = kappa * *std::max_element(q.begin(), q.end());
  return softmax(pre);
}

double loss_targeted(const DenseNetwork& qnet, const Observation& x,
                     const Observation& h_x, double kappa) {
  const Vec q_clean = forward(qnet, x.pixels);
  const int a_target = argmin_low(q_clean);
  const Vec target = rerank(q_clean, a_target, kappa);
  const Vec p = softmax(forward(qnet, h_x.pixels));
  return mse(p, target);
}

double loss_untargeted(const DenseNetwork& qnet, const Observation& x,
                       const Observation& h_x) {
  const Vec q_clean = forward(qnet, x.pixels);
  const int a_star = argmax_low(q_clean);
  const Vec q_adv = forward(qnet, h_x.pixels);
  const double diff = q_clean[a_star] - q_adv[a_star];
  return 10.0 - std::log(std::max(diff * diff, kLogClamp));
}

double hinge(const Vec& delta, double c) {
  return std::max(l2_norm(delta) - c, 0.0);
}

LossBreakdown total_loss(const PGNModel& model, const DenseNetwork& qnet,
                         const Observation& x, const Vec& z,
                         const PGNConfig& cfg) {
  return pgn_loss_grads(model, qnet, x, z, cfg, nullptr, 1.0);
}

LossBreakdown pgn_loss_grads(const PGNModel& model, const DenseNetwork& qnet,
                             const Observation& x, const Vec& z,
                             const PGNConfig& cfg, NetGrads* grads,
                             double grad_weight) {
  const Vec in = pgn_input(model, x, z);
  ForwardTrace pgn_trace;
  const Vec& raw = forward(model.net, in, pgn_trace);
  const std::size_t n = raw.size();

  Vec delta(n);
  for (std::size_t i = 0; i < n; ++i) delta[i] = model.delta_scale * raw[i];

  // h = clip(x + delta); clipped entries block the gradient
  Vec h(n);
  std::vector<bool> inside(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x.pixels[i] + delta[i];
    inside[i] = v >= 0.0 && v <= 1.0;
    h[i] = std::clamp(v, 0.0, 1.0);
  }

  LossBreakdown out;
  out.l_x = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = h[i] - x.pixels[i];
    out.l_x += d * d;
  }
  out.l_x = std::sqrt(out.l_x);

  const Vec q_clean = forward(qnet, x.pixels);
  ForwardTrace q_trace;
  const Vec& q_adv = forward(qnet, h, q_trace);
  const int actions = static_cast<int>(q_adv.size());

  Vec upstream_q(actions, 0.0);
  if (model.objective == PgnObjective::Targeted) {
    const int a_target = argmin_low(q_clean);
    const Vec target = rerank(q_clean, a_target, cfg.kappa);
    const Vec p = softmax(q_adv);
    out.l_y = mse(p, target);
    // d(mse)/dq through the softmax jacobian: p .* (g - <g,p>)
    Vec g(actions);
    double gp = 0.0;
    for (int a = 0; a < actions; ++a) {
      g[a] = 2.0 * (p[a] - target[a]) / actions;
      gp += g[a] * p[a];
    }
    for (int a = 0; a < actions; ++a) upstream_q[a] = p[a] * (g[a] - gp);
  } else {
    const int a_star = argmax_low(q_clean);
    const double diff = q_clean[a_star] - q_adv[a_star];
    const double d = diff * diff;
    out.l_y = 10.0 - std::log(std::max(d, kLogClamp));
    if (d > kLogClamp) upstream_q[a_star] = 2.0 / diff;
  }

  const double norm_delta = l2_norm(delta);
  out.l_c = std::max(norm_delta - cfg.c_threshold, 0.0);
  out.total = cfg.alpha * out.l_x + out.l_y + cfg.beta * out.l_c;

  if (!grads) return out;

  const Vec grad_h = backward(qnet, q_trace, upstream_q, nullptr);

  Vec grad_delta(n, 0.0);
  const bool hinge_active = norm_delta > cfg.c_threshold;
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    if (inside[i]) {
      if (out.l_x > kLogClamp)
        g += cfg.alpha * (h[i] - x.pixels[i]) / out.l_x;
      g += grad_h[i];
    }
    if (hinge_active) g += cfg.beta * delta[i] / norm_delta;
    grad_delta[i] = g;
  }

  Vec upstream_raw(n);
  for (std::size_t i = 0; i < n; ++i)
    upstream_raw[i] = grad_weight * model.delta_scale * grad_delta[i];
  backward(model.net, pgn_trace, upstream_raw, grads);
  return out;
}

std::vector<Observation> collect_dataset(const DenseNetwork& qnet,
                                         Environment& env, int episodes,
                                         std::uint64_t seed) {
  if (episodes < 0)
    throw std::invalid_argument("collect_dataset: episodes must be >= 0");
  std::vector<Observation> data;
  for (int ep = 0; ep < episodes; ++ep) {
    Observation obs = env.reset(seed + static_cast<std::uint64_t>(ep));
    bool done = false;
    while (!done) {
      data.push_back(obs);
      StepResult sr = env.step(act_greedy(qnet, obs));
      obs = std::move(sr.observation);
      done = sr.done;
    }
  }
  return data;
}

Vec draw_noise(int noise_dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec z(noise_dim);
  for (double& v : z) v = normal(rng);
  return z;
}

PgnTrainResult train_pgn(const std::vector<Observation>& dataset,
                         const DenseNetwork& qnet_frozen, const PGNConfig& cfg,
                         std::uint64_t seed) {
  if (dataset.empty())
    throw std::invalid_argument("train_pgn: dataset is empty");
  if (cfg.batch_size < 1 || cfg.epochs < 0)
    throw std::invalid_argument("train_pgn: bad batch_size/epochs");

  Rng rng(seed);
  PgnTrainResult result;
  result.model = make_pgn(cfg, static_cast<int>(dataset.front().pixels.size()), rng);
  PGNModel& model = result.model;

  OptimizerState opt =
      make_optimizer(OptimizerState::Kind::Adam, cfg.learning_rate, model.net);
  NetGrads grads = zero_grads_like(model.net);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  const Vec no_noise;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_mean;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double w = 1.0 / static_cast<double>(stop - start);
      grads.zero();
      for (std::size_t k = start; k < stop; ++k) {
        const Observation& x = dataset[order[k]];
        const Vec z = model.variant == PgnVariant::Generator
                          ? draw_noise(model.noise_dim, rng)
                          : no_noise;
        const LossBreakdown lb =
            pgn_loss_grads(model, qnet_frozen, x, z, cfg, &grads, w);
        if (!std::isfinite(lb.total)) {
          std::string which = !std::isfinite(lb.l_x)   ? "l_x"
                              : !std::isfinite(lb.l_y) ? "l_y"
                              : !std::isfinite(lb.l_c) ? "l_c"
                                                       : "total";
          throw std::runtime_error("train_pgn: loss diverged in component " +
                                   which);
        }
        epoch_mean.l_x += lb.l_x;
        epoch_mean.l_y += lb.l_y;
        epoch_mean.l_c += lb.l_c;
        epoch_mean.total += lb.total;
      }
      optimizer_step(opt, model.net, grads);
    }
    const double inv = 1.0 / static_cast<double>(dataset.size());
    epoch_mean.l_x *= inv;
    epoch_mean.l_y *= inv;
    epoch_mean.l_c *= inv;
    epoch_mean.total *= inv;
    result.curve.push_back(epoch_mean);
  }
  return result;
}

void save_pgn(std::ostream& out, const PGNModel& model, const PGNConfig& cfg) {
  out << "advrl-pgn v1\n";
  out << "variant " << pgn_variant_name(model.variant) << "\n";
  out << "objective " << pgn_objective_name(model.objective) << "\n";
  out << "obs_dim " << model.obs_dim << "\n";
  out << "noise_dim " << model.noise_dim << "\n";
  out << "delta_scale " << format_full(model.delta_scale) << "\n";
  out << "config.learning_rate " << format_full(cfg.learning_rate) << "\n";
  out << "config.batch_size " << cfg.batch_size << "\n";
  out << "config.epochs " << cfg.epochs << "\n";
  out << "config.collect_episodes " << cfg.collect_episodes << "\n";
  out << "config.alpha " << format_full(cfg.alpha) << "\n";
  out << "config.beta " << format_full(cfg.beta) << "\n";
  out << "config.kappa " << format_full(cfg.kappa) << "\n";
  out << "config.c_threshold " << format_full(cfg.c_threshold) << "\n";
  out << "config.latent_dim " << cfg.latent_dim << "\n";
  out << "config.hidden_dim " << cfg.hidden_dim << "\n";
  out << "net\n";
  save_network(out, model.net);
}

PgnCheckpoint load_pgn(std::istream& in) {
  std::string tag, version;
  in >> tag >> version;
  if (tag != "advrl-pgn" || version != "v1")
    throw std::runtime_error("load_pgn: bad header");
  PgnCheckpoint ckpt;
  std::string key, value;
  while (in >> key) {
    if (key == "net") break;
    if (key == "variant") {
      in >> value;
      ckpt.model.variant = pgn_variant_from_name(value);
      ckpt.config.variant = ckpt.model.variant;
    } else if (key == "objective") {
      in >> value;
      ckpt.model.objective = pgn_objective_from_name(value);
      ckpt.config.objective = ckpt.model.objective;
    } else if (key == "obs_dim") in >> ckpt.model.obs_dim;
    else if (key == "noise_dim") in >> ckpt.model.noise_dim;
    else if (key == "delta_scale") in >> ckpt.model.delta_scale;
    else if (key == "config.learning_rate") in >> ckpt.config.learning_rate;
    else if (key == "config.batch_size") in >> ckpt.config.batch_size;
    else if (key == "config.epochs") in >> ckpt.config.epochs;
    else if (key == "config.collect_episodes") in >> ckpt.config.collect_episodes;
    else if (key == "config.alpha") in >> ckpt.config.alpha;
    else if (key == "config.beta") in >> ckpt.config.beta;
    else if (key == "config.kappa") in >> ckpt.config.kappa;
    else if (key == "config.c_threshold") in >> ckpt.config.c_threshold;
    else if (key == "config.latent_dim") in >> ckpt.config.latent_dim;
    else if (key == "config.hidden_dim") in >> ckpt.config.hidden_dim;
    else throw std::runtime_error("load_pgn: unknown key '" + key + "'");
    if (!in) throw std::runtime_error("load_pgn: truncated metadata");
  }
  if (key != "net") throw std::runtime_error("load_pgn: missing net block");
  ckpt.model.net = load_network(in);
  ckpt.config.noise_dim = ckpt.model.noise_dim;
  ckpt.config.delta_scale = ckpt.model.delta_scale;
  return ckpt;
}

void write_loss_curve_csv(std::ostream& out,
                          const std::vector<LossBreakdown>& curve) {
  out << "epoch,l_x,l_y,l_c,total\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    out << i << "," << format_full(curve[i].l_x) << ","
        << format_full(curve[i].l_y) << "," << format_full(curve[i].l_c) << ","
        << format_full(curve[i].total) << "\n";
}

void save_dataset(std::ostream& out, const std::vector<Observation>& dataset) {
  out << "advrl-dataset v1\n";
  const int w = dataset.empty() ? 0 : dataset.front().width;
  const int h = dataset.empty() ? 0 : dataset.front().height;
  out << "count " << dataset.size() << " width " << w << " height " << h << "\n";
  for (const Observation& obs : dataset) {
    out << "x";
    for (double v : obs.pixels) out << " " << format_full(v);
    out << "\n";
  }
}

std::vector<Observation> load_dataset(std::istream& in) {
  std::string tag, version, key;
  in >> tag >> version;
  if (tag != "advrl-dataset" || version != "v1")
    throw std::runtime_error("load_dataset: bad header");
  std::size_t count = 0;
  int w = 0, h = 0;
  in >> key >> count;
  if (key != "count") throw std::runtime_error("load_dataset: missing count");
  in >> key >> w;
  if (key != "width") throw std::runtime_error("load_dataset: missing width");
  in >> key >> h;
  if (key != "height") throw std::runtime_error("load_dataset: missing height");
  std::vector<Observation> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    in >> key;
    if (key != "x") throw std::runtime_error("load_dataset: missing row");
    data[i].width = w;
    data[i].height = h;
    data[i].pixels.resize(static_cast<std::size_t>(w) * h);
    for (double& v : data[i].pixels) in >> v;
    if (!in) throw std::runtime_error("load_dataset: truncated file");
  }
  return data;
}

}  // namespace advrl
