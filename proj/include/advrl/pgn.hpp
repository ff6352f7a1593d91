#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "advrl/env.hpp"
#include "advrl/numerics.hpp"

namespace advrl {

enum class PgnVariant { Autoencoder, Generator };
enum class PgnObjective { Targeted, Untargeted };

const char* pgn_variant_name(PgnVariant v);
const char* pgn_objective_name(PgnObjective o);
PgnVariant pgn_variant_from_name(const std::string& name);
PgnObjective pgn_objective_from_name(const std::string& name);

struct PGNConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 40;
  int collect_episodes = 20;
  double alpha = 1e-2;      // weight on the distance term
  double beta = 1.0;        // weight on the hinge term
  double kappa = 10.0;      // re-ranking boost, must be > 1
  double c_threshold = 0.1; // hinge budget on ||delta||_2
  PgnVariant variant = PgnVariant::Autoencoder;
  PgnObjective objective = PgnObjective::Targeted;
  int noise_dim = 16;
  int latent_dim = 32;
  int hidden_dim = 128;
  double delta_scale = 0.5;  // tanh head scaling, raw delta in [-0.5, 0.5]
};

struct PGNModel {
  PgnVariant variant = PgnVariant::Autoencoder;
  PgnObjective objective = PgnObjective::Targeted;
  int obs_dim = 0;
  int noise_dim = 0;
  double delta_scale = 0.5;
  // autoencoder: obs -> hidden -> latent -> hidden -> obs (bottleneck MLP);
  // generator: obs+noise -> hidden -> hidden -> obs; tanh output head either way
  DenseNetwork net;
};

PGNModel make_pgn(const PGNConfig& cfg, int obs_dim, Rng& rng);

struct Generated {
  Vec delta;        // raw generator output (pre-clip), scaled tanh head
  Observation h_x;  // clip(x + delta)
};

/// z is a standard-normal noise vector (generator variant); the autoencoder
/// variant ignores it. Deterministic given (model, x, z).
Generated generate(const PGNModel& model, const Observation& x, const Vec& z);

/// Euclidean distance between the original and adversarial observation.
double loss_lx(const Observation& x, const Observation& h_x);

/// Re-ranking: boosts the target entry to kappa * max(q), keeps the rest,
/// then softmax-normalizes. Requires kappa > 1. With max(q) > 0 the output
/// argmax lands on a_target and the non-target order is preserved.
Vec rerank(const Vec& q, int a_target, double kappa);

/// MSE between softmax(Q(h_x)) and the re-ranked target distribution built
/// from Q(x) at the clean minimum-Q action.
double loss_targeted(const DenseNetwork& qnet, const Observation& x,
                     const Observation& h_x, double kappa);

/// 10 - ln(d) with d = (Q(x,a*) - Q(h_x,a*))^2 clamped at 1e-12, a* the clean
/// greedy action; minimizing drives the Q gap apart.
double loss_untargeted(const DenseNetwork& qnet, const Observation& x,
                       const Observation& h_x);

/// max(||delta||_2 - c, 0)
double hinge(const Vec& delta, double c);

struct LossBreakdown {
  double l_x = 0.0;
  double l_y = 0.0;
  double l_c = 0.0;
  double total = 0.0;  // alpha*l_x + l_y + beta*l_c
};

LossBreakdown total_loss(const PGNModel& model, const DenseNetwork& qnet,
                         const Observation& x, const Vec& z,
                         const PGNConfig& cfg);

/// Loss plus parameter gradients through the frozen Q-network; gradients are
/// scaled by grad_weight and accumulated into *grads when non-null.
LossBreakdown pgn_loss_grads(const PGNModel& model, const DenseNetwork& qnet,
                             const Observation& x, const Vec& z,
                             const PGNConfig& cfg, NetGrads* grads,
                             double grad_weight);

/// Observations visited by greedy rollouts of the frozen victim, one entry
/// per executed step (episode i uses env seed (seed + i)).
std::vector<Observation> collect_dataset(const DenseNetwork& qnet,
                                         Environment& env, int episodes,
                                         std::uint64_t seed);

struct PgnTrainResult {
  PGNModel model;
  std::vector<LossBreakdown> curve;  // per-epoch mean
};

/// Minimizes the composite loss with Adam over the offline dataset. The
/// victim network is read-only. Throws on a non-finite loss, naming the
/// component that diverged.
PgnTrainResult train_pgn(const std::vector<Observation>& dataset,
                         const DenseNetwork& qnet_frozen, const PGNConfig& cfg,
                         std::uint64_t seed);

Vec draw_noise(int noise_dim, Rng& rng);

void save_pgn(std::ostream& out, const PGNModel& model, const PGNConfig& cfg);

struct PgnCheckpoint {
  PGNModel model;
  PGNConfig config;
};

PgnCheckpoint load_pgn(std::istream& in);

void write_loss_curve_csv(std::ostream& out,
                          const std::vector<LossBreakdown>& curve);

void save_dataset(std::ostream& out, const std::vector<Observation>& dataset);
std::vector<Observation> load_dataset(std::istream& in);

}  // namespace advrl
