#pragma once

#include <string>

#include "advrl/env.hpp"
#include "advrl/numerics.hpp"

namespace advrl {

enum class AttackKind { None, Fgsm, Pgd, Cw, PgnTargeted, PgnUntargeted };

const char* attack_kind_name(AttackKind kind);

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double epsilon = 0.1;      // L-inf budget for fgsm/pgd
  int iterations = 50;       // pgd/cw inner iterations
  double step_size = 0.01;   // pgd; epsilon/10 by default
  double cw_c = 1.0;         // initial tradeoff constant
  double cw_lr = 0.01;
  int cw_search_steps = 4;   // outer binary-search rounds over c
  std::string pgn_checkpoint;
};

AttackSpec default_attack_spec(AttackKind kind);

struct AdversarialExample {
  Observation x;
  Observation x_adv;
  Vec delta;             // x_adv - x, entrywise
  bool success = false;  // argmax Q(x) != argmax Q(x_adv)
  double gen_time = 0.0;  // seconds spent generating x_adv
};

Vec clip01(Vec v);
Observation clip_observation(const Observation& like, Vec v);

struct LossGrad {
  double loss = 0.0;
  Vec grad;  // d(loss)/d(x)
};

/// Cross-entropy of softmax(Q(x)) against the greedy label at x itself.
LossGrad attack_loss(const DenseNetwork& qnet, const Vec& x);
/// Same surrogate with a fixed label (iterative attacks keep the clean label).
LossGrad attack_loss(const DenseNetwork& qnet, const Vec& x, int label);

AdversarialExample fgsm(const DenseNetwork& qnet, const Observation& x,
                        double epsilon);

AdversarialExample pgd(const DenseNetwork& qnet, const Observation& x,
                       double epsilon, int iterations, double step_size);

/// L2 attack in tanh space: minimizes ||delta||^2 + c * margin(x + delta)
/// with an outer binary search over c. Returns the successful example with
/// the smallest L2 distortion, else the final iterate with success=false.
AdversarialExample cw_l2(const DenseNetwork& qnet, const Observation& x,
                         int iterations, double c, double lr,
                         int search_steps);

/// Flat decimal dump of (x, delta, x_adv) for visualization.
void write_adversarial_example(std::ostream& out,
                               const AdversarialExample& ex);

}  // namespace advrl
