#include "advrl/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "advrl/textio.hpp"

namespace advrl {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

bool argmax_changed(const DenseNetwork& qnet, const Observation& x,
                    const Observation& x_adv) {
  return argmax_low(forward(qnet, x.pixels)) !=
         argmax_low(forward(qnet, x_adv.pixels));
}

AdversarialExample finish(const DenseNetwork& qnet, const Observation& x,
                          Vec adv_pixels, Clock::time_point t0) {
  AdversarialExample ex;
  ex.x = x;
  ex.x_adv = clip_observation(x, std::move(adv_pixels));
  ex.delta.resize(x.pixels.size());
  for (std::size_t i = 0; i < x.pixels.size(); ++i)
    ex.delta[i] = ex.x_adv.pixels[i] - x.pixels[i];
  ex.success = argmax_changed(qnet, x, ex.x_adv);
  ex.gen_time = seconds_since(t0);
  return ex;
}

}  // namespace

const char* attack_kind_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::Fgsm: return "fgsm";
    case AttackKind::Pgd: return "pgd";
    case AttackKind::Cw: return "cw";
    case AttackKind::PgnTargeted: return "t-pgn";
    case AttackKind::PgnUntargeted: return "u-pgn";
  }
  throw std::logic_error("attack_kind_name: bad tag");
}

AttackSpec default_attack_spec(AttackKind kind) {
  AttackSpec spec;
  spec.kind = kind;
  spec.epsilon = 0.1;
  spec.iterations = 50;
  spec.step_size = spec.epsilon / 10.0;
  spec.cw_c = 1.0;
  spec.cw_lr = 0.01;
  spec.cw_search_steps = 4;
  return spec;
}

Vec clip01(Vec v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  return v;
}

Observation clip_observation(const Observation& like, Vec v) {
  if (v.size() != like.pixels.size())
    throw std::invalid_argument("clip_observation: length mismatch");
  Observation obs;
  obs.width = like.width;
  obs.height = like.height;
  obs.pixels = clip01(std::move(v));
  return obs;
}

LossGrad attack_loss(const DenseNetwork& qnet, const Vec& x) {
  return attack_loss(qnet, x, argmax_low(forward(qnet, x)));
}

LossGrad attack_loss(const DenseNetwork& qnet, const Vec& x, int label) {
  ForwardTrace trace;
  const Vec& q = forward(qnet, x, trace);
  if (label < 0 || label >= static_cast<int>(q.size()))
    throw std::invalid_argument("attack_loss: label out of range");
  const Vec p = softmax(q);
  LossGrad out;
  out.loss = -std::log(std::max(p[label], 1e-300));
  Vec upstream = p;
  upstream[label] -= 1.0;
  out.grad = backward(qnet, trace, upstream, nullptr);
  return out;
}

AdversarialExample fgsm(const DenseNetwork& qnet, const Observation& x,
                        double epsilon) {
  if (epsilon < 0.0) throw std::invalid_argument("fgsm: epsilon must be >= 0");
  const auto t0 = Clock::now();
  const LossGrad lg = attack_loss(qnet, x.pixels);
  Vec adv = x.pixels;
  for (std::size_t i = 0; i < adv.size(); ++i)
    adv[i] += epsilon * sign(lg.grad[i]);
  return finish(qnet, x, std::move(adv), t0);
}

AdversarialExample pgd(const DenseNetwork& qnet, const Observation& x,
                       double epsilon, int iterations, double step_size) {
  if (epsilon < 0.0) throw std::invalid_argument("pgd: epsilon must be >= 0");
  if (iterations < 1) throw std::invalid_argument("pgd: iterations must be >= 1");
  const auto t0 = Clock::now();
  const int label = argmax_low(forward(qnet, x.pixels));
  Vec cur = x.pixels;
  for (int it = 0; it < iterations; ++it) {
    const LossGrad lg = attack_loss(qnet, cur, label);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      double v = cur[i] + step_size * sign(lg.grad[i]);
      v = std::clamp(v, x.pixels[i] - epsilon, x.pixels[i] + epsilon);
      cur[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  return finish(qnet, x, std::move(cur), t0);
}

namespace {

// x_adv = (tanh(w) + 1) / 2, elementwise
void tanh_space_decode(const Vec& w, Vec& x_adv) {
  x_adv.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    x_adv[i] = 0.5 * (std::tanh(w[i]) + 1.0);
}

}  // namespace

AdversarialExample cw_l2(const DenseNetwork& qnet, const Observation& x,
                         int iterations, double c, double lr,
                         int search_steps) {
  if (iterations < 1)
    throw std::invalid_argument("cw_l2: iterations must be >= 1");
  if (search_steps < 1)
    throw std::invalid_argument("cw_l2: search_steps must be >= 1");
  const auto t0 = Clock::now();

  const int label = argmax_low(forward(qnet, x.pixels));
  const std::size_t n = x.pixels.size();

  // atanh(2x - 1), pulled off the interval ends: exactly-saturated pixels
  // (all of them, for these binary frames) would otherwise start with a
  // vanishing tanh derivative and freeze the attack
  constexpr double kBoundary = 0.02;
  Vec w0(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = std::clamp(x.pixels[i], kBoundary, 1.0 - kBoundary);
    w0[i] = std::atanh(2.0 * v - 1.0);
  }

  Vec best_adv;
  double best_l2 = std::numeric_limits<double>::infinity();
  Vec last_adv;

  double c_lo = 0.0;
  double c_hi = std::numeric_limits<double>::infinity();
  double c_cur = c;

  Vec x_adv, grad_w, m, v2;
  ForwardTrace trace;
  for (int round = 0; round < search_steps; ++round) {
    Vec w = w0;
    m.assign(n, 0.0);
    v2.assign(n, 0.0);
    bool round_success = false;

    for (int it = 0; it <= iterations; ++it) {
      tanh_space_decode(w, x_adv);
      const Vec& q = forward(qnet, x_adv, trace);
      const int pred = argmax_low(q);
      if (pred != label) {
        round_success = true;
        double l2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = x_adv[i] - x.pixels[i];
          l2 += d * d;
        }
        if (l2 < best_l2) {
          best_l2 = l2;
          best_adv = x_adv;
        }
      }
      if (it == iterations) break;

      // margin f = max(q[label] - max_{a != label} q[a], 0)
      int runner = label == 0 ? 1 : 0;
      for (int a = 0; a < static_cast<int>(q.size()); ++a)
        if (a != label && q[a] > q[runner]) runner = a;
      const double margin = q[label] - q[runner];

      Vec grad_x(n, 0.0);
      if (c_cur > 0.0 && margin > 0.0) {
        Vec upstream(q.size(), 0.0);
        upstream[label] = c_cur;
        upstream[runner] = -c_cur;
        grad_x = backward(qnet, trace, upstream, nullptr);
      }
      for (std::size_t i = 0; i < n; ++i)
        grad_x[i] += 2.0 * (x_adv[i] - x.pixels[i]);

      grad_w.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double th = 2.0 * x_adv[i] - 1.0;  // tanh(w_i)
        grad_w[i] = grad_x[i] * 0.5 * (1.0 - th * th);
      }
      adam_update(w, grad_w, m, v2, it + 1, lr, 0.9, 0.999, 1e-8);
    }
    last_adv = x_adv;

    // standard c schedule: shrink on success, grow when no bound known
    if (round_success) {
      c_hi = c_cur;
      c_cur = 0.5 * (c_lo + c_hi);
    } else {
      c_lo = c_cur;
      c_cur = std::isinf(c_hi) ? c_cur * 10.0 : 0.5 * (c_lo + c_hi);
    }
  }

  Vec chosen = best_adv.empty() ? std::move(last_adv) : std::move(best_adv);
  return finish(qnet, x, std::move(chosen), t0);
}

void write_adversarial_example(std::ostream& out,
                               const AdversarialExample& ex) {
  out << "advrl-example v1\n";
  out << "width " << ex.x.width << " height " << ex.x.height << " success "
      << (ex.success ? 1 : 0) << "\n";
  const auto row = [&out](const char* tag, const Vec& v) {
    out << tag;
    for (double x : v) out << " " << format_full(x);
    out << "\n";
  };
  row("x", ex.x.pixels);
  row("delta", ex.delta);
  row("x_adv", ex.x_adv.pixels);
}

}  // namespace advrl
