#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace advrl {

using Vec = std::vector<double>;
using Rng = std::mt19937_64;

double mse(const Vec& a, const Vec& b);
double l2_norm(const Vec& v);

/// Numerically stable softmax (max subtraction). Entries >= 0, sum == 1.
Vec softmax(const Vec& v);

/// Index of the largest / smallest entry; ties resolve to the lowest index.
int argmax_low(const Vec& v);
int argmin_low(const Vec& v);

enum class Activation { Identity, Relu, Tanh, Sigmoid };

const char* activation_name(Activation act);
Activation activation_from_name(const std::string& name);

struct Layer {
  int in_dim = 0;
  int out_dim = 0;
  Vec w;  // row-major, out_dim x in_dim
  Vec b;  // out_dim
  Activation act = Activation::Identity;
};

struct DenseNetwork {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  std::size_t param_count() const;
};

/// Xavier-uniform weights, zero biases. dims has one entry per interface,
/// acts one entry per layer (dims.size() == acts.size() + 1).
DenseNetwork make_network(const std::vector<int>& dims,
                          const std::vector<Activation>& acts, Rng& rng);

struct ForwardTrace {
  Vec input;
  std::vector<Vec> pre;   // pre-activation, per layer
  std::vector<Vec> post;  // post-activation, per layer
};

Vec forward(const DenseNetwork& net, const Vec& x);
const Vec& forward(const DenseNetwork& net, const Vec& x, ForwardTrace& trace);

struct LayerGrads {
  Vec w;
  Vec b;
};

struct NetGrads {
  std::vector<LayerGrads> layers;

  void zero();
  void add(const NetGrads& other);
  void scale(double s);
};

NetGrads zero_grads_like(const DenseNetwork& net);

/// Backprop from an upstream gradient at the network output. Returns
/// d(objective)/d(input); accumulates parameter gradients into *grads
/// when non-null.
Vec backward(const DenseNetwork& net, const ForwardTrace& trace,
             const Vec& upstream, NetGrads* grads);

NetGrads backward_params(const DenseNetwork& net, const Vec& x,
                         const Vec& upstream);
Vec backward_input(const DenseNetwork& net, const Vec& x, const Vec& upstream);

void sgd_update(Vec& params, const Vec& grads, double lr);
void adam_update(Vec& params, const Vec& grads, Vec& m, Vec& v, long step,
                 double lr, double beta1, double beta2, double eps);

struct OptimizerState {
  enum class Kind { Sgd, Adam };

  Kind kind = Kind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<LayerGrads> m;  // adam first moments, shaped like the network
  std::vector<LayerGrads> v;  // adam second moments
};

OptimizerState make_optimizer(OptimizerState::Kind kind, double lr,
                              const DenseNetwork& net);
void optimizer_step(OptimizerState& state, DenseNetwork& net,
                    const NetGrads& grads);

/// Self-describing text checkpoint. load(save(net)) is value-exact.
void save_network(std::ostream& out, const DenseNetwork& net);
DenseNetwork load_network(std::istream& in);

}  // namespace advrl
