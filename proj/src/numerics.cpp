#include "advrl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace advrl {

double mse(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("mse: length mismatch or empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double l2_norm(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

Vec softmax(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

int argmax_low(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("argmax_low: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

int argmin_low(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("argmin_low: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  throw std::logic_error("activation_name: bad tag");
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + name);
}

std::size_t DenseNetwork::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

DenseNetwork make_network(const std::vector<int>& dims,
                          const std::vector<Activation>& acts, Rng& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw std::invalid_argument("make_network: dims/acts size mismatch");
  DenseNetwork net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] <= 0 || dims[i + 1] <= 0)
      throw std::invalid_argument("make_network: non-positive dimension");
    Layer l;
    l.in_dim = dims[i];
    l.out_dim = dims[i + 1];
    l.act = acts[i];
    const double limit = std::sqrt(6.0 / (l.in_dim + l.out_dim));
    std::uniform_real_distribution<double> u(-limit, limit);
    l.w.resize(static_cast<std::size_t>(l.in_dim) * l.out_dim);
    for (double& w : l.w) w = u(rng);
    l.b.assign(l.out_dim, 0.0);
    net.layers.push_back(std::move(l));
  }
  return net;
}

namespace {

inline double apply_act(Activation act, double z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// derivative from (pre, post) pair, cheap forms where available
inline double act_deriv(Activation act, double pre, double post) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

inline void affine(const Layer& l, const Vec& x, Vec& out) {
  out.resize(l.out_dim);
  const double* wp = l.w.data();
  for (int r = 0; r < l.out_dim; ++r) {
    double acc = l.b[r];
    const double* row = wp + static_cast<std::size_t>(r) * l.in_dim;
    for (int c = 0; c < l.in_dim; ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
}

void check_finite_input(const DenseNetwork& net, const Vec& x,
                        const char* who) {
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument(std::string(who) + ": input length " +
                                std::to_string(x.size()) + " != input_dim " +
                                std::to_string(net.input_dim()));
}

}  // namespace

const Vec& forward(const DenseNetwork& net, const Vec& x, ForwardTrace& trace) {
  check_finite_input(net, x, "forward");
  trace.input = x;
  trace.pre.resize(net.layers.size());
  trace.post.resize(net.layers.size());
  const Vec* cur = &trace.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    affine(l, *cur, trace.pre[i]);
    trace.post[i].resize(l.out_dim);
    for (int r = 0; r < l.out_dim; ++r)
      trace.post[i][r] = apply_act(l.act, trace.pre[i][r]);
    cur = &trace.post[i];
  }
  return *cur;
}

Vec forward(const DenseNetwork& net, const Vec& x) {
  ForwardTrace trace;
  return forward(net, x, trace);
}

void NetGrads::zero() {
  for (LayerGrads& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void NetGrads::add(const NetGrads& other) {
  if (layers.size() != other.layers.size())
    throw std::invalid_argument("NetGrads::add: shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].w.size() != other.layers[i].w.size() ||
        layers[i].b.size() != other.layers[i].b.size())
      throw std::invalid_argument("NetGrads::add: shape mismatch");
    for (std::size_t j = 0; j < layers[i].w.size(); ++j)
      layers[i].w[j] += other.layers[i].w[j];
    for (std::size_t j = 0; j < layers[i].b.size(); ++j)
      layers[i].b[j] += other.layers[i].b[j];
  }
}

void NetGrads::scale(double s) {
  for (LayerGrads& l : layers) {
    for (double& x : l.w) x *= s;
    for (double& x : l.b) x *= s;
  }
}

NetGrads zero_grads_like(const DenseNetwork& net) {
  NetGrads g;
  g.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    g.layers[i].w.assign(net.layers[i].w.size(), 0.0);
    g.layers[i].b.assign(net.layers[i].b.size(), 0.0);
  }
  return g;
}

Vec backward(const DenseNetwork& net, const ForwardTrace& trace,
             const Vec& upstream, NetGrads* grads) {
  if (trace.post.size() != net.layers.size())
    throw std::invalid_argument("backward: trace does not match network");
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw std::invalid_argument("backward: upstream length != output_dim");
  if (grads && grads->layers.size() != net.layers.size())
    throw std::invalid_argument("backward: grads shape mismatch");

  Vec g = upstream;
  Vec g_pre;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& l = net.layers[i];
    g_pre.resize(l.out_dim);
    for (int r = 0; r < l.out_dim; ++r)
      g_pre[r] = g[r] * act_deriv(l.act, trace.pre[i][r], trace.post[i][r]);

    const Vec& in = (i == 0) ? trace.input : trace.post[i - 1];
    if (grads) {
      LayerGrads& lg = grads->layers[i];
      for (int r = 0; r < l.out_dim; ++r) {
        const double gr = g_pre[r];
        double* wrow = lg.w.data() + static_cast<std::size_t>(r) * l.in_dim;
        for (int c = 0; c < l.in_dim; ++c) wrow[c] += gr * in[c];
        lg.b[r] += gr;
      }
    }

    Vec g_in(l.in_dim, 0.0);
    for (int r = 0; r < l.out_dim; ++r) {
      const double gr = g_pre[r];
      const double* wrow = l.w.data() + static_cast<std::size_t>(r) * l.in_dim;
      for (int c = 0; c < l.in_dim; ++c) g_in[c] += gr * wrow[c];
    }
    g = std::move(g_in);
  }
  return g;
}

NetGrads backward_params(const DenseNetwork& net, const Vec& x,
                         const Vec& upstream) {
  ForwardTrace trace;
  forward(net, x, trace);
  NetGrads grads = zero_grads_like(net);
  backward(net, trace, upstream, &grads);
  return grads;
}

Vec backward_input(const DenseNetwork& net, const Vec& x, const Vec& upstream) {
  ForwardTrace trace;
  forward(net, x, trace);
  return backward(net, trace, upstream, nullptr);
}

void sgd_update(Vec& params, const Vec& grads, double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("sgd_update: shape mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

void adam_update(Vec& params, const Vec& grads, Vec& m, Vec& v, long step,
                 double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || m.size() != params.size() ||
      v.size() != params.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

OptimizerState make_optimizer(OptimizerState::Kind kind, double lr,
                              const DenseNetwork& net) {
  if (lr < 0.0) throw std::invalid_argument("make_optimizer: lr must be >= 0");
  OptimizerState s;
  s.kind = kind;
  s.learning_rate = lr;
  if (kind == OptimizerState::Kind::Adam) {
    NetGrads z = zero_grads_like(net);
    s.m = z.layers;
    s.v = z.layers;
  }
  return s;
}

void optimizer_step(OptimizerState& state, DenseNetwork& net,
                    const NetGrads& grads) {
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("optimizer_step: grads shape mismatch");
  ++state.step;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& l = net.layers[i];
    const LayerGrads& g = grads.layers[i];
    if (state.kind == OptimizerState::Kind::Sgd) {
      sgd_update(l.w, g.w, state.learning_rate);
      sgd_update(l.b, g.b, state.learning_rate);
    } else {
      adam_update(l.w, g.w, state.m[i].w, state.v[i].w, state.step,
                  state.learning_rate, state.beta1, state.beta2, state.eps);
      adam_update(l.b, g.b, state.m[i].b, state.v[i].b, state.step,
                  state.learning_rate, state.beta1, state.beta2, state.eps);
    }
  }
}

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void save_network(std::ostream& out, const DenseNetwork& net) {
  out << "advrl-net v1\n";
  out << "layers " << net.layers.size() << "\n";
  for (const Layer& l : net.layers) {
    out << "layer " << l.in_dim << " " << l.out_dim << " "
        << activation_name(l.act) << "\n";
    for (int r = 0; r < l.out_dim; ++r) {
      out << "w";
      const double* row = l.w.data() + static_cast<std::size_t>(r) * l.in_dim;
      for (int c = 0; c < l.in_dim; ++c) out << " " << fmt_double(row[c]);
      out << "\n";
    }
    out << "b";
    for (int r = 0; r < l.out_dim; ++r) out << " " << fmt_double(l.b[r]);
    out << "\n";
  }
}

DenseNetwork load_network(std::istream& in) {
  std::string tag, version;
  in >> tag >> version;
  if (tag != "advrl-net" || version != "v1")
    throw std::runtime_error("load_network: bad header");
  std::string key;
  std::size_t n_layers = 0;
  in >> key >> n_layers;
  if (key != "layers") throw std::runtime_error("load_network: missing layers");
  DenseNetwork net;
  for (std::size_t i = 0; i < n_layers; ++i) {
    Layer l;
    std::string act_name;
    in >> key >> l.in_dim >> l.out_dim >> act_name;
    if (key != "layer" || l.in_dim <= 0 || l.out_dim <= 0)
      throw std::runtime_error("load_network: bad layer header");
    l.act = activation_from_name(act_name);
    l.w.resize(static_cast<std::size_t>(l.in_dim) * l.out_dim);
    for (int r = 0; r < l.out_dim; ++r) {
      in >> key;
      if (key != "w") throw std::runtime_error("load_network: missing w row");
      for (int c = 0; c < l.in_dim; ++c)
        in >> l.w[static_cast<std::size_t>(r) * l.in_dim + c];
    }
    in >> key;
    if (key != "b") throw std::runtime_error("load_network: missing b");
    l.b.resize(l.out_dim);
    for (int r = 0; r < l.out_dim; ++r) in >> l.b[r];
    if (!in) throw std::runtime_error("load_network: truncated file");
    net.layers.push_back(std::move(l));
  }
  for (std::size_t i = 1; i < net.layers.size(); ++i)
    if (net.layers[i].in_dim != net.layers[i - 1].out_dim)
      throw std::runtime_error("load_network: layer dimension chain broken");
  return net;
}

}  // namespace advrl
