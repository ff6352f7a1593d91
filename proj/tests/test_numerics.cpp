#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "advrl/numerics.hpp"
#include "fd_check.hpp"

using namespace advrl;
using namespace advrl::testutil;

namespace {

DenseNetwork identity_layer(int dim, Activation act) {
  DenseNetwork net;
  Layer l;
  l.in_dim = dim;
  l.out_dim = dim;
  l.act = act;
  l.w.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int i = 0; i < dim; ++i) l.w[i * dim + i] = 1.0;
  l.b.assign(dim, 0.0);
  net.layers.push_back(l);
  return net;
}

DenseNetwork random_net(const std::vector<int>& dims,
                        const std::vector<Activation>& acts, std::uint64_t seed) {
  Rng rng(seed);
  return make_network(dims, acts, rng);
}

}  // namespace

TEST_CASE("forward: identity and relu layers") {
  DenseNetwork id = identity_layer(2, Activation::Identity);
  CHECK(forward(id, {1.0, 2.0}) == Vec{1.0, 2.0});

  DenseNetwork relu = identity_layer(2, Activation::Relu);
  CHECK(forward(relu, {-1.0, 3.0}) == Vec{0.0, 3.0});
}

TEST_CASE("forward: matches a hand-rolled matrix-multiply oracle") {
  DenseNetwork net = random_net({3, 4, 2}, {Activation::Tanh, Activation::Identity}, 11);
  const Vec x = {0.3, -0.7, 1.1};

  // naive re-computation, independent of the library forward
  Vec h(4, 0.0);
  for (int r = 0; r < 4; ++r) {
    double acc = net.layers[0].b[r];
    for (int c = 0; c < 3; ++c) acc += net.layers[0].w[r * 3 + c] * x[c];
    h[r] = std::tanh(acc);
  }
  Vec y(2, 0.0);
  for (int r = 0; r < 2; ++r) {
    double acc = net.layers[1].b[r];
    for (int c = 0; c < 4; ++c) acc += net.layers[1].w[r * 4 + c] * h[c];
    y[r] = acc;
  }

  const Vec out = forward(net, x);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(y[0]).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(y[1]).epsilon(1e-15));
}

TEST_CASE("forward: deterministic and pure") {
  DenseNetwork net = random_net({5, 8, 3}, {Activation::Relu, Activation::Identity}, 3);
  const Vec x = {0.1, 0.2, 0.3, 0.4, 0.5};
  const Vec a = forward(net, x);
  const Vec b = forward(net, x);
  CHECK(a == b);
}

TEST_CASE("forward: rejects dimension mismatch") {
  DenseNetwork net = identity_layer(2, Activation::Identity);
  CHECK_THROWS_AS(forward(net, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("backward_params: linear chain rule") {
  DenseNetwork net;
  Layer l;
  l.in_dim = 1;
  l.out_dim = 1;
  l.w = {3.0};
  l.b = {0.0};
  l.act = Activation::Identity;
  net.layers.push_back(l);

  const NetGrads g = backward_params(net, {2.0}, {1.0});
  CHECK(g.layers[0].w[0] == 2.0);  // dy/dW = x
  CHECK(g.layers[0].b[0] == 1.0);
}

TEST_CASE("backward_params: zero upstream gives zero gradients") {
  DenseNetwork net = random_net({4, 6, 2}, {Activation::Sigmoid, Activation::Identity}, 5);
  const NetGrads g = backward_params(net, {0.5, -0.2, 0.9, 0.1}, {0.0, 0.0});
  for (const LayerGrads& lg : g.layers) {
    for (double v : lg.w) CHECK(v == 0.0);
    for (double v : lg.b) CHECK(v == 0.0);
  }
}

TEST_CASE("backward_params: finite differences over 20 random nets") {
  const std::vector<Activation> act_pool = {Activation::Relu, Activation::Tanh,
                                            Activation::Sigmoid};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 7919 + 1);
    const int in = 2 + static_cast<int>(rng() % 5);
    const int hid = 3 + static_cast<int>(rng() % 6);
    const int out = 1 + static_cast<int>(rng() % 3);
    const Activation a0 = act_pool[rng() % act_pool.size()];
    DenseNetwork net = make_network({in, hid, out}, {a0, Activation::Identity}, rng);

    Vec x(in), upstream(out);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : x) v = u(rng);
    for (double& v : upstream) v = u(rng);

    const NetGrads analytic = backward_params(net, x, upstream);
    auto objective = [&](const DenseNetwork& n) {
      const Vec y = forward(n, x);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
      return acc;
    };

    std::vector<double> got, want;
    for (const ParamRef& r : all_params(net)) {
      got.push_back(grad_at(analytic, r));
      want.push_back(fd_param(net, r, objective));
    }
    CHECK(max_rel_err(got, want) < 1e-5);
  }
}

TEST_CASE("backward_input: single weight") {
  DenseNetwork net;
  Layer l;
  l.in_dim = 1;
  l.out_dim = 1;
  l.w = {2.0};
  l.b = {0.0};
  l.act = Activation::Identity;
  net.layers.push_back(l);
  CHECK(backward_input(net, {5.0}, {1.0}) == Vec{2.0});
}

TEST_CASE("backward_input: finite differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    DenseNetwork net = make_network({4, 7, 3},
                                    {Activation::Tanh, Activation::Identity}, rng);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec x(4), upstream(3);
    for (double& v : x) v = u(rng);
    for (double& v : upstream) v = u(rng);

    const Vec analytic = backward_input(net, x, upstream);
    auto objective = [&](const Vec& xv) {
      const Vec y = forward(net, xv);
      double acc = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) acc += upstream[i] * y[i];
      return acc;
    };
    std::vector<double> want;
    for (std::size_t i = 0; i < x.size(); ++i)
      want.push_back(fd_input(x, i, objective));
    CHECK(max_rel_err(analytic, want) < 1e-5);
  }
}

TEST_CASE("backward_input: composed nets match end-to-end finite differences") {
  Rng rng(42);
  DenseNetwork front = make_network({3, 5, 4}, {Activation::Tanh, Activation::Tanh}, rng);
  DenseNetwork back = make_network({4, 6, 2}, {Activation::Sigmoid, Activation::Identity}, rng);
  const Vec upstream = {0.7, -1.3};
  const Vec x = {0.2, -0.4, 0.9};

  const Vec mid = forward(front, x);
  const Vec g_mid = backward_input(back, mid, upstream);
  const Vec analytic = backward_input(front, x, g_mid);

  auto objective = [&](const Vec& xv) {
    const Vec y = forward(back, forward(front, xv));
    return upstream[0] * y[0] + upstream[1] * y[1];
  };
  std::vector<double> want;
  for (std::size_t i = 0; i < x.size(); ++i)
    want.push_back(fd_input(x, i, objective));
  CHECK(max_rel_err(analytic, want) < 1e-5);
}

TEST_CASE("mse") {
  CHECK(mse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(mse({0.0}, {2.0}) == 4.0);
  CHECK(mse({1.0, 3.0}, {2.0, 5.0}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(mse({1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK(mse({2.0, 1.0}, {5.0, 3.0}) == mse({1.0, 2.0}, {3.0, 5.0}));  // permutation
}

TEST_CASE("l2_norm") {
  CHECK(l2_norm({0.0, 0.0}) == 0.0);
  CHECK(l2_norm({3.0, 4.0}) == 5.0);
  Rng rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Vec v(17);
  for (double& x : v) x = u(rng);
  double acc = 0.0;
  for (double x : v) acc += x * x;
  CHECK(l2_norm(v) == doctest::Approx(std::sqrt(acc)).epsilon(1e-14));
}

TEST_CASE("softmax") {
  const Vec sym = softmax({0.0, 0.0});
  CHECK(sym[0] == doctest::Approx(0.5));
  CHECK(sym[1] == doctest::Approx(0.5));

  const Vec big = softmax({1000.0, 0.0});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(0.0));

  const Vec p = softmax({1.0, 2.0, 3.0});
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p[0] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
}

TEST_CASE("softmax: sum-to-one and argmax preservation over random inputs") {
  Rng rng(123);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int trial = 0; trial < 200; ++trial) {
    Vec v(2 + rng() % 6);
    for (double& x : v) x = u(rng);
    const Vec p = softmax(v);
    double sum = 0.0;
    for (double x : p) {
      CHECK(std::isfinite(x));
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(argmax_low(p) == argmax_low(v));
  }
}

TEST_CASE("optimizer: sgd") {
  Vec p = {1.0};
  sgd_update(p, {1.0}, 0.1);
  CHECK(p[0] == doctest::Approx(0.9));

  Vec q = {1.5, -2.0};
  sgd_update(q, {0.0, 0.0}, 0.1);
  CHECK(q == Vec{1.5, -2.0});
}

TEST_CASE("optimizer: adam first step moves by ~lr") {
  Vec p = {1.0}, m = {0.0}, v = {0.0};
  adam_update(p, {1.0}, m, v, 1, 1e-3, 0.9, 0.999, 1e-8);
  // bias-corrected first step: delta = lr * g / (|g| + eps)
  CHECK(p[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-7));
}

TEST_CASE("optimizer_step on a network") {
  Rng rng(4);
  DenseNetwork net = make_network({2, 2}, {Activation::Identity}, rng);
  const DenseNetwork before = net;
  NetGrads g = zero_grads_like(net);
  OptimizerState sgd = make_optimizer(OptimizerState::Kind::Sgd, 0.5, net);
  optimizer_step(sgd, net, g);  // zero gradient: unchanged
  CHECK(net.layers[0].w == before.layers[0].w);

  g.layers[0].w[0] = 2.0;
  optimizer_step(sgd, net, g);
  CHECK(net.layers[0].w[0] == doctest::Approx(before.layers[0].w[0] - 1.0));
}

TEST_CASE("checkpoint: save/load round trip is value-exact") {
  Rng rng(77);
  DenseNetwork net = make_network(
      {5, 9, 4, 2},
      {Activation::Relu, Activation::Tanh, Activation::Identity}, rng);
  // force some awkward values through the format
  net.layers[0].w[0] = 1.0 / 3.0;
  net.layers[1].b[0] = -1e-17;

  std::stringstream ss;
  save_network(ss, net);
  const DenseNetwork loaded = load_network(ss);

  REQUIRE(loaded.layers.size() == net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(loaded.layers[i].in_dim == net.layers[i].in_dim);
    CHECK(loaded.layers[i].out_dim == net.layers[i].out_dim);
    CHECK(loaded.layers[i].act == net.layers[i].act);
    CHECK(loaded.layers[i].w == net.layers[i].w);
    CHECK(loaded.layers[i].b == net.layers[i].b);
  }
}

TEST_CASE("checkpoint: bad header rejected") {
  std::stringstream ss("bogus v1\n");
  CHECK_THROWS(load_network(ss));
}
