#include "advrl/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace advrl {

namespace {

constexpr double kPaddlePixel = 1.0;
constexpr double kBallPixel = 1.0;
constexpr double kAgentPixel = 1.0;
constexpr double kPelletPixel = 0.6;

int sign_from(Rng& rng) { return (rng() & 1ull) ? 1 : -1; }

// 12x12 Pong stand-in. Paddle is a 3-pixel bar fixed at column 0; the ball
// moves one cell per step with velocity components in {-1,+1}, reflecting off
// the top/bottom/right walls and off the paddle. +1 on paddle contact, -1
// when the ball exits past column 0 (ball respawns at center with seeded
// velocity). Episode ends at 5 misses or 400 steps.
class MiniPong final : public Environment {
 public:
  static constexpr int kW = 12;
  static constexpr int kH = 12;
  static constexpr int kPaddleLen = 3;
  static constexpr int kMaxMisses = 5;

  MiniPong() {
    desc_.name = "minipong";
    desc_.action_count = 3;  // 0 stay, 1 up, 2 down
    desc_.min_return = -5.0;
    desc_.max_return = 20.0;
    desc_.max_steps = 400;
    desc_.width = kW;
    desc_.height = kH;
  }

  const EnvDescriptor& descriptor() const override { return desc_; }

  Observation reset(std::uint64_t seed) override {
    rng_.seed(seed);
    paddle_top_ = (kH - kPaddleLen) / 2;
    spawn_ball();
    misses_ = 0;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(int action) override {
    if (done_)
      throw std::logic_error("minipong: step after episode end; reset first");
    if (action < 0 || action >= desc_.action_count)
      throw std::invalid_argument("minipong: action out of range");

    // paddle first, then ball; wall clamp
    if (action == 1) paddle_top_ = std::max(0, paddle_top_ - 1);
    if (action == 2) paddle_top_ = std::min(kH - kPaddleLen, paddle_top_ + 1);

    double reward = 0.0;

    if (ball_y_ + vy_ < 0 || ball_y_ + vy_ > kH - 1) vy_ = -vy_;
    ball_y_ += vy_;

    const int nx = ball_x_ + vx_;
    if (nx > kW - 1) {
      vx_ = -vx_;
      ball_x_ += vx_;
    } else if (nx < 0) {
      reward = -1.0;
      ++misses_;
      if (misses_ >= kMaxMisses)
        done_ = true;
      else
        spawn_ball();
    } else if (nx == 0 && paddle_covers(ball_y_)) {
      reward = 1.0;
      vx_ = -vx_;
      ball_x_ += vx_;
    } else {
      ball_x_ = nx;
    }

    const int idx = steps_;
    ++steps_;
    if (steps_ >= desc_.max_steps) done_ = true;

    return StepResult{observe(), reward, done_, idx};
  }

  std::string render() const override {
    std::string out;
    out.reserve((kW + 1) * kH);
    for (int y = 0; y < kH; ++y) {
      for (int x = 0; x < kW; ++x) {
        char c = '.';
        if (x == 0 && paddle_covers(y)) c = '#';
        if (x == ball_x_ && y == ball_y_) c = 'o';
        out.push_back(c);
      }
      out.push_back('\n');
    }
    return out;
  }

 private:
  bool paddle_covers(int y) const {
    return y >= paddle_top_ && y < paddle_top_ + kPaddleLen;
  }

  void spawn_ball() {
    ball_x_ = kW / 2;
    ball_y_ = kH / 2;
    vx_ = sign_from(rng_);
    vy_ = sign_from(rng_);
  }

  Observation observe() const {
    Observation obs;
    obs.width = kW;
    obs.height = kH;
    obs.pixels.assign(kW * kH, 0.0);
    for (int y = paddle_top_; y < paddle_top_ + kPaddleLen; ++y)
      obs.pixels[y * kW + 0] = kPaddlePixel;
    obs.pixels[ball_y_ * kW + ball_x_] = kBallPixel;
    return obs;
  }

  EnvDescriptor desc_;
  Rng rng_;
  int paddle_top_ = 0;
  int ball_x_ = 0, ball_y_ = 0;
  int vx_ = 1, vy_ = 1;
  int misses_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

// 10x10 pellet-collection game: agent pixel 1.0, 8 seeded pellets at 0.6,
// +1 per pellet, ends when pellets are exhausted or after 200 steps.
class Collector final : public Environment {
 public:
  static constexpr int kW = 10;
  static constexpr int kH = 10;
  static constexpr int kPellets = 8;

  Collector() {
    desc_.name = "collector";
    desc_.action_count = 5;  // 0 up, 1 down, 2 left, 3 right, 4 stay
    desc_.min_return = 0.0;
    desc_.max_return = static_cast<double>(kPellets);
    desc_.max_steps = 200;
    desc_.width = kW;
    desc_.height = kH;
  }

  const EnvDescriptor& descriptor() const override { return desc_; }

  Observation reset(std::uint64_t seed) override {
    rng_.seed(seed);
    pellets_.assign(kW * kH, false);
    agent_ = static_cast<int>(rng_() % (kW * kH));
    int placed = 0;
    while (placed < kPellets) {
      const int cell = static_cast<int>(rng_() % (kW * kH));
      if (cell == agent_ || pellets_[cell]) continue;
      pellets_[cell] = true;
      ++placed;
    }
    remaining_ = kPellets;
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(int action) override {
    if (done_)
      throw std::logic_error("collector: step after episode end; reset first");
    if (action < 0 || action >= desc_.action_count)
      throw std::invalid_argument("collector: action out of range");

    int x = agent_ % kW;
    int y = agent_ / kW;
    switch (action) {
      case 0: y = std::max(0, y - 1); break;
      case 1: y = std::min(kH - 1, y + 1); break;
      case 2: x = std::max(0, x - 1); break;
      case 3: x = std::min(kW - 1, x + 1); break;
      default: break;  // stay
    }
    agent_ = y * kW + x;

    double reward = 0.0;
    if (pellets_[agent_]) {
      pellets_[agent_] = false;
      --remaining_;
      reward = 1.0;
    }

    const int idx = steps_;
    ++steps_;
    if (remaining_ == 0 || steps_ >= desc_.max_steps) done_ = true;

    return StepResult{observe(), reward, done_, idx};
  }

  std::string render() const override {
    std::string out;
    out.reserve((kW + 1) * kH);
    for (int y = 0; y < kH; ++y) {
      for (int x = 0; x < kW; ++x) {
        const int cell = y * kW + x;
        char c = '.';
        if (pellets_[cell]) c = '*';
        if (cell == agent_) c = 'A';
        out.push_back(c);
      }
      out.push_back('\n');
    }
    return out;
  }

 private:
  Observation observe() const {
    Observation obs;
    obs.width = kW;
    obs.height = kH;
    obs.pixels.assign(kW * kH, 0.0);
    for (int cell = 0; cell < kW * kH; ++cell)
      if (pellets_[cell]) obs.pixels[cell] = kPelletPixel;
    obs.pixels[agent_] = kAgentPixel;
    return obs;
  }

  EnvDescriptor desc_;
  Rng rng_;
  std::vector<bool> pellets_;
  int agent_ = 0;
  int remaining_ = 0;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& name) {
  if (name == "minipong") return std::make_unique<MiniPong>();
  if (name == "collector") return std::make_unique<Collector>();
  throw std::invalid_argument("make_env: unknown environment '" + name + "'");
}

}  // namespace advrl
