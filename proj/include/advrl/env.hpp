#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "advrl/numerics.hpp"

namespace advrl {

struct Observation {
  Vec pixels;  // row-major, each entry in [0,1]
  int width = 0;
  int height = 0;

  int size() const { return width * height; }
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  int step_index = 0;
};

struct EnvDescriptor {
  std::string name;
  int action_count = 0;
  double min_return = 0.0;
  double max_return = 0.0;
  int max_steps = 0;
  int width = 0;
  int height = 0;
};

/// Deterministic, seedable toy MDP with an image-like observation.
/// Stepping a finished episode throws until reset() is called.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvDescriptor& descriptor() const = 0;
  virtual Observation reset(std::uint64_t seed) = 0;
  virtual StepResult step(int action) = 0;
  virtual std::string render() const = 0;  // one character per cell, debugging
};

/// name: "minipong" or "collector"
std::unique_ptr<Environment> make_env(const std::string& name);

}  // namespace advrl
