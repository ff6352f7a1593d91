#pragma once

#include <iosfwd>
#include <string>

#include "advrl/numerics.hpp"

namespace advrl {

struct ARWeights {
  double alpha = 0.5;   // reward damage
  double beta = 0.49;   // action consistency
  double gamma = 0.01;  // image quality
};

/// Action consistency ratio n_same / n_total. n_total must be >= 1.
double acr(long n_same, long n_total);

/// 10*log10(max_value^2 / mse). Identical inputs yield +infinity; callers
/// exclude the sentinel from means and cap it inside AR.
double psnr(const Vec& x, const Vec& h_x, double max_value = 1.0);

/// Normalized reward damage (r_normal - r_attacked) / (r_normal - r_min),
/// clamped to [0,1]. r_normal must exceed r_min.
double delta_r(double r_normal, double r_attacked, double r_min);

/// Composite index alpha*delta_r + beta*acr + gamma*psnr. Weights must sum
/// to 1 and psnr must be finite (pass min(psnr, 100) for the sentinel).
double ar(double delta_r_value, double acr_value, double psnr_value,
          const ARWeights& w);

/// An attack is too weak when it barely changes behaviorally visible actions
/// yet also barely hurts the reward.
bool classify_weak(double acr_value, double reward_reduction_fraction);

constexpr double kPsnrCap = 100.0;

struct MetricsReport {
  std::string method;
  std::string env;
  double mean_reward = 0.0;
  double acr = 0.0;
  double mean_psnr = 0.0;  // may be +inf when no step was perturbed
  double delta_r = 0.0;
  double ar = 0.0;
  bool weak_attack = false;
  double gen_time_mean = 0.0;  // seconds
};

/// CSV columns, fixed order:
/// method,env,mean_reward,acr,psnr,delta_r,ar,weak,gen_time_mean_seconds
void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const MetricsReport& report);
MetricsReport parse_report_row(const std::string& line);

}  // namespace advrl
