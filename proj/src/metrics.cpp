#include "advrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "advrl/textio.hpp"

namespace advrl {

double acr(long n_same, long n_total) {
  if (n_total < 1)
    throw std::invalid_argument("acr: n_total must be >= 1");
  if (n_same < 0 || n_same > n_total)
    throw std::invalid_argument("acr: n_same out of [0, n_total]");
  return static_cast<double>(n_same) / static_cast<double>(n_total);
}

double psnr(const Vec& x, const Vec& h_x, double max_value) {
  const double m = mse(x, h_x);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_value * max_value / m);
}

double delta_r(double r_normal, double r_attacked, double r_min) {
  if (!(r_normal > r_min))
    throw std::invalid_argument(
        "delta_r: r_normal must exceed r_min (degenerate denominator)");
  const double v = (r_normal - r_attacked) / (r_normal - r_min);
  return std::clamp(v, 0.0, 1.0);
}

double ar(double delta_r_value, double acr_value, double psnr_value,
          const ARWeights& w) {
  if (std::abs(w.alpha + w.beta + w.gamma - 1.0) > 1e-12)
    throw std::invalid_argument("ar: weights must sum to 1");
  if (!std::isfinite(psnr_value))
    throw std::invalid_argument("ar: psnr must be finite");
  return w.alpha * delta_r_value + w.beta * acr_value + w.gamma * psnr_value;
}

bool classify_weak(double acr_value, double reward_reduction_fraction) {
  return acr_value > 0.5 && reward_reduction_fraction < 0.5;
}

void write_report_header(std::ostream& out) {
  out << "method,env,mean_reward,acr,psnr,delta_r,ar,weak,"
         "gen_time_mean_seconds\n";
}

void write_report_row(std::ostream& out, const MetricsReport& r) {
  out << r.method << "," << r.env << "," << format_full(r.mean_reward) << ","
      << format_full(r.acr) << "," << format_full(r.mean_psnr) << ","
      << format_full(r.delta_r) << "," << format_full(r.ar) << ","
      << (r.weak_attack ? "true" : "false") << ","
      << format_full(r.gen_time_mean) << "\n";
}

MetricsReport parse_report_row(const std::string& line) {
  const std::vector<std::string> f = split(line, ',');
  if (f.size() != 9)
    throw std::invalid_argument("parse_report_row: expected 9 fields");
  MetricsReport r;
  r.method = f[0];
  r.env = f[1];
  r.mean_reward = parse_double(f[2]);
  r.acr = parse_double(f[3]);
  r.mean_psnr = parse_double(f[4]);
  r.delta_r = parse_double(f[5]);
  r.ar = parse_double(f[6]);
  if (f[7] == "true") r.weak_attack = true;
  else if (f[7] == "false") r.weak_attack = false;
  else throw std::invalid_argument("parse_report_row: bad weak flag");
  r.gen_time_mean = parse_double(f[8]);
  return r;
}

}  // namespace advrl
