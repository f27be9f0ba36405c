#pragma once

#include <vector>

namespace lcg {

// Forward-corruption schedule, 1-based timestep indexing t = 1..T.
//   a_t = 1 - b_t,  abar_t = prod_{s<=t} a_s
//   posterior_var_t = b_t (1 - abar_{t-1}) / (1 - abar_t)   for t >= 2
// The t = 1 posterior variance is degenerate (abar_0 = 1 makes it exactly
// zero), so posterior_var_1 is set to b_1: the reverse step adds no noise at
// t = 1 regardless, and the reconstruction density needs a positive variance.
struct NoiseSchedule {
  int T = 0;
  double b_start = 0.0;
  double b_end = 0.0;
  std::vector<double> beta;           // size T
  std::vector<double> alpha;          // size T
  std::vector<double> alpha_bar;      // size T
  std::vector<double> posterior_var;  // size T

  double b(int t) const { return beta[t - 1]; }
  double a(int t) const { return alpha[t - 1]; }
  double abar(int t) const { return alpha_bar[t - 1]; }
  double abar_prev(int t) const { return t >= 2 ? alpha_bar[t - 2] : 1.0; }
  double post_var(int t) const { return posterior_var[t - 1]; }

  // Whether z_T is close enough to N(0, I) to start a reverse chain from pure noise.
  bool terminal_near_gaussian() const { return alpha_bar.back() < 0.05; }
};

// Linear beta ramp from b_start to b_end over T steps.
NoiseSchedule make_schedule(int T, double b_start, double b_end);

}  // namespace lcg
