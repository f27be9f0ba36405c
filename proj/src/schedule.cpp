#include "lcg/schedule.hpp"

#include <stdexcept>

namespace lcg {

NoiseSchedule make_schedule(int T, double b_start, double b_end) {
  if (T < 1) throw std::invalid_argument("make_schedule: T must be at least 1");
  if (!(b_start > 0.0) || !(b_end < 1.0) || b_start > b_end)
    throw std::invalid_argument("make_schedule: need 0 < b_start <= b_end < 1");

  NoiseSchedule s;
  s.T = T;
  s.b_start = b_start;
  s.b_end = b_end;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.posterior_var.resize(T);

  double abar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / (T - 1);
    const double bt = b_start + (b_end - b_start) * frac;
    const double abar_prev = abar;
    abar *= 1.0 - bt;
    s.beta[t - 1] = bt;
    s.alpha[t - 1] = 1.0 - bt;
    s.alpha_bar[t - 1] = abar;
    s.posterior_var[t - 1] = t == 1 ? bt : bt * (1.0 - abar_prev) / (1.0 - abar);
    if (!(abar > 0.0) || abar >= abar_prev)
      throw std::invalid_argument("make_schedule: alpha_bar must stay positive and strictly decrease");
  }
  return s;
}

}  // namespace lcg
