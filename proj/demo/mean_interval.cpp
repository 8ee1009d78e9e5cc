// Confidence intervals for the mean of one AR(1) sample, unpenalized and
// penalized, with simulated critical values.
#include <cstdio>

#include "tsel/tsel.hpp"

using namespace tsel;

int main() {
  const unsigned threads = default_threads();
  const Matrix z = generate({ProcessKind::AR1, 0.6, 1}, 150, 2024);
  std::printf("sample mean %.4f\n", z.mean());

  MethodSpec bel;
  bel.statistic = Statistic::BEL;
  bel.b = 0.1;
  MethodSpec pbel = bel;
  pbel.statistic = Statistic::PBEL;
  pbel.cstar = 0.1;
  MethodSpec pebel;
  pebel.statistic = Statistic::PEBEL;
  pebel.cstar = 0.4;

  for (const MethodSpec& m : {bel, pbel, pebel}) {
    const CriticalLevel level = simulate_level(m, 1, 1000, 4000, 7, threads);
    const ConfidenceSet cs = confidence_set(z, mean_model(1), m, level);
    std::printf("%-6s critical %.3f:", to_string(m.statistic).c_str(), level.value ? *level.value : NAN);
    for (const Interval& iv : cs.intervals)
      std::printf(" [%.4f, %.4f]%s%s", iv.lower, iv.upper, iv.lower_truncated ? " (lower truncated)" : "",
                  iv.upper_truncated ? " (upper truncated)" : "");
    if (cs.degenerate) std::printf(" whole line");
    std::printf("\n");
  }
}
