// How often does the smoothed-moment hull contain the truth? Prints the
// finite-sample probability for a few block lengths next to the limiting
// product bound.
#include <cstdio>

#include "tsel/tsel.hpp"

using namespace tsel;

int main() {
  const std::size_t reps = 4000;
  const unsigned threads = default_threads();
  std::printf("%6s %3s %4s %10s %10s %10s\n", "rho", "k", "L", "finite", "se", "limit");
  for (double rho : {0.0, 0.5}) {
    for (int k : {1, 2, 3}) {
      for (int l : {2, 4, 10}) {
        const ProcessSpec spec{ProcessKind::VAR1, rho, k};
        const BoundEstimate fs = finite_sample_bound(spec, 200, Overlapping{1.0 / l}, mean_model(k),
                                                     Vector::Zero(k), reps, 17, threads);
        double limit = NAN;
        if (l <= detail::kMaxAnalyticOrder) {
          const BoundEstimate p = theorem1_probability(1.0 / l, 50000, 18, threads);
          limit = proposition1_bound(1.0 / l, k, std::clamp(p.probability, 0.0, 0.5));
        }
        std::printf("%6.1f %3d %4d %10.4f %10.4f %10.4f\n", rho, k, l, fs.probability, fs.standard_error, limit);
      }
    }
  }
}
