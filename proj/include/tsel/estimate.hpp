#pragma once

#include <cmath>
#include <cstddef>
#include <string>

namespace tsel {

/// Monte Carlo estimate of a probability. The raw estimate is reported
/// without clamping.
struct BoundEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
  std::size_t replications = 0;
  std::string context;  // e.g. "n=100 rho=0 k=1 L=2" or "k=1 b=0.5"
  std::string method;   // how the number was produced

  static BoundEstimate from_count(std::size_t hits, std::size_t reps, std::string context,
                                  std::string method) {
    BoundEstimate e;
    e.replications = reps;
    e.probability = reps ? static_cast<double>(hits) / static_cast<double>(reps) : 0.0;
    e.standard_error =
        reps ? std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(reps)) : 0.0;
    e.context = std::move(context);
    e.method = std::move(method);
    return e;
  }
};

}  // namespace tsel
