#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

namespace lgm {

//! Seeded random source used by every randomized operation.
//!
//! The engine is std::mt19937_64, whose output sequence is fixed by the
//! standard. Distributions come from Boost.Random rather than <random> because
//! the standard leaves distribution algorithms implementation-defined; the
//! Boost ones are the same code on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  //! Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = boost::random::uniform_01<double>{}(engine_);
    } while (u <= 0.0);
    return u;
  }

  double normal() { return boost::random::normal_distribution<double>{}(engine_); }

  double gamma(double shape) {
    return boost::random::gamma_distribution<double>{shape, 1.0}(engine_);
  }

  //! Beta(a, b) as X / (X + Y) with X ~ Gamma(a), Y ~ Gamma(b). Redraws until
  //! the result is strictly inside (0, 1).
  double beta(double a, double b) {
    for (;;) {
      const double x = gamma(a);
      const double y = gamma(b);
      const double u = x / (x + y);
      if (u > 0.0 && u < 1.0) return u;
    }
  }

  //! Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>{0, n - 1}(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace lgm
