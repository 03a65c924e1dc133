#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace cubegrad::rng {

// Counter-based generator (splitmix64): output t is a bijective mix of
// seed + t*gamma, so streams derived from distinct (seed, index) pairs are
// independent of thread schedule and of the standard library in use.
class Stream {
 public:
  explicit Stream(std::uint64_t seed, std::uint64_t index = 0);

  std::uint64_t next_u64();
  double uniform01();                      // in [0, 1)
  double uniform(double lo, double hi);
  double normal();                         // standard Gaussian, Box-Muller
  Eigen::VectorXd gaussian(Eigen::Index d);
  Eigen::VectorXd unit_sphere(Eigen::Index d);  // gaussian / its norm

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cubegrad::rng
