#include "cubegrad/rng.hpp"

#include <cmath>

namespace cubegrad::rng {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t index)
    // Two mixing rounds decorrelate (seed, index) pairs that differ in one word.
    : state_(mix64(mix64(seed) ^ (index * 0xda942042e4dd58b5ull))) {}

std::uint64_t Stream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Stream::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Stream::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // Box-Muller; u clamped away from 0 so the log stays finite.
  double u = uniform01();
  if (u < 0x1.0p-62) u = 0x1.0p-62;
  const double v = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u));
  const double a = 2.0 * M_PI * v;
  cached_normal_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

Eigen::VectorXd Stream::gaussian(Eigen::Index d) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
  return v;
}

Eigen::VectorXd Stream::unit_sphere(Eigen::Index d) {
  // Normalized Gaussian; resample on the measure-zero event of a zero draw.
  for (;;) {
    Eigen::VectorXd v = gaussian(d);
    const double n = v.norm();
    if (n > 0) return v / n;
  }
}

}  // namespace cubegrad::rng
