#pragma once

#include "mixgp/numerics/types.hpp"

#include <cstdint>
#include <vector>

namespace mixgp {

struct SobolOptions {
  // Hash-based nested uniform (Owen) scrambling keyed by `seed`.
  bool scramble = false;
  std::uint64_t seed = 0;
  // Index of the first point returned.
  std::uint64_t skip = 0;
};

/// Gray-code Sobol generator with Joe-Kuo direction numbers.
class SobolSequence {
public:
  static constexpr int max_dimension = 1024;

  explicit SobolSequence(int dim, SobolOptions options = {});

  int dim() const { return dim_; }
  // Next point in [0,1)^d.
  Vector next();
  // Point with the given index, independent of the generator state.
  Vector at(std::uint64_t index) const;

private:
  double to_unit(std::uint32_t bits, int axis) const;

  int dim_;
  SobolOptions options_;
  std::vector<std::uint32_t> directions_;  // dim x 32
  std::vector<std::uint32_t> state_;
  std::uint64_t index_ = 0;
};

/// n points of the Sobol sequence mapped affinely into `bounds`.
Points sobol(int n, const Box& bounds, SobolOptions options = {});

}  // namespace mixgp
