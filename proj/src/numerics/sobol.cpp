#include "mixgp/numerics/sobol.hpp"

#include "mixgp/numerics/random.hpp"

#include <boost/random/sobol.hpp>

#include <bit>
#include <string>

namespace mixgp {

namespace {

constexpr int kBits = 32;

// Nested uniform scramble: the flip applied at each bit depends on every
// more significant bit of the unscrambled coordinate.
std::uint32_t owen_scramble(std::uint32_t v, std::uint64_t seed, int axis) {
  const std::uint64_t key = mix64(seed ^ mix64(static_cast<std::uint64_t>(axis) + 0x51ed2701ULL));
  std::uint32_t out = 0;
  for (int b = kBits - 1; b >= 0; --b) {
    const std::uint32_t prefix = (b == kBits - 1) ? 0u : (v >> (b + 1));
    const std::uint64_t h = mix64(key ^ (static_cast<std::uint64_t>(prefix) << 6) ^
                                  static_cast<std::uint64_t>(b));
    const std::uint32_t bit = ((v >> b) & 1u) ^ static_cast<std::uint32_t>(h & 1u);
    out |= bit << b;
  }
  return out;
}

}  // namespace

SobolSequence::SobolSequence(int dim, SobolOptions options)
    : dim_(dim), options_(options), directions_(static_cast<std::size_t>(dim) * kBits, 0u),
      state_(static_cast<std::size_t>(dim), 0u) {
  if (dim < 1 || dim > max_dimension)
    throw DimensionError("sobol: unsupported dimension " + std::to_string(dim));
  using table = boost::random::default_sobol_table;

  for (int j = 0; j < kBits; ++j) directions_[j] = 1u;
  for (int axis = 1; axis < dim; ++axis) {
    std::uint32_t* m = directions_.data() + static_cast<std::size_t>(axis) * kBits;
    const unsigned poly = table::polynomial(static_cast<std::size_t>(axis - 1));
    const int degree = std::bit_width(poly) - 1;
    for (int k = 0; k < degree; ++k) m[k] = table::minit(static_cast<std::size_t>(axis - 1), k);
    // Bratley-Fox recurrence on the odd integers m_j.
    for (int j = degree; j < kBits; ++j) {
      unsigned p = poly;
      m[j] = m[j - degree];
      for (int k = 0; k < degree; ++k, p >>= 1) {
        const int rem = degree - k;
        m[j] ^= ((p & 1u) * m[j - rem]) << rem;
      }
    }
  }
  // v_j = m_j * 2^(31 - j)
  for (int axis = 0; axis < dim; ++axis) {
    std::uint32_t* m = directions_.data() + static_cast<std::size_t>(axis) * kBits;
    for (int j = 0; j < kBits; ++j) m[j] <<= (kBits - 1 - j);
  }

  index_ = options_.skip;
  const std::uint64_t gray = index_ ^ (index_ >> 1);
  for (int axis = 0; axis < dim; ++axis) {
    std::uint32_t x = 0;
    for (int j = 0; j < kBits; ++j)
      if ((gray >> j) & 1u) x ^= directions_[static_cast<std::size_t>(axis) * kBits + j];
    state_[static_cast<std::size_t>(axis)] = x;
  }
}

double SobolSequence::to_unit(std::uint32_t bits, int axis) const {
  if (options_.scramble) bits = owen_scramble(bits, options_.seed, axis);
  return static_cast<double>(bits) * 0x1p-32;
}

Vector SobolSequence::next() {
  Vector out(dim_);
  for (int axis = 0; axis < dim_; ++axis) out[axis] = to_unit(state_[static_cast<std::size_t>(axis)], axis);
  // Advance by the direction of the lowest set bit of the new index.
  ++index_;
  const int c = std::countr_zero(index_);
  if (c < kBits) {
    for (int axis = 0; axis < dim_; ++axis)
      state_[static_cast<std::size_t>(axis)] ^= directions_[static_cast<std::size_t>(axis) * kBits + c];
  }
  return out;
}

Vector SobolSequence::at(std::uint64_t index) const {
  const std::uint64_t gray = index ^ (index >> 1);
  Vector out(dim_);
  for (int axis = 0; axis < dim_; ++axis) {
    std::uint32_t x = 0;
    for (int j = 0; j < kBits; ++j)
      if ((gray >> j) & 1u) x ^= directions_[static_cast<std::size_t>(axis) * kBits + j];
    out[axis] = to_unit(x, axis);
  }
  return out;
}

Points sobol(int n, const Box& bounds, SobolOptions options) {
  if (n < 1) throw std::invalid_argument("sobol: n must be positive");
  SobolSequence seq(bounds.dim(), options);
  Points out(n, bounds.dim());
  for (int i = 0; i < n; ++i) out.row(i) = bounds.from_unit(seq.next()).transpose();
  return out;
}

}  // namespace mixgp
