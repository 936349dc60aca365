#include "mlpmcmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace mlpmcmc {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Word 3 of the counter separates the uses of a key.
constexpr std::uint32_t kSequentialDomain = 0u;
constexpr std::uint32_t kAddressedDomain = 1u;
constexpr std::uint32_t kFlatDomain = 2u;
constexpr std::uint32_t kSplitDomain = 0xFFFFFFFFu;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(product);
  hi = static_cast<std::uint32_t>(product >> 32);
}

inline PhiloxCounter round(const PhiloxCounter& c, const PhiloxKey& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mulhilo(kMul0, c[0], lo0, hi0);
  mulhilo(kMul1, c[2], lo1, hi1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline std::uint64_t join(std::uint32_t lo, std::uint32_t hi) {
  return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

inline std::uint32_t low(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
inline std::uint32_t high(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

// Box-Muller on one Philox block.
inline void gaussian_pair(const PhiloxCounter& block, double& z0, double& z1) {
  const double u1 = to_open_unit(join(block[0], block[1]));
  const double u2 = to_open_unit(join(block[2], block[3]));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  z0 = radius * std::cos(angle);
  z1 = radius * std::sin(angle);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key) {
  counter = round(counter, key);
  for (int r = 1; r < 10; ++r) {
    key[0] += kWeyl0;
    key[1] += kWeyl1;
    counter = round(counter, key);
  }
  return counter;
}

double to_open_unit(std::uint64_t bits) {
  // 52 high bits, shifted half a step off zero; the largest value is 1 - 2^-53.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

RandomStream::RandomStream(std::uint64_t seed) : key_{low(seed), high(seed)} {}

RandomStream RandomStream::child(std::uint64_t tag) const {
  const PhiloxCounter out = philox4x32({low(tag), high(tag), 0u, kSplitDomain}, key_);
  return RandomStream(PhiloxKey{out[0] ^ out[2], out[1] ^ out[3]});
}

std::uint64_t RandomStream::next_u64() {
  if (buffered_ == 0) {
    const PhiloxCounter block =
        philox4x32({low(counter_), high(counter_), 0u, kSequentialDomain}, key_);
    ++counter_;
    buffer_ = {join(block[0], block[1]), join(block[2], block[3])};
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double RandomStream::uniform() { return to_open_unit(next_u64()); }

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void RandomStream::normals_at(std::uint64_t index, std::span<double> out) const {
  std::uint32_t block_index = 0;
  for (std::size_t j = 0; j < out.size(); j += 2, ++block_index) {
    const PhiloxCounter block =
        philox4x32({low(index), high(index), block_index, kAddressedDomain}, key_);
    double z0, z1;
    gaussian_pair(block, z0, z1);
    out[j] = z0;
    if (j + 1 < out.size()) out[j + 1] = z1;
  }
}

double RandomStream::normal_at(std::uint64_t index) const {
  double z;
  normals_at(index, std::span<double>(&z, 1));
  return z;
}

void RandomStream::fill_normals(std::uint64_t first, std::span<double> out) const {
  std::size_t j = 0;
  std::uint64_t n = first;
  while (j < out.size()) {
    const std::uint64_t b = n >> 1;
    const PhiloxCounter block = philox4x32({low(b), high(b), 0u, kFlatDomain}, key_);
    double z[2];
    gaussian_pair(block, z[0], z[1]);
    for (std::uint64_t c = n & 1u; c < 2 && j < out.size(); ++c, ++n) out[j++] = z[c];
  }
}

}  // namespace mlpmcmc
