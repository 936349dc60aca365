#ifndef MLPMCMC_RNG_HPP
#define MLPMCMC_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace mlpmcmc {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11). A keyed bijection on
/// 128-bit counters; every random draw in the library goes through it.
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// A keyed random stream.
///
/// Streams form a tree: `child(tag)` derives an independent key from the
/// parent key and a 64-bit tag, so a draw is addressed by its position in the
/// tree (seed, level, iteration, time, particle, ...) rather than by the order
/// in which code happens to consume numbers. Two access modes are provided:
///
///  - sequential (`uniform`, `normal`, `next_u64`), which advances an internal
///    counter and is used for inherently serial consumers (resampling,
///    accept/reject);
///  - counter-addressed (`normals_at`, `fill_normals`), which is const and lets
///    parallel loops fetch the numbers for index `i` without touching shared
///    state.
///
/// The modes live in disjoint regions of the counter space.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed = 0);

  [[nodiscard]] RandomStream child(std::uint64_t tag) const;
  [[nodiscard]] RandomStream child(std::uint64_t tag, std::uint64_t sub) const {
    return child(tag).child(sub);
  }

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();

  /// Fills `out` with standard normals addressed by `index`.
  void normals_at(std::uint64_t index, std::span<double> out) const;
  [[nodiscard]] double normal_at(std::uint64_t index) const;
  /// Writes normals first, first + 1, ... of a flat addressed sequence in
  /// which every Philox block supplies two consecutive entries. Any
  /// sub-range gives the same values as the full fill.
  void fill_normals(std::uint64_t first, std::span<double> out) const;

  [[nodiscard]] const PhiloxKey& key() const { return key_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  explicit RandomStream(PhiloxKey key) : key_(key) {}

  PhiloxKey key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Maps 64 random bits to a double in (0, 1).
double to_open_unit(std::uint64_t bits);

}  // namespace mlpmcmc

#endif  // MLPMCMC_RNG_HPP
