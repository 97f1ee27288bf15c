#ifndef UVT_RNG_HPP
#define UVT_RNG_HPP

#include <cstdint>
#include <random>

namespace uvt {

// Seeded random stream. A (seed, stream) pair always produces the same
// sequence, so parallel code can hand each task its own stream id and stay
// deterministic under any scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // uniform in [0, 1)
  double uniform();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // standard normal, Marsaglia polar method (self-contained so draws are
  // stable across standard-library implementations)
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace uvt

#endif
