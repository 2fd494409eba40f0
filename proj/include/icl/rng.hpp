#pragma once

#include <cmath>
#include <cstdint>

namespace icl {

// Counter-based random stream with hierarchical derivation.
//
// A stream is identified by a 64-bit key. Keys are derived from
// (master_seed, path) where the path is a sequence of child indices,
// so identical (seed, path) pairs reproduce identical draws no matter
// how work is scheduled across threads or processes.
//
// The generator is splitmix64: the state advances by a fixed odd
// constant and each output is the splitmix64 finalizer of the state.
// Child keys mix the parent key with the child index through the same
// finalizer, using a second odd constant to decouple derivation from
// the draw sequence.
class RngStream {
 public:
  RngStream() : state_(mix(0x9E3779B97F4A7C15ull)) {}

  explicit RngStream(std::uint64_t master_seed)
      : state_(mix(master_seed ^ 0x9E3779B97F4A7C15ull)) {}

  // Derived stream for child `index`; independent of this stream's draws.
  RngStream child(std::uint64_t index) const {
    RngStream s;
    s.state_ = mix(state_ ^ ((index + 0x632BE59BD9B4E019ull) * 0xD1342543DE82EF95ull));
    s.has_spare_ = false;
    return s;
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; the partner draw is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925286766559 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  // Fair coin on {-1, +1}.
  int sign() { return (next_u64() >> 63) ? 1 : -1; }

  std::uint64_t key() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stream path conventions used across the lab. Every consumer derives
// its stream as root(seed).child(stage).child(...), so datasets are
// bit-identical across runs and worker counts.
enum StreamStage : std::uint64_t {
  kStreamStage1 = 1,      // stage-I pretraining tasks
  kStreamStage2 = 2,      // stage-II tasks
  kStreamEval = 3,        // evaluation sweeps
  kStreamDiag = 4,        // diagnostics and Monte-Carlo oracles
  kStreamStage2Init = 5,  // stage-II MLP reinitialization, one child per unit
  kStreamDiagMc = 6,      // Monte-Carlo oracles inside diagnostics
};

enum StreamRole : std::uint64_t {
  kRoleFeature = 0,   // feature vector of a task
  kRoleExamples = 1,  // prompt examples of a task
};

}  // namespace icl
