#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace icorr {

// Config errors: bad user input (unknown keys, invalid ranges, wrong stage).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data errors: malformed files, corrupt blobs, invariant violations in inputs.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic RNG. Wraps a 64-bit engine but derives all variates by hand
// so results do not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n).
  uint64_t uniform_int(uint64_t n);
  // Standard normal via Box-Muller.
  double normal();
  // Derive an independent stream, e.g. per shape or per iteration.
  Rng fork(uint64_t salt) const;

 private:
  uint64_t s_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Worker cap from IMPLICIT_CORR_THREADS (default: hardware concurrency).
int worker_count();

// Runs fn(i) for i in [0, n). Falls back to a serial loop when the worker
// cap is 1. fn must only write to index-disjoint state.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace icorr
