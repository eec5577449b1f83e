#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sweepnet {

// Error hierarchy. ValidationError and derived types map to CLI exit code 1,
// everything else derived from Error maps to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};
struct FeasibilityError : ValidationError {
  using ValidationError::ValidationError;
};
struct GenerationError : Error {
  using Error::Error;
};
struct TrainingError : Error {
  using Error::Error;
};
struct DecoderExhaustedError : Error {
  using Error::Error;
};

uint64_t splitmix64(uint64_t x);

// Derives an independent stream seed from a base seed and a stream index.
uint64_t derive_seed(uint64_t base, uint64_t stream);
uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b);

// Deterministic RNG. Distribution sampling is hand-rolled on top of
// mt19937_64 so the byte stream does not depend on the standard library's
// (implementation-defined) distribution algorithms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1).
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  int uniform_int(int n);
  // Index drawn proportionally to the weights (expected to sum to ~1).
  // Rounding slack goes to the last positive-weight entry.
  int categorical(std::span<const double> probs);

 private:
  std::mt19937_64 gen_;
};

// Shortest round-trip formatting for doubles (via std::to_chars), so that
// serialize/parse cycles are bit-exact and locale-independent.
std::string format_double(double v);
// Strict full-string parse. Returns false on any trailing garbage.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, int& out);
bool parse_u64(std::string_view s, uint64_t& out);

// Runs fn(chunk_index) for chunk_index in [0, num_chunks) on up to
// num_threads workers. Deterministic as long as chunks write disjoint state.
void parallel_chunks(int num_chunks, int num_threads, const std::function<void(int)>& fn);

int default_thread_count();

}  // namespace sweepnet
