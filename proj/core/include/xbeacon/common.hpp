#pragma once
// Shared numeric and infrastructure pieces: phase arithmetic, deterministic
// RNG streams, a small power-of-two FFT, 2-D vectors, fixed-format CSV
// helpers, and a parallel-for whose results never depend on worker count.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace xbeacon::common {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Timing grid shared by emulation and receiver. One BLE bit lasts 1 us, a
// half-bit slot 0.5 us; one OFDM symbol spans 4 us and is sampled at 20 MHz
// into 16 cyclic-prefix plus 64 body samples. Every slot boundary lands on a
// whole sample, so the sampled waveform represents the staircase exactly.
inline constexpr double kSampleRateHz = 20e6;
inline constexpr int kSamplesPerSlot = 10;
inline constexpr int kSamplesPerSymbol = 80;
inline constexpr int kCpSamples = 16;
inline constexpr int kBodySamples = 64;
inline constexpr int kBitsPerSymbol = 4;
inline constexpr double kSlotSeconds = 0.5e-6;
inline constexpr double kSymbolSeconds = 4e-6;

// Phase advance of one half-bit slot at modulation index 0.5.
inline constexpr double kSlotStep = kPi / 4.0;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wraps into (-pi, pi]. The closed upper end matters: a difference of exactly
// pi must come back as +pi, not -pi, so callers can detect it as ambiguous
// rather than silently taking a sign.
double wrap_phase(double x);

// Floor division for possibly negative numerators (C++ '/' truncates).
long long floordiv(long long a, long long b);

uint64_t splitmix64_next(uint64_t& state);

// Derives an independent child seed from a root seed and a stream index.
// Identical (root, stream) pairs always yield the same child, which is what
// makes trial-level parallelism order-independent.
uint64_t derive_seed(uint64_t root, uint64_t stream);

// Deterministic RNG with pinned-down output mapping (the engine is the
// standardized mt19937_64; the uniform and normal mappings are ours, so the
// byte streams do not depend on the standard library's distributions).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}
  uint64_t next() { return engine_(); }
  double uniform01();  // in [0, 1)
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  double normal();  // standard normal (Box-Muller, cached spare)
  int uniform_int(int n);  // in [0, n), n >= 1

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// In-place radix-2 FFT; size must be a power of two. Forward is unscaled,
// inverse divides by the length.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Fixed-point formatting for reports; identical bytes for identical values.
std::string fmt_fixed(double v, int decimals);

// Runs fn(i) for i in [0, n). With jobs > 1 the items are spread over
// threads; fn must only write state owned by item i so results are identical
// for every jobs value.
void parallel_for(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn);

}  // namespace xbeacon::common
