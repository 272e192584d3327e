#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "xbeacon/common.hpp"

using namespace xbeacon::common;

TEST_CASE("wrap_phase lands in (-pi, pi] with pi kept positive") {
  CHECK(wrap_phase(0.0) == doctest::Approx(0.0));
  CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_phase(kTwoPi) == doctest::Approx(0.0));
  CHECK(wrap_phase(-0.25) == doctest::Approx(-0.25));

  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.uniform(-40.0, 40.0);
    double w = wrap_phase(x);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    // The wrap only removes whole turns.
    CHECK(std::remainder(x - w, kTwoPi) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("floordiv rounds toward negative infinity") {
  CHECK(floordiv(7, 2) == 3);
  CHECK(floordiv(-7, 2) == -4);
  CHECK(floordiv(-4, 2) == -2);
  CHECK(floordiv(0, 5) == 0);
  CHECK(floordiv(-1, 10) == -1);
}

TEST_CASE("derive_seed separates streams and repeats itself") {
  CHECK(derive_seed(1, 0) == derive_seed(1, 0));
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));

  std::set<uint64_t> seen;
  for (uint64_t s = 0; s < 512; ++s) seen.insert(derive_seed(99, s));
  CHECK(seen.size() == 512);
}

TEST_CASE("Rng is deterministic and respects its ranges") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    int k = r.uniform_int(7);
    CHECK(k >= 0);
    CHECK(k < 7);
  }
}

TEST_CASE("Rng normal moments are near standard") {
  Rng r(99);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = r.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("fft matches the quadratic-time reference") {
  Rng r(3);
  for (std::size_t n : {8u, 64u}) {
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {r.uniform(-1, 1), r.uniform(-1, 1)};

    auto ref = testutil::naive_dft(x);
    auto got = x;
    fft_inplace(got, false);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(got[k] - ref[k]) < 1e-9);
    }

    fft_inplace(got, true);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(std::abs(got[k] - x[k]) < 1e-12);
    }
  }
}

TEST_CASE("fft of an impulse is flat") {
  std::vector<std::complex<double>> x(16, 0.0);
  x[0] = 1.0;
  fft_inplace(x, false);
  for (auto v : x) CHECK(std::abs(v - std::complex<double>(1.0)) < 1e-12);
}

TEST_CASE("fmt_fixed prints stable fixed-point text") {
  CHECK(fmt_fixed(1.0, 3) == "1.000");
  CHECK(fmt_fixed(-0.5, 2) == "-0.50");
  CHECK(fmt_fixed(31.697864, 6) == "31.697864");
  CHECK(fmt_fixed(2.0 / 3.0, 4) == "0.6667");
}

TEST_CASE("parallel_for output is independent of the job count") {
  const std::size_t n = 1000;
  auto run = [n](int jobs) {
    std::vector<double> out(n);
    parallel_for(n, jobs, [&out](std::size_t i) {
      out[i] = std::sin(0.001 * static_cast<double>(i));
    });
    return out;
  };
  auto one = run(1);
  CHECK(run(2) == one);
  CHECK(run(8) == one);

  // Degenerate shapes must not hang or crash.
  parallel_for(0, 4, [](std::size_t) {});
  parallel_for(3, 16, [](std::size_t) {});
}
