#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/emulation.hpp"
#include "xbeacon/receiver.hpp"

using namespace xbeacon;
using emu::EmulationConfig;
using emu::QamOrder;
using emu::Variant;
using xbeacon::common::Rng;

namespace {

EmulationConfig cp_only(Variant v) {
  EmulationConfig c;
  c.variant = v;
  c.qam_order = QamOrder::off;
  return c;
}

EmulationConfig qam_default(Variant v) {
  EmulationConfig c;
  c.variant = v;
  c.qam_order = QamOrder::qam64;
  c.strict_window = true;
  return c;
}

bool symbol_ok(const std::vector<emu::WaveformFrame>& frames,
               const std::vector<uint8_t>& bits, double offset_h,
               rx::Mode mode) {
  for (const auto& f : frames) {
    if (rx::decode_bits(f, bits.size(), offset_h, mode) == bits) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("grid marginalization reproduces the analytic probability") {
  // The decode outcome is constant on each of the two offset segments, so
  // averaging over the hundredths grid and both alignments is an exact
  // evaluation of the per-symbol decode probability, not an estimate.
  for (Variant v : {Variant::basic, Variant::adjusted, Variant::enhanced}) {
    auto cfg = cp_only(v);
    for (const auto& sym : testutil::all_symbols()) {
      std::vector<uint8_t> bits(sym.begin(), sym.end());
      auto frames = emu::emulate_bits(bits, cfg);
      int hits = 0;
      for (int off = 0; off < 50; ++off) {
        for (rx::Mode mode : {rx::Mode::early, rx::Mode::delayed}) {
          if (symbol_ok(frames, bits, off, mode)) ++hits;
        }
      }
      double exact = hits / 100.0;
      CHECK(exact == doctest::Approx(rx::analytic_decode_prob(sym, v))
                         .epsilon(1e-12));
    }
  }
}

TEST_CASE("analytic probability table") {
  std::array<uint8_t, 4> even = {1, 0, 1, 1};   // b0 == b3
  std::array<uint8_t, 4> odd = {1, 0, 0, 0};    // b0 != b3
  for (Variant v : {Variant::basic, Variant::adjusted, Variant::enhanced}) {
    CHECK(rx::analytic_decode_prob(even, v) == 1.0);
  }
  CHECK(rx::analytic_decode_prob(odd, Variant::basic) == doctest::Approx(0.5));
  CHECK(rx::analytic_decode_prob(odd, Variant::adjusted) ==
        doctest::Approx(0.7));
  CHECK(rx::analytic_decode_prob(odd, Variant::enhanced) == 1.0);
}

TEST_CASE("monte carlo symbol decode matches the analytic value") {
  std::array<uint8_t, 4> sym = {1, 1, 0, 0};
  std::vector<uint8_t> bits(sym.begin(), sym.end());
  for (Variant v : {Variant::basic, Variant::adjusted, Variant::enhanced}) {
    auto frames = emu::emulate_bits(bits, cp_only(v));
    Rng rng(31);
    const int trials = 20000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      double off = 50.0 * rng.uniform01();
      rx::Mode mode =
          (rng.uniform01() < 0.5) ? rx::Mode::early : rx::Mode::delayed;
      if (symbol_ok(frames, bits, off, mode)) ++hits;
    }
    double est = static_cast<double>(hits) / trials;
    CHECK(std::fabs(est - rx::analytic_decode_prob(sym, v)) < 0.02);
  }
}

TEST_CASE("packet decode, noise free") {
  auto p = testutil::canonical_packet();

  auto adjusted = emu::emulate_packet(p, cp_only(Variant::adjusted));
  rx::SamplingContext ctx;
  ctx.mode = rx::Mode::delayed;

  // Segment A offset: the adjusted waveform decodes cleanly.
  ctx.offset_s = 0.1e-6;
  auto ok = rx::decode(adjusted[0], p, ctx);
  CHECK(ok.packet_ok);
  CHECK(ok.per_bit_errors.empty());
  CHECK(ok.bits == p.whitened_bits);

  // Segment B offset: the basic waveform loses bits; every recorded error
  // sits past the preamble.
  auto basic = emu::emulate_packet(p, cp_only(Variant::basic));
  ctx.offset_s = 0.3e-6;
  auto bad = rx::decode(basic[0], p, ctx);
  CHECK_FALSE(bad.packet_ok);
  CHECK_FALSE(bad.per_bit_errors.empty());
  for (auto i : bad.per_bit_errors) CHECK(i >= 8);

  // The early alignment never errs, for any variant or offset.
  ctx.mode = rx::Mode::early;
  for (double off : {0.0, 0.13e-6, 0.27e-6, 0.49e-6}) {
    ctx.offset_s = off;
    CHECK(rx::decode(basic[0], p, ctx).packet_ok);
  }
}

TEST_CASE("enhanced packet decode succeeds for every draw") {
  auto p = testutil::canonical_packet();
  auto frames = emu::emulate_packet(p, cp_only(Variant::enhanced));
  rx::SamplingContext ctx;
  for (int off = 0; off < 50; off += 7) {
    ctx.offset_s = off * 1e-8;
    for (rx::Mode mode : {rx::Mode::early, rx::Mode::delayed}) {
      ctx.mode = mode;
      auto res = rx::decode_enhanced(frames, p, ctx);
      CHECK(res.packet_ok);
    }
  }

  auto single = emu::emulate_packet(p, cp_only(Variant::basic));
  CHECK_THROWS_AS(rx::decode_enhanced(single, p, ctx), common::ConfigError);
}

TEST_CASE("a signless difference reads as neither bit") {
  emu::WaveformFrame flat;
  flat.samples.assign(90, std::complex<double>(1.0, 0.0));
  flat.lead_in_samples = 10;
  auto bits = rx::decode_bits(flat, 1, 0.0, rx::Mode::early);
  REQUIRE(bits.size() == 1);
  CHECK(bits[0] == 2);
}

TEST_CASE("decoder input validation") {
  auto p = testutil::canonical_packet();
  auto frames = emu::emulate_packet(p, cp_only(Variant::basic));
  CHECK_THROWS_AS(rx::decode_bits(frames[0], 8, 50.0, rx::Mode::early),
                  common::ConfigError);
  CHECK_THROWS_AS(rx::decode_bits(frames[0], 8, -0.5, rx::Mode::early),
                  common::ConfigError);
  CHECK_THROWS_AS(
      rx::decode_bits(frames[0], p.whitened_bits.size() + 8, 0.0,
                      rx::Mode::early),
      common::ShapeError);
}

TEST_CASE("packet reception ratio, cp constraint only") {
  auto p = testutil::canonical_packet();
  const std::size_t trials = 20000;

  auto basic = rx::estimate_prr(p, cp_only(Variant::basic), std::nullopt,
                                trials, 7);
  auto adjusted = rx::estimate_prr(p, cp_only(Variant::adjusted), std::nullopt,
                                   trials, 7);
  auto enhanced = rx::estimate_prr(p, cp_only(Variant::enhanced), std::nullopt,
                                   trials, 7);

  CHECK(std::fabs(basic.prr - 0.5) < 0.02);
  CHECK(std::fabs(adjusted.prr - 0.7) < 0.02);
  CHECK(enhanced.prr == 1.0);
  CHECK(basic.ci95 > 0.0);
  CHECK(enhanced.ci95 == 0.0);

  CHECK_THROWS_AS(
      rx::estimate_prr(p, cp_only(Variant::basic), std::nullopt, 0, 7),
      common::ConfigError);
}

TEST_CASE("reception ratio is identical for any worker count") {
  auto p = testutil::canonical_packet();
  auto one = rx::estimate_prr(p, cp_only(Variant::adjusted), std::nullopt,
                              20000, 7, 1);
  auto four = rx::estimate_prr(p, cp_only(Variant::adjusted), std::nullopt,
                               20000, 7, 4);
  CHECK(one.prr == four.prr);
  CHECK(one.ci95 == four.ci95);
}

TEST_CASE("quantization lowers reception but keeps the variant order") {
  auto p = testutil::canonical_packet();
  const std::size_t trials = 8000;
  const uint64_t seed = 13;

  double cp[3];
  double qam[3];
  Variant variants[3] = {Variant::basic, Variant::adjusted, Variant::enhanced};
  for (int i = 0; i < 3; ++i) {
    cp[i] = rx::estimate_prr(p, cp_only(variants[i]), std::nullopt, trials,
                             seed)
                .prr;
    qam[i] = rx::estimate_prr(p, qam_default(variants[i]), std::nullopt,
                              trials, seed)
                 .prr;
  }

  CHECK(qam[0] < qam[1]);
  CHECK(qam[1] < qam[2]);
  for (int i = 0; i < 3; ++i) {
    CHECK(qam[i] < cp[i]);
    CHECK(qam[i] > 0.0);
  }
}

TEST_CASE("reception improves with signal-to-noise ratio") {
  auto p = testutil::canonical_packet();
  auto cfg = cp_only(Variant::enhanced);
  const std::size_t trials = 2000;
  const uint64_t seed = 5;

  // Paired trials: the same seed reuses the same offset, alignment, and
  // noise shape at every level, only the noise scale changes.
  double prev = -1.0;
  for (double snr : {0.0, 10.0, 20.0, 30.0}) {
    double prr = rx::estimate_prr(p, cfg, snr, trials, seed).prr;
    CHECK(prr >= prev);
    prev = prr;
  }

  double low = rx::estimate_prr(p, cfg, 0.0, trials, seed).prr;
  double high = rx::estimate_prr(p, cfg, 20.0, trials, seed).prr;
  CHECK(low < high);
  CHECK(rx::estimate_prr(p, cfg, 60.0, trials, seed).prr == 1.0);
  CHECK(rx::estimate_prr(p, cfg, std::nullopt, trials, seed).prr == 1.0);
}

TEST_CASE("stability trace") {
  auto p = testutil::canonical_packet();

  auto steady = rx::stability_trace(p, cp_only(Variant::enhanced), 0.1, 30.0,
                                    std::nullopt, 3);
  REQUIRE(steady.per_second.size() == 30);
  for (int c : steady.per_second) CHECK(c == 10);
  CHECK(steady.mean == doctest::Approx(10.0));
  CHECK(steady.cov == 0.0);

  auto shaky = rx::stability_trace(p, cp_only(Variant::basic), 0.1, 30.0,
                                   std::nullopt, 3);
  CHECK(shaky.cov > 0.0);
  CHECK(shaky.mean > 3.0);
  CHECK(shaky.mean < 7.0);

  auto again = rx::stability_trace(p, cp_only(Variant::basic), 0.1, 30.0,
                                   std::nullopt, 3);
  CHECK(again.per_second == shaky.per_second);

  CHECK_THROWS_AS(rx::stability_trace(p, cp_only(Variant::basic), 0.1, 10.5,
                                      std::nullopt, 3),
                  common::ConfigError);
  CHECK_THROWS_AS(rx::stability_trace(p, cp_only(Variant::basic), 0.0, 10.0,
                                      std::nullopt, 3),
                  common::ConfigError);
  CHECK_THROWS_AS(rx::stability_trace(p, cp_only(Variant::basic), 1.5, 10.0,
                                      std::nullopt, 3),
                  common::ConfigError);
}

TEST_CASE("noisy decode is repeatable for a fixed seed") {
  auto p = testutil::canonical_packet();
  auto frames = emu::emulate_packet(p, cp_only(Variant::adjusted));
  rx::SamplingContext ctx;
  ctx.offset_s = 0.22e-6;
  ctx.mode = rx::Mode::delayed;
  ctx.snr_db = 4.0;
  ctx.seed = 99;
  auto a = rx::decode(frames[0], p, ctx);
  auto b = rx::decode(frames[0], p, ctx);
  CHECK(a.bits == b.bits);
  CHECK(a.per_bit_errors == b.per_bit_errors);
  CHECK(a.packet_ok == b.packet_ok);
}
