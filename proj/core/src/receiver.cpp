#include "xbeacon/receiver.hpp"

#include <atomic>
#include <cmath>

namespace xbeacon::rx {

using common::ConfigError;
using common::floordiv;
using common::Rng;
using common::ShapeError;
using common::wrap_phase;

namespace {

constexpr double kAmbiguityTol = 1e-9;

// Sample index for a query time given in hundredths of a microsecond,
// counted from the packet start (the lead-in sits at negative times). One
// waveform sample spans 5 hundredths; integral times stay exact under the
// floor because small integers divide exactly in double.
inline std::size_t sample_index(double t_h, int lead_in) {
  long long idx = static_cast<long long>(std::floor(t_h / 5.0));
  return static_cast<std::size_t>(idx + lead_in);
}

inline uint8_t judge(double diff) {
  double d = wrap_phase(diff);
  double a = std::fabs(d);
  if (a < kAmbiguityTol || common::kPi - a < kAmbiguityTol) return 2;
  return d > 0.0 ? 1 : 0;
}

std::vector<uint8_t> decode_core(
    const std::vector<std::complex<double>>& samples, int lead_in,
    std::size_t n_bits, double offset_h, Mode mode,
    std::optional<double> snr_db, Rng* rng) {
  if (offset_h < 0.0 || offset_h >= 50.0) {
    throw ConfigError("sampling offset must lie in [0, 0.5 us)");
  }
  std::size_t needed = sample_index(100.0 * (n_bits - 1) + 50.0 + offset_h,
                                    lead_in);
  if (needed >= samples.size()) {
    throw ShapeError("waveform too short for requested bit count");
  }

  double sigma = 0.0;
  if (snr_db) sigma = std::sqrt(std::pow(10.0, -*snr_db / 10.0));

  auto phase_at = [&](double t_h) {
    std::complex<double> s = samples[sample_index(t_h, lead_in)];
    if (sigma > 0.0 && rng) {
      double scale = sigma / std::sqrt(2.0);
      s += std::complex<double>(scale * rng->normal(), scale * rng->normal());
    }
    return std::arg(s);
  };

  std::vector<uint8_t> bits(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) {
    double base = 100.0 * static_cast<double>(i) + offset_h;
    double a = (mode == Mode::early) ? base - 50.0 : base;
    double b = (mode == Mode::early) ? base : base + 50.0;
    bits[i] = judge(phase_at(b) - phase_at(a));
  }
  return bits;
}

DecodeResult finish_result(std::vector<uint8_t> bits,
                           const ble::AdvertisingPacket& packet) {
  DecodeResult res;
  res.bits = std::move(bits);
  const auto& expect = packet.whitened_bits;
  for (std::size_t i = 8; i < expect.size(); ++i) {
    if (res.bits[i] != expect[i]) res.per_bit_errors.push_back(i);
  }
  bool crc_ok = false;
  if (res.per_bit_errors.empty()) {
    try {
      crc_ok = ble::parse_packet(res.bits, packet.channel_index).crc_ok;
    } catch (const std::exception&) {
      crc_ok = false;
    }
  }
  res.packet_ok = res.per_bit_errors.empty() && crc_ok;
  return res;
}

void check_enhanced_set(const std::vector<emu::WaveformFrame>& frames) {
  if (frames.size() != 3 || frames[0].role != emu::FrameRole::beacon1 ||
      frames[1].role != emu::FrameRole::beacon2 ||
      frames[2].role != emu::FrameRole::beacon3) {
    throw ConfigError("enhanced decoding needs beacon1, beacon2, beacon3");
  }
}

}  // namespace

std::vector<uint8_t> decode_bits(const emu::WaveformFrame& frame,
                                 std::size_t n_bits, double offset_h,
                                 Mode mode) {
  return decode_core(frame.samples, frame.lead_in_samples, n_bits, offset_h,
                     mode, std::nullopt, nullptr);
}

DecodeResult decode(const emu::WaveformFrame& frame,
                    const ble::AdvertisingPacket& packet,
                    const SamplingContext& ctx) {
  Rng rng(ctx.seed);
  auto bits = decode_core(frame.samples, frame.lead_in_samples,
                          packet.whitened_bits.size(), ctx.offset_s * 1e8,
                          ctx.mode, ctx.snr_db, &rng);
  return finish_result(std::move(bits), packet);
}

DecodeResult decode_enhanced(const std::vector<emu::WaveformFrame>& frames,
                             const ble::AdvertisingPacket& packet,
                             const SamplingContext& ctx) {
  check_enhanced_set(frames);
  Rng rng(ctx.seed);
  std::optional<DecodeResult> best;
  for (const auto& frame : frames) {
    auto bits = decode_core(frame.samples, frame.lead_in_samples,
                            packet.whitened_bits.size(), ctx.offset_s * 1e8,
                            ctx.mode, ctx.snr_db, &rng);
    DecodeResult res = finish_result(std::move(bits), packet);
    if (!best || res.per_bit_errors.size() < best->per_bit_errors.size()) {
      best = std::move(res);
    }
    if (best->packet_ok) break;
  }
  return *best;
}

double analytic_decode_prob(const std::array<uint8_t, 4>& symbol,
                            emu::Variant variant) {
  if (symbol[0] == symbol[3]) return 1.0;
  double p_wrong_a = (variant == emu::Variant::basic) ? 0.5 : 0.0;
  double p_wrong_b = (variant == emu::Variant::enhanced) ? 0.0 : 0.5;
  return 1.0 - 0.4 * p_wrong_a - 0.6 * p_wrong_b;
}

namespace {

bool run_trial(const std::vector<emu::WaveformFrame>& frames,
               const ble::AdvertisingPacket& packet,
               std::optional<double> snr_db, Rng& rng) {
  double offset_h = 50.0 * rng.uniform01();
  Mode mode = (rng.uniform01() < 0.5) ? Mode::early : Mode::delayed;
  for (const auto& frame : frames) {
    auto bits = decode_core(frame.samples, frame.lead_in_samples,
                            packet.whitened_bits.size(), offset_h, mode,
                            snr_db, &rng);
    const auto& expect = packet.whitened_bits;
    bool ok = true;
    for (std::size_t i = 8; i < expect.size() && ok; ++i) {
      ok = (bits[i] == expect[i]);
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

PrrEstimate estimate_prr(const ble::AdvertisingPacket& packet,
                         const emu::EmulationConfig& config,
                         std::optional<double> snr_db, std::size_t trials,
                         uint64_t seed, int jobs) {
  if (trials == 0) throw ConfigError("trials must be at least 1");
  auto frames = emu::emulate_packet(packet, config);

  std::vector<uint8_t> ok(trials, 0);
  common::parallel_for(trials, jobs, [&](std::size_t t) {
    Rng rng(common::derive_seed(seed, t));
    ok[t] = run_trial(frames, packet, snr_db, rng) ? 1 : 0;
  });

  std::size_t hits = 0;
  for (uint8_t v : ok) hits += v;
  PrrEstimate est;
  est.prr = static_cast<double>(hits) / static_cast<double>(trials);
  est.ci95 = 1.96 * std::sqrt(est.prr * (1.0 - est.prr) /
                              static_cast<double>(trials));
  return est;
}

StabilityStats stability_trace(const ble::AdvertisingPacket& packet,
                               const emu::EmulationConfig& config,
                               double interval_s, double duration_s,
                               std::optional<double> snr_db, uint64_t seed) {
  double seconds = duration_s;
  if (seconds <= 0.0 || std::fabs(seconds - std::round(seconds)) > 1e-9) {
    throw ConfigError("duration must be a whole number of seconds");
  }
  if (interval_s <= 0.0 || interval_s > 1.0) {
    throw ConfigError("interval must lie in (0, 1] seconds");
  }
  auto frames = emu::emulate_packet(packet, config);

  int n_seconds = static_cast<int>(std::round(seconds));
  std::size_t sends = static_cast<std::size_t>(
      std::round(seconds / interval_s));
  StabilityStats stats;
  stats.per_second.assign(n_seconds, 0);
  for (std::size_t s = 0; s < sends; ++s) {
    Rng rng(common::derive_seed(seed, s));
    int bucket = std::min<int>(n_seconds - 1,
                               static_cast<int>(s * interval_s));
    if (run_trial(frames, packet, snr_db, rng)) stats.per_second[bucket]++;
  }

  double sum = 0.0;
  for (int c : stats.per_second) sum += c;
  stats.mean = sum / n_seconds;
  double var = 0.0;
  for (int c : stats.per_second) {
    var += (c - stats.mean) * (c - stats.mean);
  }
  var /= n_seconds;
  stats.cov = (stats.mean > 0.0) ? std::sqrt(var) / stats.mean : 0.0;
  return stats;
}

}  // namespace xbeacon::rx
