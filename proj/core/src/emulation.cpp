#include "xbeacon/emulation.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "xbeacon/common.hpp"

namespace xbeacon::emu {

using common::ConfigError;
using common::kPi;
using common::kSlotStep;
using common::ShapeError;
using common::wrap_phase;

namespace {

constexpr double kQ = kSlotStep;  // pi/4, one half-bit step
constexpr int kScanSteps = 1440;
constexpr double kMinMargin = 1e-6;

int sign_of(double x) { return (x > 0.0) ? 1 : ((x < 0.0) ? -1 : 0); }

// Distance of a wrapped difference from the two ambiguous values 0 and pi.
// A decode read with zero margin has no usable sign.
double read_margin(double diff) {
  double a = std::fabs(wrap_phase(diff));
  return std::min(a, kPi - a);
}

bool sign_ok(double diff, int want) {
  return read_margin(diff) > kMinMargin && sign_of(wrap_phase(diff)) == want;
}

// Slot deltas and free-section value relative to w0 = 0 for one 4-bit
// symbol. Everything the decoder reads is a difference, so the construction
// is translation invariant and cacheable per (bits, variant).
struct RelConstruction {
  std::array<double, 6> w{};  // w[0] == 0
  double free_value = 0.0;
};

RelConstruction build_relative(int nibble, Variant variant) {
  int s[4];
  for (int j = 0; j < 4; ++j) s[j] = ((nibble >> j) & 1) ? 1 : -1;

  RelConstruction rel;
  auto place = [&](double beta) {
    rel.w[0] = 0.0;
    rel.w[1] = rel.w[0] + s[0] * kQ;
    rel.w[2] = rel.w[1] + s[1] * kQ;
    rel.w[3] = rel.w[2] + s[1] * kQ;
    rel.w[4] = rel.w[3] + s[2] * beta / 2.0;
    rel.w[5] = rel.w[4] + s[2] * beta / 2.0;
  };

  // The early alignment's segment-B read of b3 is w0 - w5. With the ideal
  // quarter steps that sign comes out wrong for half of the symbols, so the
  // two bit-2 half-steps get a common re-solved magnitude: beta/2 keeps the
  // in-symbol b2 reads at sign s2 for any beta in (0, 2pi), leaving a free
  // 1-D problem for the b3 sign.
  double beta = 2.0 * kQ;
  place(beta);
  if (!sign_ok(rel.w[0] - rel.w[5], s[3])) {
    double best_margin = -1.0;
    double best_beta = 0.0;
    for (int i = 1; i < kScanSteps; ++i) {
      double b = common::kTwoPi * i / kScanSteps;
      double w5 = s[0] * kQ + 2.0 * s[1] * kQ + s[2] * b;
      if (!sign_ok(-w5, s[3])) continue;
      double m = std::min({read_margin(b / 2.0), read_margin(-w5)});
      if (m > best_margin + 1e-12) {
        best_margin = m;
        best_beta = b;
      }
    }
    beta = best_beta;
    place(beta);
  }

  // Free section G. The early A-case read is G - w5 and must give s3 for
  // every variant. The delayed A-case read is w0 - G; basic keeps the replay
  // behavior (sign s0), adjusted and enhanced require the true s3.
  int want_delayed = (variant == Variant::basic) ? s[0] : s[3];
  double g = rel.w[5] + s[3] * kQ;
  if (!(sign_ok(g - rel.w[5], s[3]) && sign_ok(rel.w[0] - g, want_delayed))) {
    double best_margin = -1.0;
    double best_g = 0.0;
    for (int i = 0; i < kScanSteps; ++i) {
      double cand = rel.w[5] + common::kTwoPi * i / kScanSteps;
      if (!sign_ok(cand - rel.w[5], s[3])) continue;
      if (!sign_ok(rel.w[0] - cand, want_delayed)) continue;
      double m = std::min(read_margin(cand - rel.w[5]),
                          read_margin(rel.w[0] - cand));
      if (m > best_margin + 1e-12) {
        best_margin = m;
        best_g = cand;
      }
    }
    g = best_g;
  }
  rel.free_value = g;
  return rel;
}

const RelConstruction& cached_relative(int nibble, Variant variant) {
  static std::array<RelConstruction, 48> table;
  static std::once_flag once;
  std::call_once(once, [] {
    for (int v = 0; v < 3; ++v) {
      for (int n = 0; n < 16; ++n) {
        table[v * 16 + n] = build_relative(n, static_cast<Variant>(v));
      }
    }
  });
  return table[static_cast<int>(variant) * 16 + nibble];
}

}  // namespace

EmulatedSymbol apply_cp_constraint(const std::array<double, 8>& target_ladders,
                                   Variant variant,
                                   std::optional<double> prev_anchor) {
  const auto& x = target_ladders;
  int s0 = sign_of(x[1] - x[0]);
  int s1 = sign_of(x[2] - x[1]);
  int s2 = sign_of(x[4] - x[3]);
  int s3 = sign_of(x[6] - x[5]);
  if (s0 == 0 || s1 == 0 || s2 == 0 || s3 == 0) {
    throw ShapeError("target ladders must step between consecutive slots");
  }

  EmulatedSymbol sym;
  sym.bits = {static_cast<uint8_t>(s0 > 0), static_cast<uint8_t>(s1 > 0),
              static_cast<uint8_t>(s2 > 0), static_cast<uint8_t>(s3 > 0)};
  sym.target_ladders = target_ladders;

  int nibble = sym.bits[0] | (sym.bits[1] << 1) | (sym.bits[2] << 2) |
               (sym.bits[3] << 3);
  const RelConstruction& rel = cached_relative(nibble, variant);

  // A fresh symbol keeps its ideal first slot. A chained symbol re-anchors
  // three half-steps past the previous w0 in its own first-bit direction,
  // which keeps the early b0 read sign-correct against both tail slots the
  // previous symbol can show (margins pi/8 and 3pi/8).
  double anchor = prev_anchor ? (*prev_anchor + s0 * 1.5 * kQ) : x[0];
  sym.anchor = anchor;
  sym.free_value = anchor + rel.free_value;

  sym.constrained.resize(common::kSamplesPerSymbol);
  auto fill = [&](int from, int to, double v) {
    for (int i = from; i < to; ++i) sym.constrained[i] = v;
  };
  for (int k = 0; k < 6; ++k) fill(10 * k, 10 * k + 10, anchor + rel.w[k]);
  fill(60, 64, sym.free_value);
  fill(64, 74, anchor + rel.w[0]);
  fill(74, 80, anchor + rel.w[1]);
  return sym;
}

std::vector<double> make_supplementary(const std::vector<double>& phases,
                                       double delay_seconds) {
  int d = 0;
  if (std::fabs(delay_seconds - 0.2e-6) < 1e-12) d = 4;
  else if (std::fabs(delay_seconds - 0.3e-6) < 1e-12) d = 6;
  else throw ConfigError("supplementary delay must be 0.2 us or 0.3 us");

  const int n = common::kSamplesPerSymbol;
  if (phases.empty() || phases.size() % n != 0) {
    throw ShapeError("trajectory length must be a whole number of symbols");
  }
  std::vector<double> out(phases.size());
  for (std::size_t base = 0; base < phases.size(); base += n) {
    // Head fill copies the region just before the CP start; because the CP
    // already replays the symbol head, the shifted symbol keeps the sample
    // identity between its first and last 16 samples exactly.
    for (int i = 0; i < d; ++i) out[base + i] = phases[base + 64 - d + i];
    for (int i = d; i < n; ++i) out[base + i] = phases[base + i - d];
  }
  return out;
}

std::vector<std::complex<double>> synthesize_waveform(
    const ble::PhaseLadderSequence& traj, double sample_rate) {
  double per = traj.ladder_duration * sample_rate;
  int n_per = static_cast<int>(std::lround(per));
  if (n_per < 1 || std::fabs(per - n_per) > 1e-9) {
    throw ConfigError("ladder duration must hold a whole number of samples");
  }
  std::vector<std::complex<double>> out;
  out.reserve(traj.values.size() * n_per);
  for (double v : traj.values) {
    std::complex<double> s(std::cos(v), std::sin(v));
    for (int i = 0; i < n_per; ++i) out.push_back(s);
  }
  return out;
}

std::vector<std::complex<double>> phases_to_samples(
    const std::vector<double>& phases) {
  std::vector<std::complex<double>> out(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) {
    out[i] = {std::cos(phases[i]), std::sin(phases[i])};
  }
  return out;
}

std::vector<std::complex<double>> qam_constellation(QamOrder order,
                                                    double peak) {
  int levels = 0;
  switch (order) {
    case QamOrder::qam4: levels = 2; break;
    case QamOrder::qam16: levels = 4; break;
    case QamOrder::qam64: levels = 8; break;
    default: throw ConfigError("constellation requires order 4, 16 or 64");
  }
  double delta = peak / std::sqrt(2.0) / (levels - 1);
  std::vector<std::complex<double>> pts;
  pts.reserve(static_cast<std::size_t>(levels) * levels);
  for (int i = -(levels - 1); i <= levels - 1; i += 2) {
    for (int q = -(levels - 1); q <= levels - 1; q += 2) {
      pts.emplace_back(i * delta, q * delta);
    }
  }
  return pts;
}

namespace {

double snap_axis(double c, int levels, double delta) {
  double t = c / delta;
  double m = 2.0 * std::floor(t / 2.0) + 1.0;  // nearest odd multiple
  double lim = levels - 1.0;
  return std::clamp(m, -lim, lim) * delta;
}

}  // namespace

std::complex<double> nearest_constellation_point(std::complex<double> v,
                                                 QamOrder order, double peak) {
  int levels = 0;
  switch (order) {
    case QamOrder::qam4: levels = 2; break;
    case QamOrder::qam16: levels = 4; break;
    case QamOrder::qam64: levels = 8; break;
    default: throw ConfigError("constellation requires order 4, 16 or 64");
  }
  double delta = peak / std::sqrt(2.0) / (levels - 1);
  return {snap_axis(v.real(), levels, delta),
          snap_axis(v.imag(), levels, delta)};
}

std::vector<int> ble_band_bins(int ble_channel, double halfwidth_mhz) {
  if (ble_channel != 38 && ble_channel != 39) {
    throw ConfigError("no WiFi image covers this BLE channel");
  }
  if (halfwidth_mhz <= 0 || halfwidth_mhz > 10.0) {
    throw ConfigError("filter half width must lie in (0, 10] MHz");
  }
  // Simulation baseband is the BLE center; bins sit at 312.5 kHz spacing.
  int reach = static_cast<int>(std::floor(halfwidth_mhz / 0.3125));
  reach = std::min(reach, 31);
  std::vector<int> bins;
  for (int k = -reach; k <= reach; ++k) bins.push_back(k >= 0 ? k : 64 + k);
  std::sort(bins.begin(), bins.end());
  return bins;
}

std::pair<std::vector<std::complex<double>>, double> qam_quantize(
    const std::vector<std::complex<double>>& symbol_samples,
    const EmulationConfig& config, double peak_override) {
  if (config.qam_order == QamOrder::off) {
    throw ConfigError("qam_quantize called with quantization off");
  }
  if (symbol_samples.size() != common::kSamplesPerSymbol) {
    throw ShapeError("one symbol is 80 samples");
  }

  std::vector<std::complex<double>> bins(symbol_samples.begin() + 16,
                                         symbol_samples.end());
  common::fft_inplace(bins, false);
  std::vector<std::complex<double>> orig = bins;

  std::vector<int> selected;
  if (config.strict_window) {
    selected = ble_band_bins(config.ble_channel, config.band_halfwidth_mhz);
  } else {
    selected.resize(64);
    for (int i = 0; i < 64; ++i) selected[i] = i;
  }

  double peak = peak_override;
  if (peak <= 0.0) {
    for (int k : selected) peak = std::max(peak, std::abs(bins[k]));
  }
  if (peak > 0.0) {
    for (int k : selected) {
      bins[k] = nearest_constellation_point(bins[k], config.qam_order, peak);
    }
  }

  double sq = 0.0;
  for (int k = 0; k < 64; ++k) sq += std::norm(bins[k] - orig[k]);
  double evm = std::sqrt(sq / 64.0);

  common::fft_inplace(bins, true);
  std::vector<std::complex<double>> out(common::kSamplesPerSymbol);
  for (int i = 0; i < 64; ++i) out[16 + i] = bins[i];
  for (int i = 0; i < 16; ++i) out[i] = bins[48 + i];
  return {std::move(out), evm};
}

std::vector<double> bits_phase_trajectory(const std::vector<uint8_t>& bits,
                                          Variant variant) {
  if (bits.empty() || bits.size() % 4 != 0) {
    throw ShapeError("trajectory needs a nonempty multiple of 4 bits");
  }
  ble::PhaseLadderSequence fine =
      ble::split_fine_grained(ble::bits_to_phase_ladders(bits, 0.0));

  // End-anchored slot targets: slot k of symbol n shows the phase the ideal
  // trajectory reaches at the end of that half-bit.
  auto at_end = [&](std::size_t j) {
    return (j + 1 < fine.values.size()) ? fine.values[j + 1] : fine.end_phase;
  };

  std::size_t n_symbols = bits.size() / 4;
  std::vector<double> traj;
  traj.reserve(n_symbols * common::kSamplesPerSymbol);
  std::optional<double> anchor;
  for (std::size_t n = 0; n < n_symbols; ++n) {
    std::array<double, 8> targets;
    for (int k = 0; k < 8; ++k) targets[k] = at_end(8 * n + k);
    EmulatedSymbol sym = apply_cp_constraint(targets, variant, anchor);
    anchor = sym.anchor;
    traj.insert(traj.end(), sym.constrained.begin(), sym.constrained.end());
  }
  return traj;
}

std::vector<double> packet_phase_trajectory(const ble::AdvertisingPacket& p,
                                            Variant variant,
                                            std::size_t* n_pad_bits) {
  std::vector<uint8_t> bits = p.whitened_bits;
  if (bits.empty()) throw ShapeError("packet carries no bits");
  std::size_t pad = (4 - bits.size() % 4) % 4;
  for (std::size_t i = 0; i < pad; ++i) bits.push_back(bits.back());
  if (n_pad_bits) *n_pad_bits = pad;
  return bits_phase_trajectory(bits, variant);
}

std::vector<WaveformFrame> emulate_bits(const std::vector<uint8_t>& bits,
                                        const EmulationConfig& config) {
  std::vector<double> traj = bits_phase_trajectory(bits, config.variant);

  struct Plan {
    FrameRole role;
    double delay;
  };
  std::vector<Plan> plans;
  if (config.variant == Variant::enhanced) {
    plans = {{FrameRole::beacon1, 0.0},
             {FrameRole::beacon2, 0.2e-6},
             {FrameRole::beacon3, 0.3e-6}};
  } else {
    plans = {{FrameRole::beacon1, 0.0}};
  }

  std::vector<WaveformFrame> frames;
  frames.reserve(plans.size());
  for (const Plan& plan : plans) {
    std::vector<double> phases =
        (plan.delay > 0.0) ? make_supplementary(traj, plan.delay) : traj;

    WaveformFrame f;
    f.role = plan.role;
    f.built_in_delay = plan.delay;
    f.lead_in_samples = common::kSamplesPerSlot;
    f.n_bits = bits.size();
    f.samples.assign(common::kSamplesPerSlot, {1.0, 0.0});  // phase 0 lead-in
    auto body = phases_to_samples(phases);
    f.samples.insert(f.samples.end(), body.begin(), body.end());

    if (config.qam_order != QamOrder::off) {
      double sq_total = 0.0;
      std::size_t n_symbols = phases.size() / common::kSamplesPerSymbol;
      auto symbol_at = [&](std::size_t s) {
        std::size_t base = common::kSamplesPerSlot +
                           s * common::kSamplesPerSymbol;
        return std::vector<std::complex<double>>(
            f.samples.begin() + base,
            f.samples.begin() + base + common::kSamplesPerSymbol);
      };
      double frame_peak = 0.0;
      if (config.frame_scale) {
        // One constellation scale for the whole frame, like a transmitter
        // whose gain is fixed for the duration of a physical frame.
        std::vector<int> selected;
        if (config.strict_window) {
          selected = ble_band_bins(config.ble_channel, config.band_halfwidth_mhz);
        } else {
          selected.resize(64);
          for (int i = 0; i < 64; ++i) selected[i] = i;
        }
        for (std::size_t s = 0; s < n_symbols; ++s) {
          auto body = symbol_at(s);
          std::vector<std::complex<double>> bins(body.begin() + 16, body.end());
          common::fft_inplace(bins, false);
          for (int k : selected)
            frame_peak = std::max(frame_peak, std::abs(bins[k]));
        }
      }
      for (std::size_t s = 0; s < n_symbols; ++s) {
        std::size_t base = common::kSamplesPerSlot +
                           s * common::kSamplesPerSymbol;
        auto [quant, evm] = qam_quantize(symbol_at(s), config, frame_peak);
        std::copy(quant.begin(), quant.end(), f.samples.begin() + base);
        sq_total += evm * evm * 64.0;
      }
      f.evm = n_symbols ? std::sqrt(sq_total / (64.0 * n_symbols)) : 0.0;
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<WaveformFrame> emulate_packet(const ble::AdvertisingPacket& p,
                                          const EmulationConfig& config) {
  std::vector<uint8_t> bits = p.whitened_bits;
  if (bits.empty()) throw ShapeError("packet carries no bits");
  std::size_t pad = (4 - bits.size() % 4) % 4;
  for (std::size_t i = 0; i < pad; ++i) bits.push_back(bits.back());
  auto frames = emulate_bits(bits, config);
  // Pad bits sit in the waveform but are excluded from success accounting.
  for (auto& f : frames) f.n_bits = p.whitened_bits.size();
  return frames;
}

}  // namespace xbeacon::emu
