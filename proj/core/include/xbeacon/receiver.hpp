#pragma once
// Downsampling BLE receiver model. The receiver samples the waveform's phase
// at 2 Msps with a per-packet offset tau in [0, 0.5 us) and decides each bit
// from the sign of one wrapped phase difference:
//
//   early alignment:   bit i from psi(tau + i) - psi(tau + i - 0.5) us
//   delayed alignment: bit i from psi(tau + i + 0.5) - psi(tau + i) us
//
// Positive means 1, negative means 0, a difference of exactly 0 or pi has no
// sign and counts as an error. The early alignment's first read reaches one
// half-bit before the packet, which the frame's lead-in covers. Frames built
// by the emulation layer decode exactly per variant: early is always
// correct; delayed errs on b0 != b3 symbols everywhere [basic] or only at
// offsets in segment B [adjusted]; the enhanced triple always has one frame
// whose effective offset lands in segment A.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "xbeacon/ble_link.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/emulation.hpp"

namespace xbeacon::rx {

enum class Mode { early, delayed };

struct SamplingContext {
  double offset_s = 0.0;  // tau, uniform in [0, 0.5 us); one draw per packet
  Mode mode = Mode::early;
  std::optional<double> snr_db;  // sample-level AWGN when set
  uint64_t seed = 0;             // noise stream seed
};

struct DecodeResult {
  // Decoded on-air bits; 2 marks a read whose difference had no sign.
  std::vector<uint8_t> bits;
  bool packet_ok = false;
  // Mismatch positions against the transmitted bits, preamble excluded
  // (synchronization is assumed ideal, so preamble bits never count).
  std::vector<std::size_t> per_bit_errors;
};

// Raw bit decoder. offset_h is tau in hundredths of a microsecond; integral
// values hit the acceptance grid exactly. Noise-free and deterministic.
std::vector<uint8_t> decode_bits(const emu::WaveformFrame& frame,
                                 std::size_t n_bits, double offset_h,
                                 Mode mode);

DecodeResult decode(const emu::WaveformFrame& frame,
                    const ble::AdvertisingPacket& packet,
                    const SamplingContext& ctx);

// Applies one (tau, mode) draw to all three enhanced frames; the packet
// passes if any frame decodes fully. Returns the best frame's result.
DecodeResult decode_enhanced(const std::vector<emu::WaveformFrame>& frames,
                             const ble::AdvertisingPacket& packet,
                             const SamplingContext& ctx);

// Closed-form per-symbol decode probability:
//   P = 1 - P(A) P(W|A) - P(B) P(W|B),  P(A) = 0.4, P(B) = 0.6.
// The W terms carry the 0.5 chance of the delayed alignment, the only one
// that can err on the CP-only path.
double analytic_decode_prob(const std::array<uint8_t, 4>& symbol,
                            emu::Variant variant);

struct PrrEstimate {
  double prr = 0.0;
  double ci95 = 0.0;  // normal-approximation half width
};

// Monte Carlo packet reception ratio over per-trial (tau, mode, noise)
// draws. Trial t always uses the seed derived from (seed, t), so the result
// is byte-identical for any jobs value.
PrrEstimate estimate_prr(const ble::AdvertisingPacket& packet,
                         const emu::EmulationConfig& config,
                         std::optional<double> snr_db, std::size_t trials,
                         uint64_t seed, int jobs = 1);

struct StabilityStats {
  std::vector<int> per_second;
  double mean = 0.0;
  double cov = 0.0;  // coefficient of variation of the per-second counts
};

// One broadcast per interval for the whole duration; counts received
// packets per second.
StabilityStats stability_trace(const ble::AdvertisingPacket& packet,
                               const emu::EmulationConfig& config,
                               double interval_s, double duration_s,
                               std::optional<double> snr_db, uint64_t seed);

}  // namespace xbeacon::rx
