#pragma once
// OFDM-side emulation of the BLE phase staircase.
//
// Frame geometry, fixed throughout:
//
//   one 4 us symbol = 80 samples at 20 MHz = 16 CP + 64 body
//   slot values w0..w5 occupy [0, 3.0) us in 0.5 us slots,
//   the free section G occupies [3.0, 3.2) us,
//   [3.2, 4.0) us is forced to replay [0, 0.8) us sample for sample,
//   so [3.2, 3.7) shows w0 again and [3.7, 4.0) shows w1.
//
// A slot carries the phase the BLE trajectory reaches at the slot's end.
// Under that anchoring a 2 Msps receiver sampling at offset tau reads, for
// bits b0..b2, plain adjacent-slot differences in both of its alignments,
// and every such difference is a half-bit step with the right sign. Only b3
// touches the tail: its reads land in G or in the replayed w0/w1 depending
// on whether tau falls in [0, 0.2) ("segment A", probability 0.4) or
// [0.2, 0.5) ("segment B", probability 0.6). The delayed alignment's B-case
// read is w1 - w0, the first bit's step, which is the unavoidable replay
// error whenever b0 != b3.
//
// The symbol builder therefore solves small sign problems instead of
// copying the ideal staircase blindly: the second bit-2 half-step magnitude
// and the free-section value are chosen by deterministic 1-D scans so that
// the early alignment decodes every symbol at every offset, and the delayed
// alignment's A-case follows the variant contract (basic replays b0,
// adjusted and enhanced decode b3 correctly). Consecutive symbols are
// re-anchored by a constant per-symbol phase offset so the early alignment's
// b0 read, which reaches back into the previous symbol's tail, keeps the
// right sign regardless of neighboring content.

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "xbeacon/ble_link.hpp"

namespace xbeacon::emu {

enum class Variant { basic, adjusted, enhanced };
enum class QamOrder : int { off = 0, qam4 = 4, qam16 = 16, qam64 = 64 };

struct EmulationConfig {
  Variant variant = Variant::adjusted;
  QamOrder qam_order = QamOrder::off;
  double sample_rate = 20e6;    // fixed by the timing grid
  double symbol_body = 3.2e-6;  // 64 samples
  double cp_length = 0.8e-6;    // 16 samples
  // Default quantization touches all 64 bins; that is the harshest reading
  // of the transmit constraint and destroys packets, because a constant
  // envelope signal needs near-zero bins the constellation cannot express.
  // Strict mode quantizes only the bins inside the receiver's channel
  // filter and passes the rest through: the out-of-band error a real
  // transmitter would add is exactly what the receiver filter removes, so
  // neither is modeled.
  bool strict_window = false;
  // Half width of the receiver channel filter. The signal itself fits in
  // +-1 MHz; a real filter's transition band reaches further, and every bin
  // it passes must survive quantization.
  double band_halfwidth_mhz = 1.0;
  // A transmitted frame carries one constellation scale for all of its
  // symbols. Per-symbol rescaling (frame_scale = false) is the more
  // forgiving fiction of a transmitter with per-symbol gain.
  bool frame_scale = true;
  int ble_channel = 38;
};

enum class FrameRole { beacon1, beacon2, beacon3 };

struct EmulatedSymbol {
  std::array<uint8_t, 4> bits{};
  std::array<double, 8> target_ladders{};  // ideal end-anchored slot values
  std::vector<double> constrained;         // 80 per-sample phases
  double free_value = 0.0;                 // G
  double anchor = 0.0;                     // w0
};

// Builds one constrained symbol. target_ladders are the ideal end-anchored
// values x0..x7; prev_anchor is the previous symbol's w0 (absent for the
// first symbol, which keeps x0 as its own anchor).
EmulatedSymbol apply_cp_constraint(const std::array<double, 8>& target_ladders,
                                   Variant variant,
                                   std::optional<double> prev_anchor = {});

// Shifts each 80-sample symbol right by the delay and fills the vacated head
// with the tail content that keeps the CP identity intact. delay must be
// 0.2 us or 0.3 us.
std::vector<double> make_supplementary(const std::vector<double>& phases,
                                       double delay_seconds);

// Literal staircase sampler: one unit-magnitude sample per 50 ns, phase as
// given, round(duration * rate) identical samples per ladder.
std::vector<std::complex<double>> synthesize_waveform(
    const ble::PhaseLadderSequence& traj, double sample_rate = 20e6);

std::vector<std::complex<double>> phases_to_samples(
    const std::vector<double>& phases);

struct WaveformFrame {
  std::vector<std::complex<double>> samples;  // lead-in + 80 per symbol
  FrameRole role = FrameRole::beacon1;
  double built_in_delay = 0.0;  // seconds
  double evm = 0.0;             // RMS bin distance moved by quantization
  int lead_in_samples = 0;
  std::size_t n_bits = 0;
};

// Quantizes one symbol (80 samples, CP included) through a 64-point
// transform: every selected bin snaps to the nearest constellation point,
// then the CP is re-copied from the new body tail. Returns the new samples
// and the RMS movement over all 64 bins. peak_override > 0 pins the
// constellation scale (frame-level scaling); 0 adapts to this symbol.
std::pair<std::vector<std::complex<double>>, double> qam_quantize(
    const std::vector<std::complex<double>>& symbol_samples,
    const EmulationConfig& config, double peak_override = 0.0);

// Scaled square constellation, peak magnitude `peak`. Order 4, 16 or 64.
std::vector<std::complex<double>> qam_constellation(QamOrder order,
                                                    double peak);
std::complex<double> nearest_constellation_point(std::complex<double> v,
                                                 QamOrder order, double peak);

// FFT-order indices of the bins inside the BLE channel filter, i.e. within
// halfwidth_mhz of the advertising channel center. The channel argument
// selects validity only: 37 has no covering WiFi channel and is rejected.
std::vector<int> ble_band_bins(int ble_channel, double halfwidth_mhz = 1.0);

// Trajectory (per-sample phases, no lead-in) built by chaining constrained
// symbols over a bit sequence whose length is a multiple of 4.
std::vector<double> bits_phase_trajectory(const std::vector<uint8_t>& bits,
                                          Variant variant);

// Full-packet trajectory; the packet's bits are padded to a multiple of 4 by
// extending the final slope, with the pad size reported back.
std::vector<double> packet_phase_trajectory(const ble::AdvertisingPacket& p,
                                            Variant variant,
                                            std::size_t* n_pad_bits = nullptr);

// Frames for an arbitrary bit sequence (length a multiple of 4): one frame
// for basic/adjusted, three for enhanced (built-in delays 0, 0.2 us,
// 0.3 us), QAM applied per symbol when configured.
std::vector<WaveformFrame> emulate_bits(const std::vector<uint8_t>& bits,
                                        const EmulationConfig& config);

// Same framing for a full advertising packet, padding included.
std::vector<WaveformFrame> emulate_packet(const ble::AdvertisingPacket& p,
                                          const EmulationConfig& config);

}  // namespace xbeacon::emu
