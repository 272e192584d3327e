#pragma once
// Shared fixtures for the test suites. Oracles that re-derive library
// behavior live in the suite that uses them, not here.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "xbeacon/ble_link.hpp"

namespace testutil {

inline xbeacon::ble::IBeaconIdentity canonical_identity() {
  xbeacon::ble::IBeaconIdentity id;
  for (int i = 0; i < 16; ++i) {
    id.proximity_uuid[i] = static_cast<uint8_t>(i * 17);
  }
  id.major = 4660;
  id.minor = 22136;
  id.tx_power_ref = -59;
  return id;
}

inline xbeacon::ble::AdvertisingPacket canonical_packet(int channel = 38) {
  auto payload = xbeacon::ble::build_ibeacon_payload(canonical_identity());
  std::array<uint8_t, 6> addr = {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22};
  return xbeacon::ble::assemble_packet(payload, addr, channel);
}

// All sixteen 4-bit symbols, index = b0 + 2 b1 + 4 b2 + 8 b3.
inline std::array<std::array<uint8_t, 4>, 16> all_symbols() {
  std::array<std::array<uint8_t, 4>, 16> out{};
  for (int v = 0; v < 16; ++v) {
    for (int b = 0; b < 4; ++b) {
      out[v][b] = static_cast<uint8_t>((v >> b) & 1);
    }
  }
  return out;
}

// Textbook quadratic-time DFT, the independent reference for the FFT and
// for the quantizer's spectral path.
inline std::vector<std::complex<double>> naive_dft(
    const std::vector<std::complex<double>>& x, bool inverse = false) {
  const std::size_t n = x.size();
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double ang = sign * 2.0 * 3.141592653589793238462643 *
                   static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

}  // namespace testutil
