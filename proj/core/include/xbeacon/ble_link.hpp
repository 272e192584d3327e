#pragma once
// BLE advertising link layer: iBeacon payload construction, packet assembly
// with CRC-24 and channel whitening, and the conversion of on-air bits into
// the phase-ladder trajectory that the emulation layer reproduces.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace xbeacon::ble {

// Advertising access address shared by all advertising PDUs.
inline constexpr std::array<uint8_t, 4> kAdvAccessAddress = {0xD6, 0xBE, 0x89,
                                                            0x8E};
inline constexpr uint8_t kAdvPreamble = 0xAA;
inline constexpr uint8_t kPduTypeNonConn = 0x02;  // ADV_NONCONN_IND

struct IBeaconIdentity {
  std::array<uint8_t, 16> proximity_uuid{};
  uint16_t major = 0;
  uint16_t minor = 0;
  // The "measured power" byte, two's complement dBm in [-127, 0]. This is the
  // reference a receiver trusts when turning RSS into distance, which is
  // exactly why forging it works.
  int tx_power_ref = -59;
};

// Stable string key used by the localization side to index observations.
std::string identity_key(const IBeaconIdentity& id);

// 30-byte advertising data: flags AD followed by the 26-byte manufacturer
// AD (company 0x004C, type 0x02, length 0x15, UUID, major, minor, ref).
std::vector<uint8_t> build_ibeacon_payload(const IBeaconIdentity& id);

struct AdvertisingPacket {
  int channel_index = 37;  // 37, 38 or 39
  uint8_t preamble = kAdvPreamble;
  std::array<uint8_t, 4> access_address = kAdvAccessAddress;
  std::array<uint8_t, 2> pdu_header{};  // type byte, length byte
  std::array<uint8_t, 6> adv_address{};
  std::vector<uint8_t> ad_payload;
  std::array<uint8_t, 3> crc{};  // register little-endian, pre-whitening
  // Full on-air bit sequence (LSB first within each byte): preamble, access
  // address, then whitened PDU + CRC. One entry per bit, values 0/1.
  std::vector<uint8_t> whitened_bits;
};

// CRC-24 over the PDU bytes (header, advertiser address, payload), LSB first,
// init 0x555555, polynomial x^24+x^10+x^9+x^6+x^4+x^3+x+1.
std::array<uint8_t, 3> crc24(const std::vector<uint8_t>& pdu_bytes);

// In-place whitening of an on-air bit slice. 7-bit LFSR x^7+x^4+1 seeded from
// the channel index; applying it twice restores the input.
void whiten_bits(std::vector<uint8_t>& bits, std::size_t begin,
                 int channel_index);

std::vector<uint8_t> bytes_to_bits_lsb(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> bits_to_bytes_lsb(const std::vector<uint8_t>& bits);

AdvertisingPacket assemble_packet(const std::vector<uint8_t>& payload,
                                  const std::array<uint8_t, 6>& adv_address,
                                  int channel_index,
                                  uint8_t pdu_type = kPduTypeNonConn);

struct ParsedPacket {
  std::array<uint8_t, 2> pdu_header{};
  std::array<uint8_t, 6> adv_address{};
  std::vector<uint8_t> ad_payload;
  std::array<uint8_t, 3> crc{};
  bool crc_ok = false;
};

// Recovers the PDU from a full on-air bit sequence and verifies the CRC.
ParsedPacket parse_packet(const std::vector<uint8_t>& on_air_bits,
                          int channel_index);

// Piecewise-constant phase trajectory. values[i] is the phase at the start
// of ladder i; end_phase closes the final ladder so the slope of the last
// bit stays recoverable from the value sequence alone.
struct PhaseLadderSequence {
  double ladder_duration = 1e-6;
  double initial_phase = 0.0;
  double end_phase = 0.0;
  std::vector<double> values;
};

// Coarse ladders, one per bit: bit 1 climbs +pi/2 over the bit, bit 0 falls
// -pi/2 (square FSK at modulation index 0.5).
PhaseLadderSequence bits_to_phase_ladders(const std::vector<uint8_t>& bits,
                                          double initial_phase);

// Splits each 1 us ladder into two 0.5 us ladders with the midpoint phase
// inserted, so every fine step is exactly +-pi/4.
PhaseLadderSequence split_fine_grained(const PhaseLadderSequence& coarse);

std::string packet_to_hex(const AdvertisingPacket& p);

}  // namespace xbeacon::ble
