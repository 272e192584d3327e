#include "xbeacon/ble_link.hpp"

#include <cstdio>

#include "xbeacon/common.hpp"

namespace xbeacon::ble {

using common::ConfigError;
using common::ShapeError;

std::string identity_key(const IBeaconIdentity& id) {
  char buf[64];
  std::string key;
  key.reserve(44);
  for (uint8_t b : id.proximity_uuid) {
    std::snprintf(buf, sizeof(buf), "%02x", b);
    key += buf;
  }
  std::snprintf(buf, sizeof(buf), ":%u:%u", id.major, id.minor);
  key += buf;
  return key;
}

std::vector<uint8_t> build_ibeacon_payload(const IBeaconIdentity& id) {
  if (id.tx_power_ref < -127 || id.tx_power_ref > 0) {
    throw ConfigError("tx_power_ref out of [-127, 0] dBm");
  }
  std::vector<uint8_t> out;
  out.reserve(30);
  // Flags AD: LE general discoverable, BR/EDR not supported.
  out.insert(out.end(), {0x02, 0x01, 0x06});
  // Manufacturer-specific AD, Apple company id, iBeacon subtype and length.
  out.insert(out.end(), {0x1A, 0xFF, 0x4C, 0x00, 0x02, 0x15});
  out.insert(out.end(), id.proximity_uuid.begin(), id.proximity_uuid.end());
  out.push_back(static_cast<uint8_t>(id.major >> 8));
  out.push_back(static_cast<uint8_t>(id.major & 0xFF));
  out.push_back(static_cast<uint8_t>(id.minor >> 8));
  out.push_back(static_cast<uint8_t>(id.minor & 0xFF));
  out.push_back(static_cast<uint8_t>(id.tx_power_ref & 0xFF));
  return out;
}

std::array<uint8_t, 3> crc24(const std::vector<uint8_t>& pdu_bytes) {
  uint32_t reg = 0x555555;
  for (uint8_t byte : pdu_bytes) {
    for (int k = 0; k < 8; ++k) {
      uint32_t fb = ((reg >> 23) ^ (byte >> k)) & 1u;
      reg = (reg << 1) & 0xFFFFFFu;
      if (fb) reg ^= 0x00065Bu;
    }
  }
  return {static_cast<uint8_t>(reg & 0xFF), static_cast<uint8_t>(reg >> 8),
          static_cast<uint8_t>(reg >> 16)};
}

namespace {

uint8_t bitrev8(uint8_t b) {
  b = static_cast<uint8_t>((b >> 4) | (b << 4));
  b = static_cast<uint8_t>(((b & 0xCC) >> 2) | ((b & 0x33) << 2));
  return static_cast<uint8_t>(((b & 0xAA) >> 1) | ((b & 0x55) << 1));
}

// The CRC is the one field sent most significant bit first: on air the
// stream runs register position 23 down to 0, so under the byte-wise
// LSB-first serialization used for the rest of the frame each transmit
// byte is a bit-reversed register byte, high byte first.
std::array<uint8_t, 3> crc_transmit_bytes(const std::array<uint8_t, 3>& reg) {
  return {bitrev8(reg[2]), bitrev8(reg[1]), bitrev8(reg[0])};
}

}  // namespace

void whiten_bits(std::vector<uint8_t>& bits, std::size_t begin,
                 int channel_index) {
  if (channel_index < 0 || channel_index > 39) {
    throw ConfigError("channel index out of range");
  }
  // Register bit 6 is LFSR position 0 (always seeded 1), bits 5..0 are
  // positions 1..6 holding the channel index MSB first. Output is taken
  // from position 6 and feeds back into positions 0 and 4.
  uint8_t s = static_cast<uint8_t>((channel_index & 0x3F) | 0x40);
  for (std::size_t i = begin; i < bits.size(); ++i) {
    uint8_t out = s & 1u;
    s = static_cast<uint8_t>(s >> 1);
    if (out) s ^= 0x44;  // position 0 reload and the x^4 tap
    bits[i] ^= out;
  }
}

std::vector<uint8_t> bytes_to_bits_lsb(const std::vector<uint8_t>& bytes) {
  std::vector<uint8_t> bits;
  bits.reserve(bytes.size() * 8);
  for (uint8_t b : bytes) {
    for (int k = 0; k < 8; ++k) bits.push_back((b >> k) & 1u);
  }
  return bits;
}

std::vector<uint8_t> bits_to_bytes_lsb(const std::vector<uint8_t>& bits) {
  if (bits.size() % 8 != 0) throw ShapeError("bit count not a whole byte");
  std::vector<uint8_t> bytes(bits.size() / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  }
  return bytes;
}

AdvertisingPacket assemble_packet(const std::vector<uint8_t>& payload,
                                  const std::array<uint8_t, 6>& adv_address,
                                  int channel_index, uint8_t pdu_type) {
  if (payload.size() > 31) throw ShapeError("advertising payload over 31 bytes");
  if (channel_index != 37 && channel_index != 38 && channel_index != 39) {
    throw ConfigError("advertising channel must be 37, 38 or 39");
  }
  AdvertisingPacket p;
  p.channel_index = channel_index;
  p.pdu_header = {pdu_type,
                  static_cast<uint8_t>(adv_address.size() + payload.size())};
  p.adv_address = adv_address;
  p.ad_payload = payload;

  std::vector<uint8_t> pdu;
  pdu.reserve(2 + 6 + payload.size());
  pdu.push_back(p.pdu_header[0]);
  pdu.push_back(p.pdu_header[1]);
  pdu.insert(pdu.end(), adv_address.begin(), adv_address.end());
  pdu.insert(pdu.end(), payload.begin(), payload.end());
  p.crc = crc24(pdu);

  std::vector<uint8_t> frame;
  frame.reserve(1 + 4 + pdu.size() + 3);
  frame.push_back(p.preamble);
  frame.insert(frame.end(), p.access_address.begin(), p.access_address.end());
  frame.insert(frame.end(), pdu.begin(), pdu.end());
  auto crc_tx = crc_transmit_bytes(p.crc);
  frame.insert(frame.end(), crc_tx.begin(), crc_tx.end());

  p.whitened_bits = bytes_to_bits_lsb(frame);
  whiten_bits(p.whitened_bits, 5 * 8, channel_index);
  return p;
}

ParsedPacket parse_packet(const std::vector<uint8_t>& on_air_bits,
                          int channel_index) {
  if (on_air_bits.size() < (1 + 4 + 2 + 6 + 3) * 8 ||
      on_air_bits.size() % 8 != 0) {
    throw ShapeError("on-air bit sequence too short or ragged");
  }
  std::vector<uint8_t> bits = on_air_bits;
  whiten_bits(bits, 5 * 8, channel_index);
  std::vector<uint8_t> bytes = bits_to_bytes_lsb(bits);

  ParsedPacket out;
  out.pdu_header = {bytes[5], bytes[6]};
  std::size_t pdu_len = out.pdu_header[1];
  if (pdu_len < 6 || 5 + 2 + pdu_len + 3 != bytes.size()) {
    throw ShapeError("pdu length field disagrees with frame size");
  }
  for (int i = 0; i < 6; ++i) out.adv_address[i] = bytes[7 + i];
  out.ad_payload.assign(bytes.begin() + 13, bytes.begin() + 7 + pdu_len);
  std::array<uint8_t, 3> crc_tx;
  for (int i = 0; i < 3; ++i) crc_tx[i] = bytes[7 + pdu_len + i];
  out.crc = crc_transmit_bytes(crc_tx);

  std::vector<uint8_t> pdu(bytes.begin() + 5, bytes.begin() + 7 + pdu_len);
  out.crc_ok = (crc24(pdu) == out.crc);
  return out;
}

PhaseLadderSequence bits_to_phase_ladders(const std::vector<uint8_t>& bits,
                                          double initial_phase) {
  if (bits.empty()) throw ShapeError("empty bit sequence");
  PhaseLadderSequence seq;
  seq.ladder_duration = 1e-6;
  seq.initial_phase = initial_phase;
  seq.values.reserve(bits.size());
  double phase = initial_phase;
  for (uint8_t b : bits) {
    seq.values.push_back(phase);
    phase += (b ? 1.0 : -1.0) * (common::kPi / 2.0);
  }
  seq.end_phase = phase;
  return seq;
}

PhaseLadderSequence split_fine_grained(const PhaseLadderSequence& coarse) {
  PhaseLadderSequence fine;
  fine.ladder_duration = coarse.ladder_duration / 2.0;
  fine.initial_phase = coarse.initial_phase;
  fine.end_phase = coarse.end_phase;
  fine.values.reserve(coarse.values.size() * 2);
  for (std::size_t i = 0; i < coarse.values.size(); ++i) {
    double v = coarse.values[i];
    double next = (i + 1 < coarse.values.size()) ? coarse.values[i + 1]
                                                 : coarse.end_phase;
    fine.values.push_back(v);
    fine.values.push_back(0.5 * (v + next));
  }
  return fine;
}

std::string packet_to_hex(const AdvertisingPacket& p) {
  std::vector<uint8_t> bytes = bits_to_bytes_lsb(p.whitened_bits);
  std::string hex;
  hex.reserve(bytes.size() * 2);
  char buf[4];
  for (uint8_t b : bytes) {
    std::snprintf(buf, sizeof(buf), "%02x", b);
    hex += buf;
  }
  return hex;
}

}  // namespace xbeacon::ble
