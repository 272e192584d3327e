// Command-line front end over the library. Every subcommand prints the
// resolved configuration to stderr and is deterministic for a fixed seed.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "xbeacon/attack_sim.hpp"
#include "xbeacon/ble_link.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/emulation.hpp"
#include "xbeacon/radio_env.hpp"
#include "xbeacon/receiver.hpp"

namespace xb = xbeacon;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

xb::emu::Variant parse_variant(const std::string& s) {
  if (s == "basic") return xb::emu::Variant::basic;
  if (s == "adjusted") return xb::emu::Variant::adjusted;
  if (s == "enhanced") return xb::emu::Variant::enhanced;
  throw UsageError("unknown variant: " + s);
}

xb::emu::QamOrder parse_qam(const std::string& s) {
  if (s == "off") return xb::emu::QamOrder::off;
  if (s == "4") return xb::emu::QamOrder::qam4;
  if (s == "16") return xb::emu::QamOrder::qam16;
  if (s == "64") return xb::emu::QamOrder::qam64;
  throw UsageError("unknown QAM order: " + s + " (off, 4, 16, 64)");
}

xb::ble::IBeaconIdentity identity_from_json(const json& j) {
  xb::ble::IBeaconIdentity id;
  if (!j.contains("uuid")) throw UsageError("identity needs a uuid field");
  const auto& u = j["uuid"];
  if (u.is_string()) {
    std::string hex = u.get<std::string>();
    std::erase(hex, '-');
    if (hex.size() != 32) throw UsageError("uuid must be 16 bytes of hex");
    for (int i = 0; i < 16; ++i) {
      auto byte = hex.substr(static_cast<std::size_t>(i) * 2, 2);
      id.proximity_uuid[static_cast<std::size_t>(i)] =
          static_cast<uint8_t>(std::stoul(byte, nullptr, 16));
    }
  } else if (u.is_array() && u.size() == 16) {
    for (int i = 0; i < 16; ++i)
      id.proximity_uuid[static_cast<std::size_t>(i)] = u[i].get<uint8_t>();
  } else {
    throw UsageError("uuid must be a hex string or a 16-byte array");
  }
  id.major = j.value("major", 0);
  id.minor = j.value("minor", 0);
  id.tx_power_ref = j.value("tx_power_ref", -59);
  if (id.tx_power_ref < -127 || id.tx_power_ref > 0)
    throw UsageError("tx_power_ref must lie in [-127, 0]");
  return id;
}

// Fallback identity for subcommands that only need some canonical packet.
xb::ble::IBeaconIdentity default_identity() {
  xb::ble::IBeaconIdentity id;
  for (int i = 0; i < 16; ++i)
    id.proximity_uuid[static_cast<std::size_t>(i)] = static_cast<uint8_t>(i * 17);
  id.major = 4660;
  id.minor = 22136;
  id.tx_power_ref = -59;
  return id;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("invalid JSON in ") + path + ": " + e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

int cmd_encode(const std::string& identity_path, int channel) {
  auto id = identity_from_json(load_json_file(identity_path));
  std::cerr << "encode: channel=" << channel << " major=" << id.major
            << " minor=" << id.minor << " ref=" << id.tx_power_ref << "\n";
  auto payload = xb::ble::build_ibeacon_payload(id);
  auto packet = xb::ble::assemble_packet(payload, {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22},
                                         channel);
  json out;
  out["channel"] = packet.channel_index;
  out["hex"] = xb::ble::packet_to_hex(packet);
  out["bits"] = packet.whitened_bits.size();
  out["crc"] = {packet.crc[0], packet.crc[1], packet.crc[2]};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_emulate(const std::string& variant, const std::string& qam, int channel,
                bool strict, const std::string& out_path) {
  xb::emu::EmulationConfig cfg;
  cfg.variant = parse_variant(variant);
  cfg.qam_order = parse_qam(qam);
  cfg.ble_channel = channel;
  cfg.strict_window = strict;
  std::cerr << "emulate: variant=" << variant << " qam=" << qam
            << " channel=" << channel << " strict=" << strict << "\n";
  auto packet = xb::ble::assemble_packet(
      xb::ble::build_ibeacon_payload(default_identity()),
      {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22}, channel);
  auto frames = xb::emu::emulate_packet(packet, cfg);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    std::cout << "frame " << i << ": samples=" << frames[i].samples.size()
              << " delay_s=" << frames[i].built_in_delay
              << " evm=" << xb::common::fmt_fixed(frames[i].evm, 6) << "\n";
  }
  if (!out_path.empty()) {
    std::ostringstream buf;
    buf << "frame,index,re,im\n";
    buf.precision(17);
    for (std::size_t i = 0; i < frames.size(); ++i) {
      for (std::size_t k = 0; k < frames[i].samples.size(); ++k) {
        buf << i << ',' << k << ',' << frames[i].samples[k].real() << ','
            << frames[i].samples[k].imag() << '\n';
      }
    }
    write_file(out_path, buf.str());
    std::cout << "samples written to " << out_path << "\n";
  }
  return 0;
}

int cmd_decode(const std::string& variant, const std::string& qam, double offset,
               const std::string& mode_name, double snr, uint64_t seed) {
  if (offset < 0 || offset >= 0.5e-6)
    throw UsageError("offset must lie in [0, 0.5e-6) seconds");
  xb::emu::EmulationConfig cfg;
  cfg.variant = parse_variant(variant);
  cfg.qam_order = parse_qam(qam);
  xb::rx::SamplingContext ctx;
  ctx.offset_s = offset;
  if (mode_name == "early") ctx.mode = xb::rx::Mode::early;
  else if (mode_name == "delayed") ctx.mode = xb::rx::Mode::delayed;
  else throw UsageError("mode must be early or delayed");
  if (snr > 0) ctx.snr_db = snr;
  ctx.seed = seed;
  std::cerr << "decode: variant=" << variant << " qam=" << qam
            << " offset_s=" << offset << " mode=" << mode_name
            << " snr=" << snr << " seed=" << seed << "\n";

  auto packet = xb::ble::assemble_packet(
      xb::ble::build_ibeacon_payload(default_identity()),
      {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22}, cfg.ble_channel);
  auto frames = xb::emu::emulate_packet(packet, cfg);
  xb::rx::DecodeResult res =
      cfg.variant == xb::emu::Variant::enhanced
          ? xb::rx::decode_enhanced(frames, packet, ctx)
          : xb::rx::decode(frames[0], packet, ctx);
  std::cout << "packet_ok=" << (res.packet_ok ? 1 : 0)
            << " bit_errors=" << res.per_bit_errors.size() << "\n";
  return 0;
}

int cmd_prr(const std::string& variant, const std::string& qam, double snr,
            uint64_t trials, uint64_t seed, int jobs, bool strict, double band,
            bool symbol_scale) {
  if (trials == 0) throw UsageError("trials must be at least 1");
  xb::emu::EmulationConfig cfg;
  cfg.variant = parse_variant(variant);
  cfg.qam_order = parse_qam(qam);
  cfg.strict_window = strict;
  cfg.band_halfwidth_mhz = band;
  cfg.frame_scale = !symbol_scale;
  std::cerr << "prr: variant=" << variant << " qam=" << qam << " snr=" << snr
            << " trials=" << trials << " seed=" << seed << " jobs=" << jobs
            << "\n";
  auto packet = xb::ble::assemble_packet(
      xb::ble::build_ibeacon_payload(default_identity()),
      {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22}, cfg.ble_channel);
  std::optional<double> snr_db;
  if (snr > 0) snr_db = snr;
  auto est = xb::rx::estimate_prr(packet, cfg, snr_db, trials, seed, jobs);
  std::cout << "variant,qam_order,snr_db,trials,prr,ci95\n"
            << variant << ',' << qam << ','
            << (snr > 0 ? xb::common::fmt_fixed(snr, 1) : std::string("inf"))
            << ',' << trials << ',' << xb::common::fmt_fixed(est.prr, 6) << ','
            << xb::common::fmt_fixed(est.ci95, 6) << "\n";
  return 0;
}

int cmd_stability(const std::string& variant, double interval, double duration,
                  double snr, uint64_t seed) {
  xb::emu::EmulationConfig cfg;
  cfg.variant = parse_variant(variant);
  std::cerr << "stability: variant=" << variant << " interval=" << interval
            << " duration=" << duration << " seed=" << seed << "\n";
  auto packet = xb::ble::assemble_packet(
      xb::ble::build_ibeacon_payload(default_identity()),
      {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22}, cfg.ble_channel);
  std::optional<double> snr_db;
  if (snr > 0) snr_db = snr;
  auto trace = xb::rx::stability_trace(packet, cfg, interval, duration, snr_db,
                                       seed);
  std::cout << "second,received\n";
  for (std::size_t s = 0; s < trace.per_second.size(); ++s)
    std::cout << s << ',' << trace.per_second[s] << "\n";
  std::cout << "mean=" << xb::common::fmt_fixed(trace.mean, 4)
            << " cov=" << xb::common::fmt_fixed(trace.cov, 6) << "\n";
  return 0;
}

int cmd_channels() {
  auto plan = xb::env::default_channel_plan();
  std::cout << "ble_channel,ble_center_mhz,wifi_channel,wifi_center_mhz\n";
  for (const auto& e : plan.entries) {
    std::cout << e.ble_channel << ',' << xb::common::fmt_fixed(e.ble_center_mhz, 1)
              << ',';
    if (e.wifi_channel) {
      std::cout << *e.wifi_channel << ','
                << xb::common::fmt_fixed(*e.wifi_center_mhz, 1);
    } else {
      std::cout << "none,none";
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_attack(const std::string& scenario_path, const std::string& mode,
               const std::string& out_dir, std::optional<uint64_t> seed,
               int jobs) {
  xb::attack::ScenarioConfig cfg;
  try {
    cfg = xb::attack::load_scenario_file(scenario_path);
  } catch (const xb::common::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (seed) cfg.seed = *seed;
  std::cerr << "attack: scenario=" << cfg.name << " mode=" << mode
            << " seed=" << cfg.seed << " jobs=" << jobs
            << " points=" << cfg.eval_points.size() << " trials=" << cfg.trials
            << "\n";

  xb::attack::AttackReport report;
  if (mode == "point") report = xb::attack::run_point_attack(cfg, jobs);
  else if (mode == "trilat") report = xb::attack::run_multilateration_attack(cfg, jobs);
  else if (mode == "fingerprint") report = xb::attack::run_fingerprint_attack(cfg, jobs);
  else throw UsageError("mode must be point, trilat or fingerprint");

  std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "report.csv", report.csv());
  write_file(dir / "summary.csv", report.summary_csv());
  for (const auto& curve : report.cdfs) {
    std::ostringstream buf;
    for (std::size_t i = 0; i < curve.quantiles.size(); ++i) {
      buf << xb::common::fmt_fixed(i / 100.0, 2) << ' '
          << xb::common::fmt_fixed(curve.quantiles[i], 6) << '\n';
    }
    write_file(dir / ("cdf_" + curve.label + ".dat"), buf.str());
  }
  if (!report.case_study.empty())
    write_file(dir / "case_study.csv", report.case_study_csv());
  std::cout << "report written to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi-to-BLE iBeacon emulation and localization attack toolkit"};
  app.require_subcommand(1);

  std::string identity_path;
  std::string variant = "adjusted";
  std::string qam = "off";
  std::string mode = "early";
  std::string scenario_path;
  std::string attack_mode = "point";
  std::string out_path;
  std::string out_dir = "attack_out";
  int channel = 38;
  bool strict = false;
  bool symbol_scale = false;
  double band = 1.0;
  double offset = 0.0;
  double snr = 0.0;
  double interval = 0.1;
  double duration = 30.0;
  uint64_t trials = 1000;
  uint64_t seed = 1;
  bool seed_set = false;
  int jobs = 1;

  auto* enc = app.add_subcommand("encode", "Build an advertising packet from an identity file");
  enc->add_option("identity", identity_path, "identity JSON file")->required();
  enc->add_option("--channel", channel, "advertising channel (37, 38, 39)");

  auto* emu_cmd = app.add_subcommand("emulate", "Synthesize emulation frames for a canonical packet");
  emu_cmd->add_option("--variant", variant, "basic, adjusted or enhanced");
  emu_cmd->add_option("--qam", qam, "off, 4, 16 or 64");
  emu_cmd->add_option("--channel", channel, "advertising channel (38 or 39)");
  emu_cmd->add_flag("--strict", strict, "restrict quantization to the BLE band");
  emu_cmd->add_option("--out", out_path, "write samples as CSV");

  auto* dec = app.add_subcommand("decode", "Emulate and decode a canonical packet once");
  dec->add_option("--variant", variant, "basic, adjusted or enhanced");
  dec->add_option("--qam", qam, "off, 4, 16 or 64");
  dec->add_option("--offset", offset, "sampling offset in seconds, [0, 5e-7)");
  dec->add_option("--mode", mode, "early or delayed");
  dec->add_option("--snr", snr, "SNR in dB (0 = noise free)");
  dec->add_option("--seed", seed, "noise seed");

  auto* prr = app.add_subcommand("prr", "Monte Carlo packet reception ratio");
  prr->add_option("--variant", variant, "basic, adjusted or enhanced");
  prr->add_option("--qam", qam, "off, 4, 16 or 64");
  prr->add_option("--snr", snr, "SNR in dB (0 = noise free)");
  prr->add_option("--trials", trials, "Monte Carlo trials");
  prr->add_option("--seed", seed, "root seed");
  prr->add_option("--jobs", jobs, "worker threads");
  prr->add_flag("--strict", strict, "restrict quantization to the BLE band");
  prr->add_option("--band", band, "channel filter half width in MHz");
  prr->add_flag("--per-symbol-scale", symbol_scale,
                "rescale the constellation per symbol instead of per frame");

  auto* stab = app.add_subcommand("stability", "Per-second reception trace");
  stab->add_option("--variant", variant, "basic, adjusted or enhanced");
  stab->add_option("--interval", interval, "broadcast interval in seconds");
  stab->add_option("--duration", duration, "trace length in whole seconds");
  stab->add_option("--snr", snr, "SNR in dB (0 = noise free)");
  stab->add_option("--seed", seed, "root seed");

  app.add_subcommand("channels", "Print the WiFi-BLE channel plan");

  auto* atk = app.add_subcommand("attack", "Run a localization attack scenario");
  atk->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  atk->add_option("--mode", attack_mode, "point, trilat or fingerprint");
  atk->add_option("--out", out_dir, "output directory");
  atk->add_option("--seed", seed, "override the scenario seed")
      ->each([&](const std::string&) { seed_set = true; });
  atk->add_option("--jobs", jobs, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (app.got_subcommand("encode")) return cmd_encode(identity_path, channel);
    if (app.got_subcommand("emulate"))
      return cmd_emulate(variant, qam, channel, strict, out_path);
    if (app.got_subcommand("decode"))
      return cmd_decode(variant, qam, offset, mode, snr, seed);
    if (app.got_subcommand("prr"))
      return cmd_prr(variant, qam, snr, trials, seed, jobs, strict, band,
                     symbol_scale);
    if (app.got_subcommand("stability"))
      return cmd_stability(variant, interval, duration, snr, seed);
    if (app.got_subcommand("channels")) return cmd_channels();
    if (app.got_subcommand("attack"))
      return cmd_attack(scenario_path, attack_mode, out_dir,
                        seed_set ? std::optional<uint64_t>(seed) : std::nullopt,
                        jobs);
    std::cerr << "no subcommand selected\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const xb::common::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
