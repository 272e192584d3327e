#include <benchmark/benchmark.h>

#include <vector>

#include "xbeacon/attack_sim.hpp"
#include "xbeacon/ble_link.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/emulation.hpp"
#include "xbeacon/localization.hpp"
#include "xbeacon/receiver.hpp"

namespace {

using namespace xbeacon;

ble::AdvertisingPacket bench_packet() {
  ble::IBeaconIdentity id;
  for (int i = 0; i < 16; ++i) {
    id.proximity_uuid[static_cast<std::size_t>(i)] =
        static_cast<uint8_t>(i * 17);
  }
  id.major = 4660;
  id.minor = 22136;
  auto payload = ble::build_ibeacon_payload(id);
  return ble::assemble_packet(payload, {0xC0, 0xFF, 0xEE, 0x00, 0x11, 0x22},
                              38);
}

emu::EmulationConfig bench_config(int variant, bool qam) {
  emu::EmulationConfig cfg;
  cfg.variant = static_cast<emu::Variant>(variant);
  if (qam) {
    cfg.qam_order = emu::QamOrder::qam64;
    cfg.strict_window = true;
  }
  return cfg;
}

void BM_EmulatePacket(benchmark::State& state) {
  auto packet = bench_packet();
  auto cfg = bench_config(static_cast<int>(state.range(0)),
                          state.range(1) != 0);
  for (auto _ : state) {
    auto frames = emu::emulate_packet(packet, cfg);
    benchmark::DoNotOptimize(frames);
  }
}
BENCHMARK(BM_EmulatePacket)
    ->Args({0, 0})
    ->Args({1, 0})
    ->Args({2, 0})
    ->Args({1, 1})
    ->Args({2, 1});

void BM_DecodePacket(benchmark::State& state) {
  auto packet = bench_packet();
  auto frames = emu::emulate_packet(packet, bench_config(1, false));
  rx::SamplingContext ctx;
  ctx.offset_s = 0.13e-6;
  ctx.mode = rx::Mode::delayed;
  for (auto _ : state) {
    auto res = rx::decode(frames[0], packet, ctx);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_DecodePacket);

void BM_EstimatePrr(benchmark::State& state) {
  auto packet = bench_packet();
  auto cfg = bench_config(2, false);
  auto jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto est = rx::estimate_prr(packet, cfg, std::nullopt, 1000, 1, jobs);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_EstimatePrr)->Arg(1)->Arg(4);

void BM_Multilaterate(benchmark::State& state) {
  std::vector<common::Vec2> anchors = {
      {0.0, 0.0}, {40.0, 0.0}, {40.0, 20.0}, {0.0, 20.0}, {20.0, 10.0}};
  std::vector<double> distances;
  common::Vec2 truth{13.0, 7.0};
  for (const auto& a : anchors) {
    distances.push_back(common::distance(truth, a));
  }
  for (auto _ : state) {
    auto est = loc::multilaterate(anchors, distances);
    benchmark::DoNotOptimize(est);
  }
}
BENCHMARK(BM_Multilaterate);

void BM_WknnLocate(benchmark::State& state) {
  loc::FingerprintDatabase db;
  common::Rng rng(5);
  for (int i = 0; i < 120; ++i) {
    loc::FingerprintSpot spot;
    spot.position = {50.0 * rng.uniform01(), 20.0 * rng.uniform01()};
    for (int b = 0; b < 7; ++b) {
      spot.vector["beacon" + std::to_string(b)] = -40.0 - 40.0 * rng.uniform01();
    }
    db.spots.push_back(std::move(spot));
  }
  std::map<std::string, double> obs = db.spots[60].vector;
  for (auto _ : state) {
    auto fix = loc::wknn_locate(db, obs);
    benchmark::DoNotOptimize(fix);
  }
}
BENCHMARK(BM_WknnLocate);

}  // namespace

BENCHMARK_MAIN();
