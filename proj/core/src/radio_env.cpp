#include "xbeacon/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xbeacon::env {

using common::ConfigError;

const ChannelMapping& ChannelPlan::lookup(int ble_channel) const {
  for (const auto& e : entries) {
    if (e.ble_channel == ble_channel) return e;
  }
  throw ConfigError("not an advertising channel: " + std::to_string(ble_channel));
}

ChannelPlan default_channel_plan() {
  ChannelPlan plan;
  plan.entries.push_back({37, 2402.0, std::nullopt, std::nullopt});
  plan.entries.push_back({38, 2426.0, 4, 2427.0});
  plan.entries.push_back({39, 2480.0, 13, 2472.0});
  return plan;
}

double source_prr(const Placement& source, double fake_prr_default) {
  if (source.prr_override) return *source.prr_override;
  return source.kind == SourceKind::wifi_ap ? fake_prr_default : 1.0;
}

double rss_at(const Placement& source, common::Vec2 receiver,
              const PathLossModel& model, common::Rng& rng, bool* clamped) {
  if (model.exponent <= 0) throw ConfigError("path loss exponent must be positive");
  double d = common::distance(source.position, receiver);
  bool hit_guard = d < 0.1;
  if (hit_guard) d = 0.1;
  if (clamped) *clamped = hit_guard;
  double mean = source.true_power - 10.0 * model.exponent * std::log10(d);
  double sigma = model.sigma_for(source.kind == SourceKind::wifi_ap);
  if (sigma > 0) mean += sigma * rng.normal();
  return mean;
}

std::vector<RssObservation> observe_window(const std::vector<Placement>& sources,
                                           common::Vec2 receiver,
                                           const PathLossModel& model,
                                           double window, ScanCoverage coverage,
                                           common::Rng& rng,
                                           double fake_prr_default) {
  std::vector<RssObservation> out;
  for (std::size_t si = 0; si < sources.size(); ++si) {
    const Placement& src = sources[si];
    if (src.interval <= 0) throw ConfigError("broadcast interval must be positive");
    if (window < src.interval) throw ConfigError("window shorter than one interval");
    if (src.kind == SourceKind::ibeacon && src.impersonated_ids.size() != 1)
      throw ConfigError("a beacon carries exactly its own identity");
    auto packets = static_cast<std::size_t>(std::floor(window / src.interval));
    double survive = source_prr(src, fake_prr_default) * coverage.for_kind(src.kind);
    for (const auto& id : src.impersonated_ids) {
      std::string key = ble::identity_key(id);
      for (std::size_t k = 0; k < packets; ++k) {
        if (rng.uniform01() >= survive) continue;
        RssObservation obs;
        obs.beacon_id = key;
        obs.rss = rss_at(src, receiver, model, rng, &obs.clamped);
        obs.embedded_ref = src.advertised_ref;
        obs.timestamp = static_cast<double>(k) * src.interval;
        obs.origin = static_cast<int>(si);
        out.push_back(std::move(obs));
      }
    }
  }
  return out;
}

RssiRangeReport rssi_range_report(const Placement& source,
                                  const std::vector<double>& distances,
                                  const std::vector<double>& power_levels,
                                  const PathLossModel& model) {
  if (distances.empty() || power_levels.empty())
    throw ConfigError("range report needs nonempty sweeps");
  if (model.exponent <= 0) throw ConfigError("path loss exponent must be positive");
  RssiRangeReport report;
  report.min_rss = std::numeric_limits<double>::infinity();
  report.max_rss = -std::numeric_limits<double>::infinity();
  for (double level : power_levels) {
    for (double d : distances) {
      double dd = std::max(d, 0.1);
      double mean = level - 10.0 * model.exponent * std::log10(dd);
      report.rows.push_back({level, d, mean});
      report.min_rss = std::min(report.min_rss, mean);
      report.max_rss = std::max(report.max_rss, mean);
    }
  }
  return report;
}

}  // namespace xbeacon::env
