#ifndef XBEACON_RADIO_ENV_HPP
#define XBEACON_RADIO_ENV_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xbeacon/ble_link.hpp"
#include "xbeacon/common.hpp"

namespace xbeacon::env {

// Spectrum coordination between the WiFi transmitter and the BLE scanner.
// Only two of the three advertising channels can be fully covered by a
// 20 MHz OFDM channel; channel 37 overlaps a single megahertz and is
// unusable for emulation.
struct ChannelMapping {
  int ble_channel = 0;        // 37, 38 or 39
  double ble_center_mhz = 0;  // 2402 / 2426 / 2480
  std::optional<int> wifi_channel;
  std::optional<double> wifi_center_mhz;
};

struct ChannelPlan {
  std::vector<ChannelMapping> entries;  // always the three advertising channels

  const ChannelMapping& lookup(int ble_channel) const;
};

ChannelPlan default_channel_plan();

// Log-distance propagation with Gaussian shadowing. The reference power is
// the RSS one meter from the source, which for an honest beacon equals the
// calibration byte it advertises.
struct PathLossModel {
  double exponent = 2.0;      // must stay positive
  double sigma_beacon = 2.0;  // dB, shadowing spread for BLE hardware
  double sigma_ap = 5.0;      // dB, WiFi hardware runs hotter and rougher

  double sigma_for(bool is_ap) const { return is_ap ? sigma_ap : sigma_beacon; }
};

enum class SourceKind { ibeacon, wifi_ap };

// One radio on the floor. A genuine beacon impersonates exactly itself; an
// access point may carry any number of identities at once because it is not
// bound by the advertising schedule of a real beacon chip.
struct Placement {
  common::Vec2 position;
  SourceKind kind = SourceKind::ibeacon;
  double true_power = -59.0;     // p0, actual RSS at one meter
  double advertised_ref = -59.0; // pf, the power byte written into packets
  double interval = 0.1;         // seconds between broadcasts per identity
  std::vector<ble::IBeaconIdentity> impersonated_ids;
  std::optional<double> prr_override;  // bypass the PHY-derived reception rate
};

// What the victim's scanner hands to the estimator. The origin index is
// bookkeeping for reports; estimators must never branch on it.
struct RssObservation {
  std::string beacon_id;
  double rss = 0;           // dBm, after path loss and shadowing
  double embedded_ref = 0;  // the power byte carried inside the packet
  double timestamp = 0;     // seconds within the observation window
  int origin = -1;          // index into the source list, ground truth only
  bool clamped = false;     // receiver sat inside the 0.1 m guard radius
};

// Fraction of broadcast packets the scanner's channel schedule can see.
// A real beacon rotates over all three channels; the emulated one exists
// only on the two channels the plan covers.
struct ScanCoverage {
  double ibeacon = 1.0;
  double wifi_ap = 2.0 / 3.0;

  double for_kind(SourceKind k) const {
    return k == SourceKind::wifi_ap ? wifi_ap : ibeacon;
  }
};

// Reception rate applied to packets from a source before scan coverage.
// Genuine beacons are taken as ideal; emulated sources default to the
// measured full-pipeline figure and can be pinned per placement.
double source_prr(const Placement& source, double fake_prr_default = 0.662);

// Mean received power at the given point, plus one shadowing draw when the
// model's sigma for this source class is nonzero. Distances under 0.1 m are
// clamped there and flagged through the out parameter.
double rss_at(const Placement& source, common::Vec2 receiver,
              const PathLossModel& model, common::Rng& rng,
              bool* clamped = nullptr);

// Simulates one scan window. Every source emits floor(window/interval)
// packets per carried identity; each packet survives with probability
// PRR x coverage and the survivors become observations in emission order
// (source, identity, packet index).
std::vector<RssObservation> observe_window(const std::vector<Placement>& sources,
                                           common::Vec2 receiver,
                                           const PathLossModel& model,
                                           double window, ScanCoverage coverage,
                                           common::Rng& rng,
                                           double fake_prr_default = 0.662);

struct RssiRangeRow {
  double power_level = 0;
  double distance = 0;
  double mean_rss = 0;
};

struct RssiRangeReport {
  std::vector<RssiRangeRow> rows;
  double min_rss = 0;
  double max_rss = 0;
};

// Expected RSS over a (power level, distance) grid for one source; the
// shadowing term has zero mean so no sampling is involved.
RssiRangeReport rssi_range_report(const Placement& source,
                                  const std::vector<double>& distances,
                                  const std::vector<double>& power_levels,
                                  const PathLossModel& model);

}  // namespace xbeacon::env

#endif
