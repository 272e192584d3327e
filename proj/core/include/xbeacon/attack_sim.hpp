#ifndef XBEACON_ATTACK_SIM_HPP
#define XBEACON_ATTACK_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xbeacon/ble_link.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/localization.hpp"
#include "xbeacon/radio_env.hpp"

namespace xbeacon::attack {

// Scenario harness for the three localization attacks. A scenario file
// describes the floor, the genuine beacons, the attacker's access points
// and the attack parameters; the run functions turn one scenario into a
// deterministic report.

enum class AssignmentStrategy { manual, random, farthest };

struct BeaconSpec {
  common::Vec2 position;
  ble::IBeaconIdentity identity;
  double true_power = -59.0;
  double advertised_ref = -59.0;  // honest devices advertise their calibration
  double interval = 0.1;
  std::optional<double> prr_override;
};

struct ApSpec {
  common::Vec2 position;
  double true_power = -40.0;
  double interval = 0.1;
  std::optional<double> prr_override;
};

// Which beacons each enabled access point impersonates and with what power
// byte. assignments[i] holds beacon indices for the i-th enabled AP; when
// p_f_per_ap is empty every AP advertises p_f.
struct AttackPlan {
  int enabled_ap_count = 0;
  AssignmentStrategy strategy = AssignmentStrategy::farthest;
  int ids_per_ap = 1;
  double p_f = -40.0;
  std::vector<double> p_f_per_ap;
  std::vector<std::vector<int>> assignments;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double area_w = 50.0;
  double area_h = 20.0;
  std::vector<BeaconSpec> beacons;
  std::vector<ApSpec> aps;
  env::PathLossModel model;
  env::ScanCoverage coverage;
  double fake_prr_default = 0.662;
  std::vector<common::Vec2> eval_points;
  double window = 1.0;
  int trials = 1;
  AttackPlan attack;
  uint64_t seed = 1;
  loc::AggregatePolicy aggregate = loc::AggregatePolicy::mean;

  std::vector<double> p_f_sweep;       // point mode: extra runs at these p_f
  std::vector<double> case_study_pf;   // trilat mode: per-AP power grid
  std::vector<double> sigma_ap_sweep;  // fingerprint mode: stability sweep
  double affected_radius = 15.0;       // fingerprint mode: attack reach
};

ScenarioConfig load_scenario(const std::string& json_text);
ScenarioConfig load_scenario_file(const std::string& path);

struct ReportRow {
  std::string scenario;
  std::string mode;
  int ap_count = 0;
  int point_id = 0;
  double x = 0;
  double y = 0;
  double error_m = 0;   // mean over trials
  double stddev_m = 0;  // repeat-trial spread of the estimate
};

struct CdfCurve {
  std::string label;
  std::vector<double> quantiles;  // 101 samples at 0..100 percent
};

struct CaseStudyRow {
  double pf_a = 0;
  double pf_b = 0;
  common::Vec2 position;
};

struct AttackReport {
  std::vector<ReportRow> rows;
  std::vector<std::pair<std::string, double>> summary;
  std::vector<CdfCurve> cdfs;
  std::vector<CaseStudyRow> case_study;

  std::string csv() const;          // rows with header
  std::string summary_csv() const;  // metric,value
  std::string case_study_csv() const;
  double metric(const std::string& name) const;
};

// Completes the requested plan into concrete per-AP beacon assignments.
// manual passes validated assignments through; random deals beacon indices
// uniformly without replacement; farthest greedily gives each AP in turn
// the remaining beacons most distant from it, ties toward the lower index.
AttackPlan assign_impersonations(const std::vector<ApSpec>& aps,
                                 const std::vector<BeaconSpec>& beacons,
                                 const AttackPlan& requested, common::Rng& rng);

// Single genuine beacon, distance estimation only. Reports per-point error
// of the estimated distance plus an optional p_f sweep.
AttackReport run_point_attack(const ScenarioConfig& cfg, int jobs = 1);

// Range-based fix against every genuine beacon, attacked by 0 through
// enabled_ap_count access points; optional deterministic case study mapping
// per-AP power pairs to the positions the attacker can steer the victim to.
AttackReport run_multilateration_attack(const ScenarioConfig& cfg, int jobs = 1);

// Offline survey of the genuine deployment, then online matching under
// attack. Includes the multi-identity variant and the sigma_ap stability
// sweep when the scenario enables them.
AttackReport run_fingerprint_attack(const ScenarioConfig& cfg, int jobs = 1);

}  // namespace xbeacon::attack

#endif
