#include "xbeacon/attack_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace xbeacon::attack {

using common::ConfigError;
using common::Rng;
using common::Vec2;
using json = nlohmann::json;

namespace {

// Seed streams: one byte of experiment tag, then sub-config, point and
// trial indices packed wide enough that no two work items collide.
constexpr uint64_t kTagPoint = 1;
constexpr uint64_t kTagSweep = 2;
constexpr uint64_t kTagTrilat = 3;
constexpr uint64_t kTagFinger = 4;
constexpr uint64_t kTagVariant = 5;
constexpr uint64_t kTagSigma = 6;
constexpr uint64_t kTagPlan = 7;

uint64_t stream_id(uint64_t tag, uint64_t sub, uint64_t point, uint64_t trial) {
  return (tag << 56) | (sub << 40) | (point << 20) | trial;
}

struct Stats {
  double mean = 0;
  double stddev = 0;  // population spread
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
  return s;
}

double quantile(const std::vector<double>& sorted, double q) {
  double idx = q * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(idx));
  auto hi = static_cast<std::size_t>(std::ceil(idx));
  double frac = idx - static_cast<double>(lo);
  // A flat bracket contributes its value exactly.
  if (sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

CdfCurve make_cdf(std::string label, std::vector<double> values) {
  std::sort(values.begin(), values.end());
  CdfCurve curve;
  curve.label = std::move(label);
  if (values.empty()) return curve;
  curve.quantiles.reserve(101);
  for (int i = 0; i <= 100; ++i) {
    double q = quantile(values, i / 100.0);
    // The curve over a sorted sample never decreases.
    if (!curve.quantiles.empty()) q = std::max(q, curve.quantiles.back());
    curve.quantiles.push_back(q);
  }
  return curve;
}

double spread_around_mean(const std::vector<Vec2>& points) {
  if (points.empty()) return 0;
  Vec2 mean{};
  for (const auto& p : points) mean = mean + p;
  mean = {mean.x / static_cast<double>(points.size()),
          mean.y / static_cast<double>(points.size())};
  double sq = 0;
  for (const auto& p : points) {
    double d = common::distance(p, mean);
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(points.size()));
}

env::Placement beacon_placement(const BeaconSpec& b) {
  env::Placement p;
  p.position = b.position;
  p.kind = env::SourceKind::ibeacon;
  p.true_power = b.true_power;
  p.advertised_ref = b.advertised_ref;
  p.interval = b.interval;
  p.impersonated_ids = {b.identity};
  p.prr_override = b.prr_override;
  return p;
}

double plan_pf(const AttackPlan& plan, int ap_index) {
  if (static_cast<std::size_t>(ap_index) < plan.p_f_per_ap.size())
    return plan.p_f_per_ap[static_cast<std::size_t>(ap_index)];
  return plan.p_f;
}

env::Placement ap_placement(const ApSpec& ap, const AttackPlan& plan,
                            int ap_index, const std::vector<BeaconSpec>& beacons) {
  env::Placement p;
  p.position = ap.position;
  p.kind = env::SourceKind::wifi_ap;
  p.true_power = ap.true_power;
  p.advertised_ref = plan_pf(plan, ap_index);
  p.interval = ap.interval;
  for (int bi : plan.assignments[static_cast<std::size_t>(ap_index)])
    p.impersonated_ids.push_back(beacons[static_cast<std::size_t>(bi)].identity);
  p.prr_override = ap.prr_override;
  return p;
}

// All genuine beacons plus the first ap_count attack sources.
std::vector<env::Placement> build_sources(const ScenarioConfig& cfg,
                                          const AttackPlan& plan, int ap_count) {
  std::vector<env::Placement> sources;
  sources.reserve(cfg.beacons.size() + static_cast<std::size_t>(ap_count));
  for (const auto& b : cfg.beacons) sources.push_back(beacon_placement(b));
  for (int i = 0; i < ap_count; ++i)
    sources.push_back(ap_placement(cfg.aps[static_cast<std::size_t>(i)], plan, i,
                                   cfg.beacons));
  return sources;
}

std::map<std::string, loc::PooledReading> one_window(
    const ScenarioConfig& cfg, const std::vector<env::Placement>& sources,
    Vec2 receiver, const env::PathLossModel& model, Rng& rng) {
  auto obs = env::observe_window(sources, receiver, model, cfg.window,
                                 cfg.coverage, rng, cfg.fake_prr_default);
  return loc::aggregate_observations(obs, cfg.aggregate);
}

void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_common(const ScenarioConfig& cfg) {
  require(cfg.trials >= 1, "trials must be at least 1");
  require(!cfg.eval_points.empty(), "scenario has no evaluation points");
  require(cfg.window > 0, "window must be positive");
  auto inside = [&](Vec2 p) {
    return p.x >= 0 && p.x <= cfg.area_w && p.y >= 0 && p.y <= cfg.area_h;
  };
  for (const auto& b : cfg.beacons)
    require(inside(b.position), "beacon placed outside the area");
  for (const auto& a : cfg.aps)
    require(inside(a.position), "access point placed outside the area");
}

AttackPlan complete_plan(const ScenarioConfig& cfg) {
  Rng rng(common::derive_seed(cfg.seed, stream_id(kTagPlan, 0, 0, 0)));
  return assign_impersonations(cfg.aps, cfg.beacons, cfg.attack, rng);
}

void push_metric(AttackReport& report, std::string name, double value) {
  report.summary.emplace_back(std::move(name), value);
}

}  // namespace

AttackPlan assign_impersonations(const std::vector<ApSpec>& aps,
                                 const std::vector<BeaconSpec>& beacons,
                                 const AttackPlan& requested, Rng& rng) {
  require(!beacons.empty(), "no beacons deployed");
  require(requested.enabled_ap_count >= 0 &&
              static_cast<std::size_t>(requested.enabled_ap_count) <= aps.size(),
          "enabled_ap_count exceeds deployed access points");
  require(requested.ids_per_ap >= 1, "ids_per_ap must be at least 1");

  AttackPlan plan = requested;
  auto enabled = static_cast<std::size_t>(plan.enabled_ap_count);
  auto per_ap = static_cast<std::size_t>(plan.ids_per_ap);

  if (plan.strategy == AssignmentStrategy::manual) {
    require(plan.assignments.size() >= enabled,
            "manual plan does not cover every enabled access point");
    plan.assignments.resize(enabled);
    for (const auto& ids : plan.assignments) {
      require(!ids.empty(), "manual assignment with no identities");
      for (int bi : ids)
        require(bi >= 0 && static_cast<std::size_t>(bi) < beacons.size(),
                "manual plan references an unknown beacon");
    }
    return plan;
  }

  require(enabled * per_ap <= beacons.size(),
          "not enough beacons for the requested assignment");
  std::vector<int> pool(beacons.size());
  std::iota(pool.begin(), pool.end(), 0);

  plan.assignments.assign(enabled, {});
  if (plan.strategy == AssignmentStrategy::random) {
    // Fisher-Yates, then deal ids_per_ap to each AP in order.
    for (std::size_t i = pool.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)));
      std::swap(pool[i - 1], pool[j]);
    }
    std::size_t next = 0;
    for (std::size_t a = 0; a < enabled; ++a) {
      for (std::size_t j = 0; j < per_ap; ++j)
        plan.assignments[a].push_back(pool[next++]);
      std::sort(plan.assignments[a].begin(), plan.assignments[a].end());
    }
    return plan;
  }

  // farthest: APs draw from a shared pool so identities never collide.
  for (std::size_t a = 0; a < enabled; ++a) {
    for (std::size_t j = 0; j < per_ap; ++j) {
      std::size_t best = 0;
      double best_d = -1;
      for (std::size_t c = 0; c < pool.size(); ++c) {
        double d = common::distance(aps[a].position,
                                    beacons[static_cast<std::size_t>(pool[c])].position);
        if (d > best_d + 1e-12) { best_d = d; best = c; }
      }
      plan.assignments[a].push_back(pool[best]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
    }
    std::sort(plan.assignments[a].begin(), plan.assignments[a].end());
  }
  return plan;
}

AttackReport run_point_attack(const ScenarioConfig& cfg, int jobs) {
  validate_common(cfg);
  require(cfg.beacons.size() == 1, "point scenario needs exactly one beacon");
  AttackPlan plan = complete_plan(cfg);
  AttackReport report;

  const auto n_points = cfg.eval_points.size();
  const auto n_trials = static_cast<std::size_t>(cfg.trials);
  const std::string beacon_key = ble::identity_key(cfg.beacons[0].identity);

  struct PointResult {
    std::vector<double> errors;     // one per contributing trial
    std::vector<double> estimates;  // estimated distances
  };

  // One pass over the evaluation grid for a fixed plan; tag/sub pick the
  // seed stream so repeated passes stay independent but reproducible.
  auto run_pass = [&](const AttackPlan& pass_plan, uint64_t tag, uint64_t sub) {
    auto sources = build_sources(cfg, pass_plan, pass_plan.enabled_ap_count);
    std::vector<PointResult> results(n_points);
    common::parallel_for(n_points, jobs, [&](std::size_t pi) {
      Vec2 pt = cfg.eval_points[pi];
      double true_d = std::max(common::distance(pt, cfg.beacons[0].position), 0.1);
      for (std::size_t t = 0; t < n_trials; ++t) {
        Rng rng(common::derive_seed(cfg.seed, stream_id(tag, sub, pi, t)));
        auto pooled = one_window(cfg, sources, pt, cfg.model, rng);
        auto it = pooled.find(beacon_key);
        if (it == pooled.end()) continue;  // window lost every packet
        double est = loc::estimate_distance(it->second.embedded_ref,
                                            it->second.rss, cfg.model.exponent);
        results[pi].estimates.push_back(est);
        results[pi].errors.push_back(std::abs(est - true_d));
      }
    });
    return results;
  };

  auto base = run_pass(plan, kTagPoint, 0);
  std::vector<double> all_errors;
  std::vector<double> all_estimates;
  for (std::size_t pi = 0; pi < n_points; ++pi) {
    ReportRow row;
    row.scenario = cfg.name;
    row.mode = "point";
    row.ap_count = plan.enabled_ap_count;
    row.point_id = static_cast<int>(pi);
    row.x = cfg.eval_points[pi].x;
    row.y = cfg.eval_points[pi].y;
    row.error_m = stats_of(base[pi].errors).mean;
    row.stddev_m = stats_of(base[pi].estimates).stddev;
    report.rows.push_back(std::move(row));
    all_errors.insert(all_errors.end(), base[pi].errors.begin(), base[pi].errors.end());
    all_estimates.insert(all_estimates.end(), base[pi].estimates.begin(),
                         base[pi].estimates.end());
  }
  push_metric(report, "mean_error_m", stats_of(all_errors).mean);
  if (!all_errors.empty()) {
    auto sorted = all_errors;
    std::sort(sorted.begin(), sorted.end());
    push_metric(report, "median_error_m", quantile(sorted, 0.5));
  }
  push_metric(report, "mean_estimated_distance_m", stats_of(all_estimates).mean);
  report.cdfs.push_back(make_cdf("point_ap" + std::to_string(plan.enabled_ap_count),
                                 std::move(all_errors)));

  for (std::size_t s = 0; s < cfg.p_f_sweep.size(); ++s) {
    AttackPlan swept = plan;
    swept.p_f = cfg.p_f_sweep[s];
    swept.p_f_per_ap.clear();
    auto res = run_pass(swept, kTagSweep, s);
    std::vector<double> errors, estimates;
    for (const auto& r : res) {
      errors.insert(errors.end(), r.errors.begin(), r.errors.end());
      estimates.insert(estimates.end(), r.estimates.begin(), r.estimates.end());
    }
    std::string suffix = "@pf=" + common::fmt_fixed(swept.p_f, 1);
    push_metric(report, "sweep_mean_error" + suffix, stats_of(errors).mean);
    push_metric(report, "sweep_mean_estimate" + suffix, stats_of(estimates).mean);
  }
  return report;
}

AttackReport run_multilateration_attack(const ScenarioConfig& cfg, int jobs) {
  validate_common(cfg);
  require(cfg.beacons.size() >= 3, "multilateration needs at least 3 beacons");
  AttackPlan plan = complete_plan(cfg);
  AttackReport report;

  const auto n_points = cfg.eval_points.size();
  const auto n_trials = static_cast<std::size_t>(cfg.trials);
  std::vector<std::string> keys;
  for (const auto& b : cfg.beacons) keys.push_back(ble::identity_key(b.identity));

  auto locate = [&](const std::map<std::string, loc::PooledReading>& pooled)
      -> std::optional<Vec2> {
    std::vector<Vec2> anchors;
    std::vector<double> dists;
    for (std::size_t bi = 0; bi < cfg.beacons.size(); ++bi) {
      auto it = pooled.find(keys[bi]);
      if (it == pooled.end()) continue;
      anchors.push_back(cfg.beacons[bi].position);
      dists.push_back(loc::estimate_distance(it->second.embedded_ref,
                                             it->second.rss, cfg.model.exponent));
    }
    if (anchors.size() < 3) return std::nullopt;
    return loc::multilaterate(anchors, dists).position;
  };

  for (int c = 0; c <= plan.enabled_ap_count; ++c) {
    auto sources = build_sources(cfg, plan, c);
    struct PointResult {
      std::vector<double> errors;
      std::vector<Vec2> fixes;
    };
    std::vector<PointResult> results(n_points);
    common::parallel_for(n_points, jobs, [&](std::size_t pi) {
      Vec2 pt = cfg.eval_points[pi];
      for (std::size_t t = 0; t < n_trials; ++t) {
        Rng rng(common::derive_seed(
            cfg.seed, stream_id(kTagTrilat, static_cast<uint64_t>(c), pi, t)));
        auto pooled = one_window(cfg, sources, pt, cfg.model, rng);
        auto fix = locate(pooled);
        if (!fix) continue;
        results[pi].fixes.push_back(*fix);
        results[pi].errors.push_back(common::distance(*fix, pt));
      }
    });

    std::vector<double> all_errors;
    for (std::size_t pi = 0; pi < n_points; ++pi) {
      ReportRow row;
      row.scenario = cfg.name;
      row.mode = "trilat";
      row.ap_count = c;
      row.point_id = static_cast<int>(pi);
      row.x = cfg.eval_points[pi].x;
      row.y = cfg.eval_points[pi].y;
      row.error_m = stats_of(results[pi].errors).mean;
      row.stddev_m = spread_around_mean(results[pi].fixes);
      report.rows.push_back(std::move(row));
      all_errors.insert(all_errors.end(), results[pi].errors.begin(),
                        results[pi].errors.end());
    }
    std::string suffix = "@ap" + std::to_string(c);
    push_metric(report, "mean_error" + suffix, stats_of(all_errors).mean);
    if (!all_errors.empty()) {
      auto sorted = all_errors;
      std::sort(sorted.begin(), sorted.end());
      push_metric(report, "median_error" + suffix, quantile(sorted, 0.5));
    }
    report.cdfs.push_back(make_cdf("trilat_ap" + std::to_string(c),
                                   std::move(all_errors)));
  }

  // Deterministic steering map: noise off, losses off, two access points,
  // every power pair from the grid.
  if (!cfg.case_study_pf.empty() && plan.enabled_ap_count >= 2) {
    ScenarioConfig quiet = cfg;
    quiet.model.sigma_beacon = 0;
    quiet.model.sigma_ap = 0;
    quiet.fake_prr_default = 1.0;
    quiet.coverage = {1.0, 1.0};
    for (auto& b : quiet.beacons) b.prr_override = 1.0;
    for (auto& a : quiet.aps) a.prr_override = 1.0;
    Vec2 pt = cfg.eval_points[0];
    for (double pf_a : cfg.case_study_pf) {
      for (double pf_b : cfg.case_study_pf) {
        AttackPlan pair_plan = plan;
        pair_plan.enabled_ap_count = 2;
        pair_plan.p_f_per_ap = {pf_a, pf_b};
        auto sources = build_sources(quiet, pair_plan, 2);
        Rng rng(common::derive_seed(cfg.seed, stream_id(kTagTrilat, 99, 0, 0)));
        auto pooled = one_window(quiet, sources, pt, quiet.model, rng);
        if (auto fix = locate(pooled))
          report.case_study.push_back({pf_a, pf_b, *fix});
      }
    }
    push_metric(report, "case_study_points",
                static_cast<double>(report.case_study.size()));
  }
  return report;
}

AttackReport run_fingerprint_attack(const ScenarioConfig& cfg, int jobs) {
  validate_common(cfg);
  require(!cfg.beacons.empty(), "fingerprint scenario has no beacons");
  AttackPlan plan = complete_plan(cfg);
  AttackReport report;

  const auto n_points = cfg.eval_points.size();
  const auto n_trials = static_cast<std::size_t>(cfg.trials);

  // Offline survey: noise-free expected RSS of the genuine deployment.
  loc::FingerprintDatabase db;
  for (const auto& pt : cfg.eval_points) {
    loc::FingerprintSpot spot;
    spot.position = pt;
    for (const auto& b : cfg.beacons) {
      double d = std::max(common::distance(pt, b.position), 0.1);
      spot.vector[ble::identity_key(b.identity)] =
          b.true_power - 10.0 * cfg.model.exponent * std::log10(d);
    }
    db.spots.push_back(std::move(spot));
  }

  auto observe_and_match = [&](const std::vector<env::Placement>& sources,
                               Vec2 pt, const env::PathLossModel& model,
                               Rng& rng) -> std::optional<Vec2> {
    auto pooled = one_window(cfg, sources, pt, model, rng);
    if (pooled.empty()) return std::nullopt;
    std::map<std::string, double> obs_vec;
    for (const auto& [id, reading] : pooled) obs_vec[id] = reading.rss;
    return loc::wknn_locate(db, obs_vec);
  };

  // Mean error over spots for a pass; also exposes per-spot outputs.
  struct PassResult {
    std::vector<std::vector<double>> errors;  // per spot, per trial
    std::vector<std::vector<Vec2>> fixes;
  };
  auto run_pass = [&](const AttackPlan& pass_plan, int ap_count,
                      const env::PathLossModel& model, uint64_t tag,
                      uint64_t sub) {
    auto sources = build_sources(cfg, pass_plan, ap_count);
    PassResult res;
    res.errors.resize(n_points);
    res.fixes.resize(n_points);
    common::parallel_for(n_points, jobs, [&](std::size_t pi) {
      Vec2 pt = cfg.eval_points[pi];
      for (std::size_t t = 0; t < n_trials; ++t) {
        Rng rng(common::derive_seed(cfg.seed, stream_id(tag, sub, pi, t)));
        if (auto fix = observe_and_match(sources, pt, model, rng)) {
          res.fixes[pi].push_back(*fix);
          res.errors[pi].push_back(common::distance(*fix, pt));
        }
      }
    });
    return res;
  };

  for (int c = 0; c <= plan.enabled_ap_count; ++c) {
    auto res = run_pass(plan, c, cfg.model, kTagFinger, static_cast<uint64_t>(c));
    std::vector<double> all_errors;
    for (std::size_t pi = 0; pi < n_points; ++pi) {
      ReportRow row;
      row.scenario = cfg.name;
      row.mode = "fingerprint";
      row.ap_count = c;
      row.point_id = static_cast<int>(pi);
      row.x = cfg.eval_points[pi].x;
      row.y = cfg.eval_points[pi].y;
      row.error_m = stats_of(res.errors[pi]).mean;
      row.stddev_m = spread_around_mean(res.fixes[pi]);
      report.rows.push_back(std::move(row));
      all_errors.insert(all_errors.end(), res.errors[pi].begin(),
                        res.errors[pi].end());
    }
    std::string suffix = "@ap" + std::to_string(c);
    push_metric(report, "mean_error" + suffix, stats_of(all_errors).mean);
    report.cdfs.push_back(make_cdf("fingerprint_ap" + std::to_string(c),
                                   std::move(all_errors)));
  }

  // Multi-identity variant: three access points carrying one versus two
  // identities each, compared over the spots the attackers can reach.
  if (plan.enabled_ap_count >= 3 && cfg.beacons.size() >= 6) {
    auto affected_mean = [&](const PassResult& res,
                             const std::vector<std::size_t>& spot_ids) {
      std::vector<double> pool;
      for (auto pi : spot_ids)
        pool.insert(pool.end(), res.errors[pi].begin(), res.errors[pi].end());
      return stats_of(pool).mean;
    };
    std::vector<std::size_t> affected;
    for (std::size_t pi = 0; pi < n_points; ++pi) {
      for (int a = 0; a < 3; ++a) {
        if (common::distance(cfg.eval_points[pi],
                             cfg.aps[static_cast<std::size_t>(a)].position) <=
            cfg.affected_radius) {
          affected.push_back(pi);
          break;
        }
      }
    }
    for (int per_ap : {1, 2}) {
      AttackPlan req = cfg.attack;
      req.enabled_ap_count = 3;
      req.ids_per_ap = per_ap;
      req.assignments.clear();
      Rng rng(common::derive_seed(
          cfg.seed, stream_id(kTagPlan, static_cast<uint64_t>(per_ap), 0, 0)));
      AttackPlan variant = assign_impersonations(cfg.aps, cfg.beacons, req, rng);
      auto res = run_pass(variant, 3, cfg.model, kTagVariant,
                          static_cast<uint64_t>(per_ap));
      push_metric(report,
                  "affected_mean_error@3ap" + std::to_string(per_ap) + "id",
                  affected_mean(res, affected));
    }
    push_metric(report, "affected_spots", static_cast<double>(affected.size()));
  }

  // Stability sweep: identical seed streams per level so the comparison is
  // paired; only the access-point shadowing spread changes.
  for (std::size_t s = 0; s < cfg.sigma_ap_sweep.size(); ++s) {
    env::PathLossModel model = cfg.model;
    model.sigma_ap = cfg.sigma_ap_sweep[s];
    auto res = run_pass(plan, plan.enabled_ap_count, model, kTagSigma, 0);
    std::vector<double> spreads;
    for (std::size_t pi = 0; pi < n_points; ++pi)
      spreads.push_back(spread_around_mean(res.fixes[pi]));
    push_metric(report,
                "mean_location_stddev@sigma=" + common::fmt_fixed(model.sigma_ap, 1),
                stats_of(spreads).mean);
  }
  return report;
}

std::string AttackReport::csv() const {
  std::ostringstream out;
  out << "scenario,mode,ap_count,point_id,x,y,error_m,stddev_m\n";
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.mode << ',' << r.ap_count << ',' << r.point_id
        << ',' << common::fmt_fixed(r.x, 3) << ',' << common::fmt_fixed(r.y, 3)
        << ',' << common::fmt_fixed(r.error_m, 6) << ','
        << common::fmt_fixed(r.stddev_m, 6) << '\n';
  }
  return out.str();
}

std::string AttackReport::summary_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  for (const auto& [name, value] : summary)
    out << name << ',' << common::fmt_fixed(value, 6) << '\n';
  return out.str();
}

std::string AttackReport::case_study_csv() const {
  std::ostringstream out;
  out << "pf_a,pf_b,x,y\n";
  for (const auto& r : case_study) {
    out << common::fmt_fixed(r.pf_a, 1) << ',' << common::fmt_fixed(r.pf_b, 1)
        << ',' << common::fmt_fixed(r.position.x, 4) << ','
        << common::fmt_fixed(r.position.y, 4) << '\n';
  }
  return out.str();
}

double AttackReport::metric(const std::string& name) const {
  for (const auto& [key, value] : summary) {
    if (key == name) return value;
  }
  throw ConfigError("no such summary metric: " + name);
}

namespace {

ble::IBeaconIdentity scenario_identity(uint16_t major, uint16_t minor,
                                       double advertised_ref) {
  ble::IBeaconIdentity id;
  // One fixed UUID per deployment; identities differ by major/minor.
  const std::array<uint8_t, 16> base = {0x5A, 0x1D, 0x77, 0x0C, 0x3B, 0x21,
                                        0x4E, 0x8A, 0x9F, 0x02, 0x6D, 0x55,
                                        0xE1, 0x38, 0xC4, 0x70};
  std::copy(base.begin(), base.end(), id.proximity_uuid.begin());
  id.major = major;
  id.minor = minor;
  id.tx_power_ref = static_cast<int>(std::llround(advertised_ref));
  return id;
}

Vec2 parse_point(const json& j) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError("points must be [x, y] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

AssignmentStrategy parse_strategy(const std::string& s) {
  if (s == "manual") return AssignmentStrategy::manual;
  if (s == "random") return AssignmentStrategy::random;
  if (s == "farthest") return AssignmentStrategy::farthest;
  throw ConfigError("unknown assignment strategy: " + s);
}

loc::AggregatePolicy parse_policy(const std::string& s) {
  if (s == "mean") return loc::AggregatePolicy::mean;
  if (s == "median") return loc::AggregatePolicy::median;
  if (s == "latest") return loc::AggregatePolicy::latest;
  throw ConfigError("unknown aggregation policy: " + s);
}

}  // namespace

ScenarioConfig load_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("schema", 0) != 1)
      throw ConfigError("scenario schema must be 1");
    ScenarioConfig cfg;
    cfg.name = j.value("name", std::string("scenario"));
    cfg.area_w = j.at("area").at("w").get<double>();
    cfg.area_h = j.at("area").at("h").get<double>();
    if (cfg.area_w <= 0 || cfg.area_h <= 0)
      throw ConfigError("area dimensions must be positive");
    if (j.contains("model")) {
      const auto& m = j["model"];
      cfg.model.exponent = m.value("n", cfg.model.exponent);
      cfg.model.sigma_beacon = m.value("sigma_beacon", cfg.model.sigma_beacon);
      cfg.model.sigma_ap = m.value("sigma_ap", cfg.model.sigma_ap);
    }
    if (j.contains("coverage")) {
      cfg.coverage.ibeacon = j["coverage"].value("ibeacon", cfg.coverage.ibeacon);
      cfg.coverage.wifi_ap = j["coverage"].value("wifi_ap", cfg.coverage.wifi_ap);
    }
    cfg.fake_prr_default = j.value("fake_prr", cfg.fake_prr_default);
    cfg.window = j.value("window", cfg.window);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("aggregate"))
      cfg.aggregate = parse_policy(j["aggregate"].get<std::string>());

    uint16_t next_major = 1;
    for (const auto& jb : j.at("beacons")) {
      BeaconSpec b;
      b.position = {jb.at("x").get<double>(), jb.at("y").get<double>()};
      b.true_power = jb.value("true_power", b.true_power);
      b.advertised_ref = jb.value("advertised_ref", b.true_power);
      b.interval = jb.value("interval", b.interval);
      if (jb.contains("prr_override"))
        b.prr_override = jb["prr_override"].get<double>();
      auto major = jb.value("major", next_major);
      auto minor = jb.value("minor", static_cast<uint16_t>(1));
      b.identity = scenario_identity(major, minor, b.advertised_ref);
      next_major = static_cast<uint16_t>(major + 1);
      cfg.beacons.push_back(std::move(b));
    }
    for (const auto& ja : j.value("aps", json::array())) {
      ApSpec a;
      a.position = {ja.at("x").get<double>(), ja.at("y").get<double>()};
      a.true_power = ja.value("true_power", a.true_power);
      a.interval = ja.value("interval", a.interval);
      if (ja.contains("prr_override"))
        a.prr_override = ja["prr_override"].get<double>();
      cfg.aps.push_back(std::move(a));
    }

    if (j.contains("attack")) {
      const auto& ja = j["attack"];
      cfg.attack.enabled_ap_count = ja.value("enabled_ap_count", 0);
      if (ja.contains("strategy"))
        cfg.attack.strategy = parse_strategy(ja["strategy"].get<std::string>());
      cfg.attack.ids_per_ap = ja.value("ids_per_ap", 1);
      cfg.attack.p_f = ja.value("p_f", cfg.attack.p_f);
      if (ja.contains("p_f_per_ap"))
        cfg.attack.p_f_per_ap = ja["p_f_per_ap"].get<std::vector<double>>();
      if (ja.contains("assignments"))
        cfg.attack.assignments =
            ja["assignments"].get<std::vector<std::vector<int>>>();
    }

    const auto& ep = j.at("eval_points");
    if (ep.is_object() && ep.contains("grid")) {
      int nx = ep["grid"].at("nx").get<int>();
      int ny = ep["grid"].at("ny").get<int>();
      if (nx < 1 || ny < 1) throw ConfigError("grid dimensions must be positive");
      for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
          cfg.eval_points.push_back({cfg.area_w * (ix + 0.5) / nx,
                                     cfg.area_h * (iy + 0.5) / ny});
        }
      }
    } else if (ep.is_array()) {
      for (const auto& p : ep) cfg.eval_points.push_back(parse_point(p));
    } else {
      throw ConfigError("eval_points must be a list or a grid spec");
    }

    cfg.p_f_sweep = j.value("p_f_sweep", cfg.p_f_sweep);
    cfg.case_study_pf = j.value("case_study_pf", cfg.case_study_pf);
    cfg.sigma_ap_sweep = j.value("sigma_ap_sweep", cfg.sigma_ap_sweep);
    cfg.affected_radius = j.value("affected_radius", cfg.affected_radius);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is missing required fields: ") +
                      e.what());
  }
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

}  // namespace xbeacon::attack
