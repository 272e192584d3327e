#include "xbeacon/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xbeacon::loc {

using common::ConfigError;
using common::GeometryError;
using common::Vec2;

double estimate_distance(double embedded_ref, double rss, double exponent) {
  if (exponent <= 0) throw ConfigError("path loss exponent must be positive");
  return std::pow(10.0, (embedded_ref - rss) / (10.0 * exponent));
}

double fake_distance(double d0, double p0, double pf, double exponent) {
  if (exponent <= 0) throw ConfigError("path loss exponent must be positive");
  if (d0 <= 0) throw ConfigError("true distance must be positive");
  return d0 * std::pow(10.0, (pf - p0) / (10.0 * exponent));
}

namespace {

double range_cost(const std::vector<Vec2>& anchors,
                  const std::vector<double>& distances, Vec2 x) {
  double c = 0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double r = common::distance(x, anchors[i]) - distances[i];
    c += r * r;
  }
  return c;
}

// Solves the linearization obtained by subtracting the first range equation
// from the others. Returns nothing when the normal matrix is numerically
// rank-deficient, which happens exactly when the anchors are near a line.
std::optional<Vec2> linear_init(const std::vector<Vec2>& anchors,
                                const std::vector<double>& distances) {
  double m00 = 0, m01 = 0, m11 = 0, b0 = 0, b1 = 0;
  const Vec2 a0 = anchors[0];
  double scale = 0;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    Vec2 r{2.0 * (anchors[i].x - a0.x), 2.0 * (anchors[i].y - a0.y)};
    double c = (anchors[i].x * anchors[i].x + anchors[i].y * anchors[i].y) -
               (a0.x * a0.x + a0.y * a0.y) -
               (distances[i] * distances[i] - distances[0] * distances[0]);
    m00 += r.x * r.x;
    m01 += r.x * r.y;
    m11 += r.y * r.y;
    b0 += r.x * c;
    b1 += r.y * c;
    scale = std::max(scale, r.x * r.x + r.y * r.y);
  }
  double det = m00 * m11 - m01 * m01;
  if (scale <= 0 || std::abs(det) < 1e-9 * scale * scale) return std::nullopt;
  return Vec2{(m11 * b0 - m01 * b1) / det, (m00 * b1 - m01 * b0) / det};
}

Vec2 grid_init(const std::vector<Vec2>& anchors,
               const std::vector<double>& distances) {
  double lo_x = anchors[0].x, hi_x = anchors[0].x;
  double lo_y = anchors[0].y, hi_y = anchors[0].y;
  double reach = 0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    lo_x = std::min(lo_x, anchors[i].x);
    hi_x = std::max(hi_x, anchors[i].x);
    lo_y = std::min(lo_y, anchors[i].y);
    hi_y = std::max(hi_y, anchors[i].y);
    reach = std::max(reach, distances[i]);
  }
  lo_x -= reach; hi_x += reach;
  lo_y -= reach; hi_y += reach;
  const int steps = 40;
  Vec2 best{lo_x, lo_y};
  double best_cost = range_cost(anchors, distances, best);
  for (int ix = 0; ix <= steps; ++ix) {
    for (int iy = 0; iy <= steps; ++iy) {
      Vec2 p{lo_x + (hi_x - lo_x) * ix / steps,
             lo_y + (hi_y - lo_y) * iy / steps};
      double c = range_cost(anchors, distances, p);
      if (c < best_cost) { best_cost = c; best = p; }
    }
  }
  return best;
}

}  // namespace

PositionEstimate multilaterate(const std::vector<Vec2>& anchors,
                               const std::vector<double>& distances,
                               std::optional<Vec2> init) {
  if (anchors.size() != distances.size())
    throw std::invalid_argument("anchor and distance counts differ");
  if (anchors.size() < 3)
    throw std::invalid_argument("multilateration needs at least 3 anchors");
  for (double d : distances) {
    if (!(d >= 0) || !std::isfinite(d))
      throw std::invalid_argument("distances must be finite and nonnegative");
  }

  // A line of anchors leaves a mirror ambiguity across it.
  double span = 0, max_cross = 0;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    Vec2 u = anchors[i] - anchors[0];
    span = std::max(span, u.x * u.x + u.y * u.y);
    for (std::size_t j = i + 1; j < anchors.size(); ++j) {
      Vec2 v = anchors[j] - anchors[0];
      max_cross = std::max(max_cross, std::abs(u.x * v.y - u.y * v.x));
    }
  }
  if (span <= 0 || max_cross < 1e-9 * span)
    throw GeometryError("anchors are collinear");

  Vec2 x{};
  if (init) {
    x = *init;
  } else if (auto lin = linear_init(anchors, distances)) {
    x = *lin;
  } else {
    x = grid_init(anchors, distances);
  }

  const auto n = anchors.size();
  double cost = range_cost(anchors, distances, x);
  PositionEstimate est;
  est.converged = false;
  int it = 0;
  for (; it < 100; ++it) {
    // Gauss-Newton normal equations for the range residuals.
    double m00 = 0, m01 = 0, m11 = 0, g0 = 0, g1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 diff = x - anchors[i];
      double dist = common::norm(diff);
      Vec2 u = dist > 1e-12 ? Vec2{diff.x / dist, diff.y / dist} : Vec2{1.0, 0.0};
      double r = dist - distances[i];
      m00 += u.x * u.x;
      m01 += u.x * u.y;
      m11 += u.y * u.y;
      g0 += u.x * r;
      g1 += u.y * r;
    }
    double det = m00 * m11 - m01 * m01;
    Vec2 step;
    if (std::abs(det) > 1e-12) {
      step = Vec2{-(m11 * g0 - m01 * g1) / det, -(m00 * g1 - m01 * g0) / det};
    } else {
      // Degenerate curvature at this iterate: fall back to steepest descent.
      step = Vec2{-g0, -g1};
    }

    double scale = 1.0;
    Vec2 applied{};
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      Vec2 trial = x + Vec2{step.x * scale, step.y * scale};
      double trial_cost = range_cost(anchors, distances, trial);
      if (trial_cost <= cost) {
        applied = Vec2{step.x * scale, step.y * scale};
        x = trial;
        cost = trial_cost;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      // No damped step lowers the cost: the iterate is a local minimum to
      // working precision.
      est.converged = true;
      break;
    }
    if (common::norm(applied) < 1e-6) {
      est.converged = true;
      ++it;
      break;
    }
  }
  est.position = x;
  est.iterations = it;
  est.residual = std::sqrt(cost / static_cast<double>(n));
  return est;
}

std::vector<std::string> FingerprintDatabase::id_set() const {
  std::set<std::string> ids;
  for (const auto& s : spots) {
    for (const auto& [id, _] : s.vector) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

std::string FingerprintDatabase::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "spot_id,x,y,beacon_id,rss\n";
  for (std::size_t i = 0; i < spots.size(); ++i) {
    for (const auto& [id, rss] : spots[i].vector) {
      out << i << ',' << spots[i].position.x << ',' << spots[i].position.y
          << ',' << id << ',' << rss << '\n';
    }
  }
  return out.str();
}

FingerprintDatabase FingerprintDatabase::from_csv(const std::string& text) {
  FingerprintDatabase db;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) { first = false; continue; }  // header
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw ConfigError("malformed fingerprint row: " + line);
    auto spot_id = static_cast<std::size_t>(std::stoul(fields[0]));
    if (spot_id > db.spots.size()) throw ConfigError("spot ids must be contiguous");
    if (spot_id == db.spots.size()) {
      FingerprintSpot s;
      s.position = {std::stod(fields[1]), std::stod(fields[2])};
      db.spots.push_back(std::move(s));
    }
    db.spots[spot_id].vector[fields[3]] = std::stod(fields[4]);
  }
  return db;
}

common::Vec2 wknn_locate(const FingerprintDatabase& db,
                         const std::map<std::string, double>& observation,
                         int k, double epsilon) {
  if (db.spots.empty()) throw ConfigError("empty fingerprint database");
  if (k < 1 || static_cast<std::size_t>(k) > db.spots.size())
    throw ConfigError("k must lie in [1, spot count]");
  auto ids = db.id_set();

  std::vector<std::pair<double, std::size_t>> ranked;
  ranked.reserve(db.spots.size());
  for (std::size_t i = 0; i < db.spots.size(); ++i) {
    double sq = 0;
    for (const auto& id : ids) {
      auto sit = db.spots[i].vector.find(id);
      double sv = sit == db.spots[i].vector.end() ? db.missing_value : sit->second;
      auto oit = observation.find(id);
      double ov = oit == observation.end() ? db.missing_value : oit->second;
      double delta = sv - ov;
      sq += delta * delta;
    }
    ranked.emplace_back(std::sqrt(sq), i);
  }
  std::sort(ranked.begin(), ranked.end());

  double wsum = 0;
  Vec2 acc{};
  for (int j = 0; j < k; ++j) {
    double w = 1.0 / (epsilon + ranked[j].first);
    acc = acc + Vec2{db.spots[ranked[j].second].position.x * w,
                     db.spots[ranked[j].second].position.y * w};
    wsum += w;
  }
  return {acc.x / wsum, acc.y / wsum};
}

std::map<std::string, PooledReading> aggregate_observations(
    const std::vector<env::RssObservation>& observations,
    AggregatePolicy policy) {
  std::map<std::string, std::vector<const env::RssObservation*>> groups;
  for (const auto& o : observations) groups[o.beacon_id].push_back(&o);

  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  };

  std::map<std::string, PooledReading> out;
  for (auto& [id, group] : groups) {
    PooledReading pooled;
    pooled.count = group.size();
    switch (policy) {
      case AggregatePolicy::mean: {
        double rss = 0, ref = 0;
        for (const auto* o : group) { rss += o->rss; ref += o->embedded_ref; }
        pooled.rss = rss / static_cast<double>(group.size());
        pooled.embedded_ref = ref / static_cast<double>(group.size());
        break;
      }
      case AggregatePolicy::median: {
        std::vector<double> rss, ref;
        for (const auto* o : group) {
          rss.push_back(o->rss);
          ref.push_back(o->embedded_ref);
        }
        pooled.rss = median_of(std::move(rss));
        pooled.embedded_ref = median_of(std::move(ref));
        break;
      }
      case AggregatePolicy::latest: {
        const env::RssObservation* last = group.front();
        for (const auto* o : group) {
          if (o->timestamp >= last->timestamp) last = o;
        }
        pooled.rss = last->rss;
        pooled.embedded_ref = last->embedded_ref;
        break;
      }
    }
    out.emplace(id, pooled);
  }
  return out;
}

}  // namespace xbeacon::loc
