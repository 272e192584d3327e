#ifndef XBEACON_LOCALIZATION_HPP
#define XBEACON_LOCALIZATION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xbeacon/common.hpp"
#include "xbeacon/radio_env.hpp"

namespace xbeacon::loc {

// Victim-side estimators. Everything here runs on observations alone; the
// origin field of an observation is never consulted, which is precisely why
// injected packets work.

// d = 10^((p - s) / (10 n)) with p the packet's power byte and s the
// measured RSS. The power byte is attacker-controlled, the formula is not.
double estimate_distance(double embedded_ref, double rss, double exponent);

// Distance the victim computes when a source at true distance d0 with true
// reference p0 advertises pf instead: d0 * 10^((pf - p0) / (10 n)).
double fake_distance(double d0, double p0, double pf, double exponent);

struct PositionEstimate {
  common::Vec2 position;
  double residual = 0;  // root mean square range misfit at the solution
  int iterations = 0;
  bool converged = false;
};

// Range-based fix from at least three anchors: damped Gauss-Newton on the
// squared range residuals, started from the standard linearized solution.
// Fewer than three anchors is a caller bug (std::invalid_argument);
// collinear anchors cannot pin down a 2-D point (GeometryError).
PositionEstimate multilaterate(const std::vector<common::Vec2>& anchors,
                               const std::vector<double>& distances,
                               std::optional<common::Vec2> init = std::nullopt);

struct FingerprintSpot {
  common::Vec2 position;
  std::map<std::string, double> vector;  // beacon id -> surveyed mean RSS
};

// Offline RSS survey. Spot vectors may cover different beacon sets; lookups
// substitute missing_value so comparisons always run over the full id set.
struct FingerprintDatabase {
  std::vector<FingerprintSpot> spots;
  double missing_value = -100.0;

  // Sorted union of every beacon id appearing in any spot.
  std::vector<std::string> id_set() const;

  // Long-format rows: spot_id,x,y,beacon_id,rss with a header line.
  std::string to_csv() const;
  static FingerprintDatabase from_csv(const std::string& text);
};

// Weighted k-nearest-neighbor match in RSS space. Ids absent from the
// observation (or from a spot) read as missing_value; ids unknown to the
// database are ignored. Ties in RSS distance break toward the lower spot
// index so results are reproducible.
common::Vec2 wknn_locate(const FingerprintDatabase& db,
                         const std::map<std::string, double>& observation,
                         int k = 3, double epsilon = 1e-6);

enum class AggregatePolicy { mean, median, latest };

struct PooledReading {
  double rss = 0;
  double embedded_ref = 0;
  std::size_t count = 0;
};

// Collapses a scan window into one reading per beacon id. Genuine and
// injected packets sharing an id pool together; the victim has no way to
// tell them apart.
std::map<std::string, PooledReading> aggregate_observations(
    const std::vector<env::RssObservation>& observations,
    AggregatePolicy policy = AggregatePolicy::mean);

}  // namespace xbeacon::loc

#endif
