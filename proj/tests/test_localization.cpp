#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "xbeacon/common.hpp"
#include "xbeacon/localization.hpp"

using namespace xbeacon;
using common::Rng;
using common::Vec2;

namespace {

double range_rms(const std::vector<Vec2>& anchors,
                 const std::vector<double>& distances, Vec2 x) {
  double c = 0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double r = common::distance(x, anchors[i]) - distances[i];
    c += r * r;
  }
  return std::sqrt(c / static_cast<double>(anchors.size()));
}

}  // namespace

TEST_CASE("distance from the path loss inversion") {
  CHECK(loc::estimate_distance(-59.0, -59.0, 2.0) == doctest::Approx(1.0));
  CHECK(loc::estimate_distance(-59.0, -79.0, 2.0) == doctest::Approx(10.0));
  CHECK(loc::estimate_distance(-59.0, -69.0, 2.0) ==
        doctest::Approx(std::sqrt(10.0)));

  for (double d : {0.5, 1.0, 2.0, 10.0, 50.0}) {
    double rss = -59.0 - 10.0 * 2.0 * std::log10(d);
    double back = loc::estimate_distance(-59.0, rss, 2.0);
    CHECK(std::fabs(back - d) <= 1e-9 * d);
  }

  CHECK_THROWS_AS(loc::estimate_distance(-59.0, -59.0, 0.0),
                  common::ConfigError);
}

TEST_CASE("forged reference power shifts the perceived distance") {
  // Advertising the true reference changes nothing.
  CHECK(loc::fake_distance(3.7, -59.0, -59.0, 2.0) == 3.7);

  // The worked example: two meters away, honest hardware at -64, packets
  // claiming -40, exponent 2.
  CHECK(loc::fake_distance(2.0, -64.0, -40.0, 2.0) ==
        doctest::Approx(31.6978638492).epsilon(1e-9));

  double prev = 0.0;
  for (double pf = -70.0; pf <= -30.0; pf += 2.5) {
    double d = loc::fake_distance(2.0, -64.0, pf, 2.0);
    CHECK(d > prev);
    prev = d;
  }

  CHECK_THROWS_AS(loc::fake_distance(2.0, -64.0, -40.0, 0.0),
                  common::ConfigError);
  CHECK_THROWS_AS(loc::fake_distance(0.0, -64.0, -40.0, 2.0),
                  common::ConfigError);
}

TEST_CASE("fake distance equals the victim-side estimate on the mean path") {
  // Feeding the estimator the noise-free RSS of a source at d0 with a forged
  // power byte must reproduce the closed form exactly.
  Rng rng(21);
  for (int t = 0; t < 100; ++t) {
    double d0 = 0.2 + 40.0 * rng.uniform01();
    double p0 = -80.0 + 40.0 * rng.uniform01();
    double pf = -80.0 + 50.0 * rng.uniform01();
    double n = 1.5 + 2.5 * rng.uniform01();
    double rss = p0 - 10.0 * n * std::log10(d0);
    double victim = loc::estimate_distance(pf, rss, n);
    double closed = loc::fake_distance(d0, p0, pf, n);
    CHECK(std::fabs(victim - closed) <= 1e-9 * closed);
  }
}

TEST_CASE("multilateration recovers a hand-checked fix") {
  std::vector<Vec2> anchors = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
  std::vector<double> distances = {5.0, std::sqrt(65.0), std::sqrt(45.0)};
  auto est = loc::multilaterate(anchors, distances);
  CHECK(est.converged);
  CHECK(est.position.x == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(est.position.y == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(est.residual < 1e-6);
}

TEST_CASE("multilateration nails random consistent geometries") {
  Rng rng(33);
  int done = 0;
  while (done < 100) {
    int n = 3 + rng.uniform_int(4);
    std::vector<Vec2> anchors;
    for (int i = 0; i < n; ++i) {
      anchors.push_back({50.0 * rng.uniform01(), 50.0 * rng.uniform01()});
    }
    // Reject nearly collinear layouts; the solver rightfully refuses them.
    double span = 0, cross = 0;
    for (int i = 1; i < n; ++i) {
      Vec2 u = anchors[i] - anchors[0];
      span = std::max(span, u.x * u.x + u.y * u.y);
      for (int j = i + 1; j < n; ++j) {
        Vec2 v = anchors[j] - anchors[0];
        cross = std::max(cross, std::abs(u.x * v.y - u.y * v.x));
      }
    }
    if (cross < 0.05 * span) continue;

    Vec2 truth{50.0 * rng.uniform01(), 50.0 * rng.uniform01()};
    std::vector<double> distances;
    for (const auto& a : anchors) {
      distances.push_back(common::distance(truth, a));
    }
    auto est = loc::multilaterate(anchors, distances);
    CHECK(common::distance(est.position, truth) < 1e-6);
    ++done;
  }
}

TEST_CASE("iteration never worsens the range misfit") {
  std::vector<Vec2> anchors = {{0.0, 0.0}, {20.0, 0.0}, {10.0, 15.0},
                               {2.0, 12.0}};
  std::vector<double> distances = {7.1, 13.9, 9.2, 8.4};  // inconsistent
  Vec2 init{-30.0, 40.0};
  auto est = loc::multilaterate(anchors, distances, init);
  CHECK(est.residual <= range_rms(anchors, distances, init));
  CHECK(est.iterations >= 1);
}

TEST_CASE("multilateration input validation") {
  std::vector<Vec2> line = {{0.0, 0.0}, {5.0, 0.0}, {10.0, 0.0}};
  CHECK_THROWS_AS(loc::multilaterate(line, {1.0, 2.0, 3.0}),
                  common::GeometryError);

  std::vector<Vec2> two = {{0.0, 0.0}, {5.0, 0.0}};
  CHECK_THROWS_AS(loc::multilaterate(two, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(loc::multilaterate(line, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(loc::multilaterate(line, {1.0, -2.0, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(loc::multilaterate(line, {1.0, std::nan(""), 3.0}),
                  std::invalid_argument);
}

TEST_CASE("nearest fingerprint wins at k equal to one") {
  loc::FingerprintDatabase db;
  db.spots.push_back({{0.0, 0.0}, {{"a", -40.0}, {"b", -60.0}}});
  db.spots.push_back({{10.0, 0.0}, {{"a", -60.0}, {"b", -40.0}}});
  db.spots.push_back({{5.0, 8.0}, {{"a", -55.0}, {"b", -55.0}}});

  auto hit = loc::wknn_locate(db, {{"a", -60.0}, {"b", -40.0}}, 1);
  CHECK(hit.x == 10.0);
  CHECK(hit.y == 0.0);
}

TEST_CASE("weighted knn blends by inverse distance") {
  loc::FingerprintDatabase db;
  db.spots.push_back({{0.0, 0.0}, {{"a", -40.0}, {"b", -60.0}}});
  db.spots.push_back({{10.0, 0.0}, {{"a", -60.0}, {"b", -40.0}}});
  db.spots.push_back({{5.0, 8.0}, {{"a", -55.0}, {"b", -55.0}}});

  std::map<std::string, double> obs = {{"a", -50.0}, {"b", -50.0}};
  auto got = loc::wknn_locate(db, obs, 2);

  // By hand: spot 2 sits sqrt(50) away, spots 0 and 1 sqrt(200); the tie at
  // rank two resolves to spot 0.
  double w2 = 1.0 / (1e-6 + std::sqrt(50.0));
  double w0 = 1.0 / (1e-6 + std::sqrt(200.0));
  double ex = (5.0 * w2 + 0.0 * w0) / (w2 + w0);
  double ey = (8.0 * w2 + 0.0 * w0) / (w2 + w0);
  CHECK(got.x == doctest::Approx(ex).epsilon(1e-12));
  CHECK(got.y == doctest::Approx(ey).epsilon(1e-12));
}

TEST_CASE("fingerprint gaps read as the missing value") {
  loc::FingerprintDatabase db;
  db.spots.push_back({{0.0, 0.0}, {{"a", -40.0}}});
  db.spots.push_back({{10.0, 0.0}, {{"b", -40.0}}});

  // The observation misses b entirely and carries an id the survey never
  // saw; the unknown id is ignored and the gap pairs up as missing/missing.
  auto got = loc::wknn_locate(db, {{"a", -40.0}, {"zz", -10.0}}, 1);
  CHECK(got.x == 0.0);
  CHECK(got.y == 0.0);

  CHECK(db.id_set() == std::vector<std::string>{"a", "b"});

  CHECK_THROWS_AS(loc::wknn_locate(db, {{"a", -40.0}}, 0),
                  common::ConfigError);
  CHECK_THROWS_AS(loc::wknn_locate(db, {{"a", -40.0}}, 3),
                  common::ConfigError);
  loc::FingerprintDatabase empty;
  CHECK_THROWS_AS(loc::wknn_locate(empty, {{"a", -40.0}}, 1),
                  common::ConfigError);
}

TEST_CASE("identical survey vectors tie toward the earlier spot") {
  loc::FingerprintDatabase db;
  db.spots.push_back({{1.0, 1.0}, {{"a", -50.0}}});
  db.spots.push_back({{9.0, 9.0}, {{"a", -50.0}}});
  auto got = loc::wknn_locate(db, {{"a", -50.0}}, 1);
  CHECK(got.x == 1.0);
  CHECK(got.y == 1.0);
}

TEST_CASE("fingerprint database survives the csv round trip") {
  loc::FingerprintDatabase db;
  db.spots.push_back({{0.25, 7.5}, {{"a", -41.5}, {"b", -63.25}}});
  db.spots.push_back({{12.125, 3.0}, {{"b", -55.0}}});

  auto text = db.to_csv();
  CHECK(text == db.to_csv());
  CHECK(text.rfind("spot_id,x,y,beacon_id,rss\n", 0) == 0);

  auto back = loc::FingerprintDatabase::from_csv(text);
  REQUIRE(back.spots.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back.spots[i].position.x == db.spots[i].position.x);
    CHECK(back.spots[i].position.y == db.spots[i].position.y);
    CHECK(back.spots[i].vector == db.spots[i].vector);
  }

  CHECK_THROWS_AS(
      loc::FingerprintDatabase::from_csv("spot_id,x,y,beacon_id,rss\n0,1,2\n"),
      common::ConfigError);
  CHECK_THROWS_AS(
      loc::FingerprintDatabase::from_csv(
          "spot_id,x,y,beacon_id,rss\n5,1.0,2.0,a,-40\n"),
      common::ConfigError);
}

TEST_CASE("window aggregation policies") {
  auto mk = [](double rss, double ref, double ts) {
    env::RssObservation o;
    o.beacon_id = "x";
    o.rss = rss;
    o.embedded_ref = ref;
    o.timestamp = ts;
    return o;
  };

  std::vector<env::RssObservation> obs;
  for (int i = 0; i < 6; ++i) obs.push_back(mk(-70.0, -59.0, i));
  for (int i = 0; i < 4; ++i) obs.push_back(mk(-50.0, -40.0, 6 + i));
  env::RssObservation other;
  other.beacon_id = "y";
  other.rss = -33.0;
  other.embedded_ref = -59.0;
  obs.push_back(other);

  auto mean = loc::aggregate_observations(obs, loc::AggregatePolicy::mean);
  REQUIRE(mean.size() == 2);
  CHECK(mean.at("x").rss == doctest::Approx(-62.0));
  CHECK(mean.at("x").embedded_ref == doctest::Approx(-51.4));
  CHECK(mean.at("x").count == 10);
  CHECK(mean.at("y").rss == -33.0);
  CHECK(mean.at("y").count == 1);

  auto median = loc::aggregate_observations(obs, loc::AggregatePolicy::median);
  CHECK(median.at("x").rss == doctest::Approx(-70.0));

  std::vector<env::RssObservation> pair = {mk(-70.0, -59.0, 0),
                                           mk(-50.0, -41.0, 1)};
  auto even = loc::aggregate_observations(pair, loc::AggregatePolicy::median);
  CHECK(even.at("x").rss == doctest::Approx(-60.0));
  CHECK(even.at("x").embedded_ref == doctest::Approx(-50.0));

  auto latest = loc::aggregate_observations(obs, loc::AggregatePolicy::latest);
  CHECK(latest.at("x").rss == -50.0);

  // Equal timestamps fall to the observation emitted later in the window.
  std::vector<env::RssObservation> tie = {mk(-70.0, -59.0, 2),
                                          mk(-50.0, -41.0, 2)};
  auto last = loc::aggregate_observations(tie, loc::AggregatePolicy::latest);
  CHECK(last.at("x").rss == -50.0);
}
