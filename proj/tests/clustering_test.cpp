#include <gtest/gtest.h>

#include <limits>
#include <set>
#include <sstream>

#include "dealerpred/clustering/features.hpp"
#include "dealerpred/clustering/kmeans.hpp"
#include "dealerpred/random.hpp"

using namespace dealerpred;
using namespace dealerpred::clustering;

namespace {

market::DealerHistory history(std::string id, std::size_t days, std::size_t vocab) {
  return {std::move(id), market::BinaryMatrix(days, 2 * vocab)};
}

DealerFeatures features(std::string id, double total, double distinct) {
  DealerFeatures f;
  f.dealer_id = std::move(id);
  f.total_trades = total;
  f.distinct_bonds = distinct;
  return f;
}

std::vector<Point> two_groups(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts;
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 10; ++i) {
      pts.push_back({g * 10.0 + rng.uniform(-0.5, 0.5), g * -4.0 + rng.uniform(-0.5, 0.5)});
    }
  }
  return pts;
}

double partition_wcss(const std::vector<Point>& pts, const std::vector<std::size_t>& labels, std::size_t k) {
  std::vector<Point> c(k, Point(pts.front().size(), 0.0));
  std::vector<double> n(k, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    n[labels[i]] += 1.0;
    for (std::size_t j = 0; j < pts[i].size(); ++j) c[labels[i]][j] += pts[i][j];
  }
  for (std::size_t g = 0; g < k; ++g) {
    for (double& x : c[g]) x /= std::max(1.0, n[g]);
  }
  return within_cluster_ss(pts, labels, c);
}

}  // namespace

TEST(Features, AllZeroHistoryIsFlagged) {
  const auto f = compute_dealer_features(history("D", 10, 3), 10);
  EXPECT_TRUE(f.inactive);
  for (double x : f.vector()) EXPECT_EQ(x, 0.0);
}

TEST(Features, HandCountedDay) {
  auto h = history("D", 10, 4);
  h.days.set(3, 0, 1);
  h.days.set(3, 4 + 2, 1);
  const auto f = compute_dealer_features(h, 10);
  EXPECT_EQ(f.total_trades, 2.0);
  EXPECT_EQ(f.distinct_bonds, 2.0);
  EXPECT_DOUBLE_EQ(f.active_day_fraction, 0.1);
  EXPECT_EQ(f.mean_trades_per_active_day, 2.0);
  EXPECT_DOUBLE_EQ(f.buy_ratio, 0.5);
  EXPECT_FALSE(f.inactive);
}

TEST(Features, BuysOnlyGivesUnitRatio) {
  auto h = history("D", 5, 2);
  h.days.set(0, 0, 1);
  h.days.set(2, 1, 1);
  EXPECT_EQ(compute_dealer_features(h, 5).buy_ratio, 1.0);
}

TEST(Features, IgnoresDaysAtOrAfterBoundary) {
  auto h = history("D", 10, 2);
  h.days.set(1, 0, 1);
  h.days.set(8, 3, 1);
  const auto f = compute_dealer_features(h, 5);
  EXPECT_EQ(f.total_trades, 1.0);
  EXPECT_DOUBLE_EQ(f.active_day_fraction, 0.2);
}

TEST(Features, SameBondBothSidesCountsOnce) {
  auto h = history("D", 4, 3);
  h.days.set(0, 1, 1);
  h.days.set(1, 3 + 1, 1);
  const auto f = compute_dealer_features(h, 4);
  EXPECT_EQ(f.distinct_bonds, 1.0);
  EXPECT_EQ(f.total_trades, 2.0);
}

TEST(Features, BoundaryPastHistoryRejected) {
  EXPECT_THROW(compute_dealer_features(history("D", 5, 1), 6), ContractError);
}

TEST(KMeans, WellSeparatedPointsBecomeSingletons) {
  const std::vector<Point> pts{{0, 0}, {100, 0}, {0, 100}, {100, 100}};
  const auto r = kmeans(pts, 4, 7);
  EXPECT_EQ(std::set<std::size_t>(r.labels.begin(), r.labels.end()).size(), 4u);
  EXPECT_FALSE(r.degenerate);
}

TEST(KMeans, IdenticalPointsAreDegenerate) {
  const std::vector<Point> pts(6, Point{1.0, 2.0});
  const auto r = kmeans(pts, 4, 3);
  EXPECT_EQ(std::set<std::size_t>(r.labels.begin(), r.labels.end()).size(), 1u);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(std::count(r.empty.begin(), r.empty.end(), true), 3);
}

TEST(KMeans, FewerPointsThanClusters) {
  const std::vector<Point> pts{{0.0}, {1.0}};
  const auto r = kmeans(pts, 4, 1);
  EXPECT_EQ(r.labels, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.empty, (std::vector<bool>{false, false, true, true}));
  EXPECT_TRUE(r.degenerate);
}

TEST(KMeans, MatchesExhaustiveMinimumOnTwoGroups) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto pts = two_groups(seed);
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> labels(pts.size());
    for (std::uint32_t mask = 1; mask < (1u << pts.size()) - 1; ++mask) {
      for (std::size_t i = 0; i < pts.size(); ++i) labels[i] = (mask >> i) & 1u;
      best = std::min(best, partition_wcss(pts, labels, 2));
    }
    const auto r = kmeans(pts, 2, seed);
    EXPECT_NEAR(partition_wcss(pts, r.labels, 2), best, 1e-9);
    for (std::size_t i = 1; i < 10; ++i) EXPECT_EQ(r.labels[i], r.labels[0]);
    for (std::size_t i = 11; i < 20; ++i) EXPECT_EQ(r.labels[i], r.labels[10]);
    EXPECT_NE(r.labels[0], r.labels[10]);
  }
}

TEST(KMeans, InertiaIsNonincreasing) {
  Rng rng(99);
  std::vector<Point> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = kmeans(pts, 6, seed);
    ASSERT_FALSE(r.inertia_history.empty());
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-12);
    }
  }
}

TEST(KMeans, DeterministicUnderSeed) {
  Rng rng(5);
  std::vector<DealerFeatures> fs;
  for (int i = 0; i < 40; ++i) fs.push_back(features("D" + std::to_string(i), rng.uniform(0, 100), rng.uniform(0, 20)));
  const auto a = kmeans_cluster(fs, 4, 11);
  const auto b = kmeans_cluster(fs, 4, 11);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.dealers.size(), fs.size());
  for (auto l : a.labels) EXPECT_LT(l, 4u);
}

TEST(KMeans, ZNormalizationHandlesConstantCoordinate) {
  std::vector<DealerFeatures> fs{features("A", 1, 5), features("B", 3, 5)};
  const auto z = z_normalize(fs);
  EXPECT_DOUBLE_EQ(z[0][0], -1.0);
  EXPECT_DOUBLE_EQ(z[1][0], 1.0);
  EXPECT_EQ(z[0][1], 0.0);
}

TEST(Ordering, SwapsDescendingClusters) {
  std::vector<DealerFeatures> fs{features("A", 100, 1), features("B", 5, 1)};
  ClusterAssignment a;
  a.dealers = {"A", "B"};
  a.labels = {0, 1};
  a.centroids = {{1.0}, {-1.0}};
  a.empty = {false, false};
  const auto o = order_clusters(a, fs);
  EXPECT_EQ(*o.label_of("B"), 0u);
  EXPECT_EQ(*o.label_of("A"), 1u);
  EXPECT_EQ(o.centroids[0], Point{-1.0});
}

TEST(Ordering, AlreadyOrderedIsFixpoint) {
  std::vector<DealerFeatures> fs{features("A", 1, 1), features("B", 5, 1), features("C", 9, 1)};
  ClusterAssignment a;
  a.dealers = {"A", "B", "C"};
  a.labels = {0, 1, 2};
  a.centroids = {{0.0}, {1.0}, {2.0}};
  a.empty = {false, false, false};
  const auto o = order_clusters(a, fs);
  EXPECT_EQ(o.labels, a.labels);
  EXPECT_EQ(o.centroids, a.centroids);
}

TEST(Ordering, TiesBreakByDistinctThenOriginalLabel) {
  std::vector<DealerFeatures> fs{features("A", 4, 3), features("B", 4, 1), features("C", 4, 1)};
  ClusterAssignment a;
  a.dealers = {"A", "B", "C"};
  a.labels = {0, 1, 2};
  a.centroids = {{0.0}, {1.0}, {2.0}};
  a.empty = {false, false, false};
  const auto o = order_clusters(a, fs);
  EXPECT_EQ(*o.label_of("B"), 0u);
  EXPECT_EQ(*o.label_of("C"), 1u);
  EXPECT_EQ(*o.label_of("A"), 2u);
}

TEST(Ordering, ContractHoldsAfterClustering) {
  Rng rng(17);
  std::vector<DealerFeatures> fs;
  for (int i = 0; i < 60; ++i) {
    fs.push_back(features("D" + std::to_string(i), rng.uniform(0, 500), rng.uniform(0, 50)));
  }
  const auto o = order_clusters(kmeans_cluster(fs, 4, 3), fs);
  std::vector<double> sum(4, 0.0), n(4, 0.0);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    sum[o.labels[i]] += fs[i].total_trades;
    n[o.labels[i]] += 1.0;
  }
  for (std::size_t c = 1; c < 4; ++c) {
    ASSERT_GT(n[c], 0.0);
    EXPECT_LE(sum[c - 1] / n[c - 1], sum[c] / n[c]);
  }
}

TEST(Ordering, EmptyClustersGoLast) {
  std::vector<DealerFeatures> fs{features("A", 9, 1), features("B", 1, 1)};
  ClusterAssignment a;
  a.dealers = {"A", "B"};
  a.labels = {2, 3};
  a.centroids = {{0.0}, {0.0}, {1.0}, {2.0}};
  a.empty = {true, true, false, false};
  const auto o = order_clusters(a, fs);
  EXPECT_EQ(*o.label_of("B"), 0u);
  EXPECT_EQ(*o.label_of("A"), 1u);
  EXPECT_EQ(o.empty, (std::vector<bool>{false, false, true, true}));
}

TEST(AssignmentCsv, RoundTrip) {
  ClusterAssignment a;
  a.dealers = {"D0001", "D0002", "D0003"};
  a.labels = {2, 0, 2};
  a.empty = {false, true, false, true};
  std::stringstream ss;
  write_assignment_csv(ss, a);
  EXPECT_EQ(ss.str(), "D0001,2\nD0002,0\nD0003,2\n");
  const auto b = read_assignment_csv(ss, 4);
  EXPECT_EQ(b.dealers, a.dealers);
  EXPECT_EQ(b.labels, a.labels);
  EXPECT_EQ(b.empty, (std::vector<bool>{false, true, false, true}));
}
