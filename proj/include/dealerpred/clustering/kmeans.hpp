#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dealerpred/clustering/features.hpp"
#include "dealerpred/random.hpp"

namespace dealerpred::clustering {

using Point = std::vector<double>;

struct KMeansResult {
  std::vector<std::size_t> labels;      // one per point
  std::vector<Point> centroids;         // k entries
  std::vector<bool> empty;              // per label
  bool degenerate = false;              // fewer than k populated clusters
  std::vector<double> inertia_history;  // within-cluster SS per Lloyd pass
  std::size_t iterations = 0;
};

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double within_cluster_ss(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
                                const std::vector<Point>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[labels[i]]);
  return s;
}

namespace detail {

inline std::vector<Point> kmeans_plus_plus(const std::vector<Point>& points, std::size_t k, Rng& rng) {
  std::vector<Point> centers{points[rng.below(points.size())]};
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(points[i], centers.back()));
      total += nearest[i];
    }
    if (total <= 0.0) break;  // every point already coincides with a center
    double target = rng.uniform() * total;
    std::size_t pick = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (nearest[i] <= 0.0) continue;
      if (target < nearest[i]) {
        pick = i;
        break;
      }
      target -= nearest[i];
    }
    centers.push_back(points[pick]);
  }
  while (centers.size() < k) centers.push_back(centers.front());
  return centers;
}

inline std::vector<std::size_t> assign(const std::vector<Point>& points, const std::vector<Point>& centers) {
  std::vector<std::size_t> labels(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = squared_distance(points[i], centers[c]);
      if (d < best) {
        best = d;
        labels[i] = c;
      }
    }
  }
  return labels;
}

inline std::vector<Point> means(const std::vector<Point>& points, const std::vector<std::size_t>& labels,
                                const std::vector<Point>& previous, std::vector<std::size_t>& sizes) {
  const std::size_t k = previous.size(), dims = previous.front().size();
  std::vector<Point> sums(k, Point(dims, 0.0));
  sizes.assign(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++sizes[labels[i]];
    for (std::size_t j = 0; j < dims; ++j) sums[labels[i]][j] += points[i][j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) {
      sums[c] = previous[c];
      continue;
    }
    for (double& x : sums[c]) x /= static_cast<double>(sizes[c]);
  }
  return sums;
}

// Moves the point farthest from the largest cluster's centroid into each
// empty cluster. Returns false when no cluster can be split.
inline bool repair_empty(const std::vector<Point>& points, std::vector<std::size_t>& labels,
                         std::vector<Point>& centroids, std::vector<std::size_t>& sizes) {
  bool all_repaired = true;
  for (std::size_t e = 0; e < centroids.size(); ++e) {
    if (sizes[e] != 0) continue;
    const std::size_t largest =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    std::optional<std::size_t> far;
    double far_d = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (labels[i] != largest) continue;
      const double d = squared_distance(points[i], centroids[largest]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (sizes[largest] < 2 || !far) {
      all_repaired = false;
      continue;
    }
    labels[*far] = e;
    sizes[e] = 1;
    sizes[largest] -= 1;
    centroids[e] = points[*far];
    Point mean(points.front().size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (labels[i] != largest) continue;
      for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += points[i][j];
    }
    for (double& x : mean) x /= static_cast<double>(sizes[largest]);
    centroids[largest] = mean;
  }
  return all_repaired;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeds, run until the assignment stops
/// changing or `max_iter` passes. Ties go to the lower cluster index.
inline KMeansResult kmeans(const std::vector<Point>& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 100) {
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  KMeansResult result;
  const std::size_t n = points.size();
  if (n == 0) {
    result.empty.assign(k, true);
    result.degenerate = true;
    return result;
  }
  if (n < k) {
    result.labels.resize(n);
    std::iota(result.labels.begin(), result.labels.end(), std::size_t{0});
    result.centroids.assign(points.begin(), points.end());
    while (result.centroids.size() < k) result.centroids.push_back(points.front());
    result.empty.assign(k, false);
    for (std::size_t c = n; c < k; ++c) result.empty[c] = true;
    result.degenerate = true;
    result.inertia_history.push_back(0.0);
    return result;
  }

  Rng rng(seed);
  std::vector<Point> centroids = detail::kmeans_plus_plus(points, k, rng);
  std::vector<std::size_t> labels = detail::assign(points, centroids);
  std::vector<std::size_t> sizes;
  bool degenerate = false;
  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    result.inertia_history.push_back(within_cluster_ss(points, labels, centroids));
    result.iterations = iter + 1;
    centroids = detail::means(points, labels, centroids, sizes);
    degenerate = !detail::repair_empty(points, labels, centroids, sizes);
    auto next = detail::assign(points, centroids);
    if (next == labels) break;
    labels = std::move(next);
  }
  centroids = detail::means(points, labels, centroids, sizes);
  result.labels = std::move(labels);
  result.centroids = std::move(centroids);
  result.empty.assign(k, false);
  for (std::size_t c = 0; c < k; ++c) result.empty[c] = sizes[c] == 0;
  result.degenerate = degenerate || std::count(result.empty.begin(), result.empty.end(), true) > 0;
  return result;
}

/// Dealer → activity tier. Label semantics after `order_clusters`:
/// 0 is the least active tier, k−1 the most active.
struct ClusterAssignment {
  std::vector<std::string> dealers;
  std::vector<std::size_t> labels;
  std::vector<Point> centroids;  // z-normalized feature space
  std::vector<bool> empty;
  bool degenerate = false;
  std::vector<double> inertia_history;

  std::size_t k() const { return empty.size(); }

  std::optional<std::size_t> label_of(const std::string& dealer) const {
    for (std::size_t i = 0; i < dealers.size(); ++i) {
      if (dealers[i] == dealer) return labels[i];
    }
    return std::nullopt;
  }

  std::unordered_map<std::string, std::size_t> as_map() const {
    std::unordered_map<std::string, std::size_t> m;
    for (std::size_t i = 0; i < dealers.size(); ++i) m.emplace(dealers[i], labels[i]);
    return m;
  }
};

/// Per-coordinate z-scores with population standard deviation; constant
/// coordinates map to 0.
inline std::vector<Point> z_normalize(const std::vector<DealerFeatures>& features) {
  std::vector<Point> points;
  for (const auto& f : features) {
    const auto v = f.vector();
    points.emplace_back(v.begin(), v.end());
  }
  if (points.empty()) return points;
  const std::size_t dims = points.front().size();
  const double n = static_cast<double>(points.size());
  for (std::size_t j = 0; j < dims; ++j) {
    double mean = 0.0;
    for (const auto& p : points) mean += p[j];
    mean /= n;
    double var = 0.0;
    for (const auto& p : points) var += (p[j] - mean) * (p[j] - mean);
    const double sd = std::sqrt(var / n);
    for (auto& p : points) p[j] = sd > 0.0 ? (p[j] - mean) / sd : 0.0;
  }
  return points;
}

/// Unordered labels; see `order_clusters`.
inline ClusterAssignment kmeans_cluster(const std::vector<DealerFeatures>& features, std::size_t k,
                                        std::uint64_t seed, std::size_t max_iter = 100) {
  KMeansResult r = kmeans(z_normalize(features), k, seed, max_iter);
  ClusterAssignment a;
  for (const auto& f : features) a.dealers.push_back(f.dealer_id);
  a.labels = std::move(r.labels);
  a.centroids = std::move(r.centroids);
  a.empty = std::move(r.empty);
  a.degenerate = r.degenerate;
  a.inertia_history = std::move(r.inertia_history);
  return a;
}

/// Relabels clusters so mean total_trades is nondecreasing in the label;
/// ties fall to mean distinct_bonds, then the original label. Empty
/// clusters go last.
inline ClusterAssignment order_clusters(const ClusterAssignment& assignment,
                                        const std::vector<DealerFeatures>& features) {
  const std::size_t k = assignment.k();
  std::unordered_map<std::string, const DealerFeatures*> by_id;
  for (const auto& f : features) by_id.emplace(f.dealer_id, &f);
  std::vector<double> total(k, 0.0), distinct(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < assignment.dealers.size(); ++i) {
    auto it = by_id.find(assignment.dealers[i]);
    if (it == by_id.end()) throw ContractError("no features for dealer " + assignment.dealers[i]);
    const std::size_t c = assignment.labels[i];
    total[c] += it->second->total_trades;
    distinct[c] += it->second->distinct_bonds;
    ++count[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) continue;
    total[c] /= static_cast<double>(count[c]);
    distinct[c] /= static_cast<double>(count[c]);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const bool ea = count[a] == 0, eb = count[b] == 0;
    if (ea != eb) return eb;
    if (ea) return false;
    if (total[a] != total[b]) return total[a] < total[b];
    return distinct[a] < distinct[b];
  });
  std::vector<std::size_t> new_label(k);
  for (std::size_t pos = 0; pos < k; ++pos) new_label[order[pos]] = pos;

  ClusterAssignment out = assignment;
  for (auto& l : out.labels) l = new_label[l];
  for (std::size_t old = 0; old < k; ++old) {
    if (old < assignment.centroids.size()) out.centroids[new_label[old]] = assignment.centroids[old];
    out.empty[new_label[old]] = count[old] == 0;
  }
  return out;
}

/// `dealer_id,cluster_label` lines.
inline void write_assignment_csv(std::ostream& out, const ClusterAssignment& a) {
  for (std::size_t i = 0; i < a.dealers.size(); ++i) out << a.dealers[i] << ',' << a.labels[i] << '\n';
}

inline ClusterAssignment read_assignment_csv(std::istream& in, std::size_t k) {
  ClusterAssignment a;
  a.empty.assign(k, true);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("assignment line without a comma: " + line);
    const std::size_t label = std::stoul(line.substr(comma + 1));
    if (label >= k) throw std::runtime_error("cluster label " + std::to_string(label) + " out of range");
    a.dealers.push_back(line.substr(0, comma));
    a.labels.push_back(label);
    a.empty[label] = false;
  }
  a.degenerate = std::count(a.empty.begin(), a.empty.end(), true) > 0;
  return a;
}

}  // namespace dealerpred::clustering
