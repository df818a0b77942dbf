#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace doccl {

struct KmeansOptions {
    int restarts = 10;
    double tol = 1e-6;
    int max_iter = 300;
};

struct ClusterAssignment {
    std::vector<int> assignment;        // doc index -> cluster in [0, K)
    std::vector<double> centroids;      // K x dim, row-major
    int k = 0;
    size_t dim = 0;
    double wcss = 0.0;
    std::vector<double> wcss_history;   // per Lloyd iteration of the winning restart
};

// k-means++ seeding, Lloyd iterations, best of `restarts` runs by
// within-cluster sum of squares. Empty clusters are re-seeded to the point
// farthest from its current centroid. Deterministic given seed.
ClusterAssignment kmeans(const std::vector<double>& points, size_t n, size_t dim, int k,
                         uint64_t seed, const KmeansOptions& options = {});

using ConfusionMatrix = std::vector<std::vector<long long>>;

// n[k][c] = documents in cluster k with true class c.
ConfusionMatrix confusion_matrix(const std::vector<int>& assignment,
                                 const std::vector<std::optional<int>>& labels, int k,
                                 int class_count);

struct MatchResult {
    std::vector<int> cluster_to_class;   // -1 where a cluster matched padding
    long long matched = 0;
};

// Optimal one-to-one cluster/class matching maximizing the matched count
// (Hungarian algorithm on the zero-padded square matrix).
MatchResult hungarian_max_matching(const ConfusionMatrix& counts);

double clustering_accuracy(const ConfusionMatrix& counts);
double clustering_accuracy(const std::vector<int>& assignment,
                           const std::vector<std::optional<int>>& labels, int k,
                           int class_count);

// Projection onto the top-2 principal components (power iteration with
// deflation), mean-centered, component signs fixed so the
// largest-magnitude loading is positive. Returns n rows of (x, y).
std::vector<std::array<double, 2>> project_2d(const std::vector<double>& latents, size_t n,
                                              size_t dim);

}  // namespace doccl
