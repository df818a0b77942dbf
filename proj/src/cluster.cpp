#include "doccl/cluster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "doccl/kernels.hpp"
#include "doccl/rng.hpp"

namespace doccl {

namespace {

double sq_dist(const double* a, const double* b, size_t dim) {
    double d = 0.0;
    for (size_t e = 0; e < dim; ++e) {
        double diff = a[e] - b[e];
        d += diff * diff;
    }
    return d;
}

std::vector<double> kmeanspp_init(const std::vector<double>& points, size_t n, size_t dim,
                                  int k, Rng& rng) {
    std::vector<double> centroids(static_cast<size_t>(k) * dim);
    size_t first = rng.index(n);
    std::copy_n(points.data() + first * dim, dim, centroids.data());

    std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        const double* prev = centroids.data() + static_cast<size_t>(c - 1) * dim;
        for (size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], sq_dist(points.data() + i * dim, prev, dim));
        size_t next = rng.weighted_index(dist2);
        std::copy_n(points.data() + next * dim, dim, centroids.data() + static_cast<size_t>(c) * dim);
    }
    return centroids;
}

struct LloydRun {
    std::vector<int> assignment;
    std::vector<double> centroids;
    double wcss = 0.0;
    std::vector<double> wcss_history;
};

LloydRun lloyd(const std::vector<double>& points, size_t n, size_t dim, int k,
               std::vector<double> centroids, const KmeansOptions& options) {
    LloydRun run;
    run.centroids = std::move(centroids);
    std::vector<double> next(static_cast<size_t>(k) * dim);
    std::vector<size_t> counts(k);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        run.assignment = assign_clusters(points, n, run.centroids, k, dim);

        std::fill(counts.begin(), counts.end(), 0);
        for (size_t i = 0; i < n; ++i) ++counts[run.assignment[i]];

        // Re-seed each empty cluster at the point farthest from its
        // current centroid, never draining a singleton cluster.
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            size_t far = n;
            double far_d = -1.0;
            for (size_t i = 0; i < n; ++i) {
                if (counts[run.assignment[i]] < 2) continue;
                double d = sq_dist(points.data() + i * dim,
                                   run.centroids.data() + static_cast<size_t>(run.assignment[i]) * dim,
                                   dim);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == n) continue;   // fewer distinct points than clusters
            std::copy_n(points.data() + far * dim, dim,
                        run.centroids.data() + static_cast<size_t>(c) * dim);
            --counts[run.assignment[far]];
            run.assignment[far] = c;
            ++counts[c];
        }

        double wcss = 0.0;
        for (size_t i = 0; i < n; ++i)
            wcss += sq_dist(points.data() + i * dim,
                            run.centroids.data() + static_cast<size_t>(run.assignment[i]) * dim, dim);
        run.wcss_history.push_back(wcss);

        std::fill(next.begin(), next.end(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            double* dst = next.data() + static_cast<size_t>(run.assignment[i]) * dim;
            const double* src = points.data() + i * dim;
            for (size_t e = 0; e < dim; ++e) dst[e] += src[e];
        }
        double shift = 0.0;
        for (int c = 0; c < k; ++c) {
            double* dst = next.data() + static_cast<size_t>(c) * dim;
            double* old = run.centroids.data() + static_cast<size_t>(c) * dim;
            if (counts[c] > 0)
                for (size_t e = 0; e < dim; ++e) dst[e] /= static_cast<double>(counts[c]);
            else
                std::copy_n(old, dim, dst);
            shift = std::max(shift, std::sqrt(sq_dist(dst, old, dim)));
        }
        run.centroids = next;
        if (shift < options.tol) break;
    }

    run.assignment = assign_clusters(points, n, run.centroids, k, dim);
    run.wcss = 0.0;
    for (size_t i = 0; i < n; ++i)
        run.wcss += sq_dist(points.data() + i * dim,
                            run.centroids.data() + static_cast<size_t>(run.assignment[i]) * dim, dim);
    return run;
}

}  // namespace

ClusterAssignment kmeans(const std::vector<double>& points, size_t n, size_t dim, int k,
                         uint64_t seed, const KmeansOptions& options) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (n < static_cast<size_t>(k)) throw std::invalid_argument("kmeans: fewer points than clusters");
    if (dim == 0 || points.size() != n * dim) throw std::invalid_argument("kmeans: bad point matrix");

    ClusterAssignment best;
    bool have_best = false;
    for (int r = 0; r < std::max(1, options.restarts); ++r) {
        Rng rng(derive_seed(seed, "kmeans-restart", static_cast<uint64_t>(r)));
        LloydRun run = lloyd(points, n, dim, k, kmeanspp_init(points, n, dim, k, rng), options);
        if (!have_best || run.wcss < best.wcss) {
            best.assignment = std::move(run.assignment);
            best.centroids = std::move(run.centroids);
            best.wcss = run.wcss;
            best.wcss_history = std::move(run.wcss_history);
            best.k = k;
            best.dim = dim;
            have_best = true;
        }
    }
    return best;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& assignment,
                                 const std::vector<std::optional<int>>& labels, int k,
                                 int class_count) {
    if (assignment.size() != labels.size())
        throw std::invalid_argument("confusion_matrix: length mismatch");
    ConfusionMatrix counts(k, std::vector<long long>(class_count, 0));
    for (size_t i = 0; i < assignment.size(); ++i) {
        if (!labels[i]) throw std::runtime_error("confusion_matrix: document without label");
        int cluster = assignment[i];
        int cls = *labels[i];
        if (cluster < 0 || cluster >= k) throw std::out_of_range("confusion_matrix: cluster index");
        if (cls < 0 || cls >= class_count) throw std::out_of_range("confusion_matrix: class index");
        ++counts[cluster][cls];
    }
    return counts;
}

MatchResult hungarian_max_matching(const ConfusionMatrix& counts) {
    if (counts.empty()) throw std::invalid_argument("hungarian_max_matching: empty matrix");
    size_t rows = counts.size();
    size_t cols = counts.front().size();
    for (const auto& row : counts) {
        if (row.size() != cols) throw std::invalid_argument("hungarian_max_matching: ragged matrix");
        for (long long v : row)
            if (v < 0) throw std::invalid_argument("hungarian_max_matching: negative entry");
    }

    // Zero-pad to square, convert max to min against the largest entry.
    size_t s = std::max(rows, cols);
    long long maxval = 0;
    for (const auto& row : counts)
        for (long long v : row) maxval = std::max(maxval, v);
    auto cost = [&](size_t i, size_t j) -> long long {
        long long v = (i < rows && j < cols) ? counts[i][j] : 0;
        return maxval - v;
    };

    // O(s^3) assignment with potentials; p[j] = row matched to column j.
    const long long kInf = std::numeric_limits<long long>::max() / 4;
    std::vector<long long> u(s + 1, 0), v(s + 1, 0);
    std::vector<size_t> p(s + 1, 0), way(s + 1, 0);
    for (size_t i = 1; i <= s; ++i) {
        p[0] = i;
        size_t j0 = 0;
        std::vector<long long> minv(s + 1, kInf);
        std::vector<char> used(s + 1, 0);
        do {
            used[j0] = 1;
            size_t i0 = p[j0], j1 = 0;
            long long delta = kInf;
            for (size_t j = 1; j <= s; ++j) {
                if (used[j]) continue;
                long long cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (size_t j = 0; j <= s; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    MatchResult result;
    result.cluster_to_class.assign(rows, -1);
    for (size_t j = 1; j <= s; ++j) {
        size_t i = p[j] - 1;
        size_t c = j - 1;
        if (i < rows && c < cols) {
            result.cluster_to_class[i] = static_cast<int>(c);
            result.matched += counts[i][c];
        }
    }
    return result;
}

double clustering_accuracy(const ConfusionMatrix& counts) {
    long long total = 0;
    for (const auto& row : counts)
        for (long long v : row) total += v;
    if (total == 0) throw std::invalid_argument("clustering_accuracy: empty confusion matrix");
    return static_cast<double>(hungarian_max_matching(counts).matched) /
           static_cast<double>(total);
}

double clustering_accuracy(const std::vector<int>& assignment,
                           const std::vector<std::optional<int>>& labels, int k,
                           int class_count) {
    return clustering_accuracy(confusion_matrix(assignment, labels, k, class_count));
}

std::vector<std::array<double, 2>> project_2d(const std::vector<double>& latents, size_t n,
                                              size_t dim) {
    if (n < 2) throw std::invalid_argument("project_2d: need at least 2 points");
    if (dim == 0 || latents.size() != n * dim) throw std::invalid_argument("project_2d: bad matrix");

    std::vector<double> mean(dim, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t e = 0; e < dim; ++e) mean[e] += latents[i * dim + e];
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<double> centered(n * dim);
    for (size_t i = 0; i < n; ++i)
        for (size_t e = 0; e < dim; ++e) centered[i * dim + e] = latents[i * dim + e] - mean[e];

    // Scatter matrix X^T X.
    std::vector<double> scatter(dim * dim, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t a = 0; a < dim; ++a) {
            double xa = centered[i * dim + a];
            if (xa == 0.0) continue;
            for (size_t b = 0; b < dim; ++b) scatter[a * dim + b] += xa * centered[i * dim + b];
        }
    double trace = 0.0;
    for (size_t a = 0; a < dim; ++a) trace += scatter[a * dim + a];
    if (trace == 0.0) throw std::runtime_error("project_2d: rank-0 data (all points identical)");

    // Power iteration with deflation; each iterate is re-orthogonalized
    // against already-found components so roundoff in the deflated matrix
    // can never leak the dominant direction back in.
    std::array<std::vector<double>, 2> components;
    auto orthogonalize = [&](std::vector<double>& w, int n_prev) {
        for (int p = 0; p < n_prev; ++p) {
            const std::vector<double>& prev = components[p];
            double dot = 0.0;
            for (size_t a = 0; a < dim; ++a) dot += w[a] * prev[a];
            for (size_t a = 0; a < dim; ++a) w[a] -= dot * prev[a];
        }
    };
    auto power_iterate = [&](const std::vector<double>& mat, int n_prev) {
        Rng rng(derive_seed(0x70CA2D17, "pca-start"));
        std::vector<double> w(dim);
        for (double& x : w) x = rng.uniform(-1.0, 1.0);
        orthogonalize(w, n_prev);
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-30) return std::vector<double>(dim, 0.0);   // 1-dim data
        for (double& x : w) x /= norm;

        std::vector<double> next(dim);
        for (int iter = 0; iter < 10000; ++iter) {
            for (size_t a = 0; a < dim; ++a) {
                double acc = 0.0;
                for (size_t b = 0; b < dim; ++b) acc += mat[a * dim + b] * w[b];
                next[a] = acc;
            }
            orthogonalize(next, n_prev);
            double nn = 0.0;
            for (double x : next) nn += x * x;
            nn = std::sqrt(nn);
            if (nn < 1e-30) break;   // deflated away; keep the current vector
            double delta = 0.0;
            for (size_t a = 0; a < dim; ++a) {
                next[a] /= nn;
                delta = std::max(delta, std::fabs(next[a] - w[a]));
            }
            w = next;
            if (delta < 1e-9) break;
        }
        return w;
    };

    std::vector<double> work = scatter;
    for (int c = 0; c < 2; ++c) {
        std::vector<double> w = power_iterate(work, c);
        // Rayleigh quotient and deflation.
        double lambda = 0.0;
        for (size_t a = 0; a < dim; ++a) {
            double acc = 0.0;
            for (size_t b = 0; b < dim; ++b) acc += work[a * dim + b] * w[b];
            lambda += w[a] * acc;
        }
        for (size_t a = 0; a < dim; ++a)
            for (size_t b = 0; b < dim; ++b) work[a * dim + b] -= lambda * w[a] * w[b];

        // Deterministic sign: largest-magnitude loading positive.
        size_t arg = 0;
        for (size_t a = 1; a < dim; ++a)
            if (std::fabs(w[a]) > std::fabs(w[arg])) arg = a;
        if (w[arg] < 0.0)
            for (double& x : w) x = -x;
        components[c] = std::move(w);
    }

    std::vector<std::array<double, 2>> coords(n);
    for (size_t i = 0; i < n; ++i)
        for (int c = 0; c < 2; ++c) {
            double acc = 0.0;
            for (size_t e = 0; e < dim; ++e) acc += centered[i * dim + e] * components[c][e];
            coords[i][c] = acc;
        }
    return coords;
}

}  // namespace doccl
