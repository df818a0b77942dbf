#include "doccl/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace doccl {

namespace {

void fill_similarity_row(SimilarityKind kind, const BatchLatents& latents, size_t i,
                         std::vector<std::vector<double>>& out) {
    // Row i from the diagonal rightwards; the mirror copy keeps S = S^T
    // bitwise.
    for (size_t j = i; j < latents.size(); ++j) {
        double s = similarity(kind, latents[i], latents[j]);
        out[i][j] = s;
        out[j][i] = s;
    }
}

BackwardDelta document_backward(const EncoderParams& params, const ForwardCache& cache,
                                const std::vector<double>& uv, const std::vector<double>& uz) {
    return encode_backward_delta(params, cache,
                                 std::span<const double>(uv.data(), uv.size()),
                                 std::span<const double>(uz.data(), uz.size()));
}

}  // namespace

BatchForward encode_batch(const EncoderParams& params,
                          const std::vector<std::vector<int>>& token_lists) {
    BatchForward out;
    out.latents.resize(token_lists.size());
    out.caches.resize(token_lists.size());
    int64_t n = static_cast<int64_t>(token_lists.size());
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        auto [v, cache] = encode(params, token_lists[i]);
        out.latents[i] = std::move(v);
        out.caches[i] = std::move(cache);
    }
    return out;
}

BatchForward encode_batch_serial(const EncoderParams& params,
                                 const std::vector<std::vector<int>>& token_lists) {
    BatchForward out;
    out.latents.resize(token_lists.size());
    out.caches.resize(token_lists.size());
    for (size_t i = 0; i < token_lists.size(); ++i) {
        auto [v, cache] = encode(params, token_lists[i]);
        out.latents[i] = std::move(v);
        out.caches[i] = std::move(cache);
    }
    return out;
}

std::vector<std::vector<double>> pairwise_similarity_matrix(SimilarityKind kind,
                                                            const BatchLatents& latents) {
    size_t n = latents.size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
    int64_t rows = static_cast<int64_t>(n);
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < rows; ++i) fill_similarity_row(kind, latents, i, out);
    return out;
}

std::vector<std::vector<double>> pairwise_similarity_matrix_serial(SimilarityKind kind,
                                                                   const BatchLatents& latents) {
    size_t n = latents.size();
    std::vector<std::vector<double>> out(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) fill_similarity_row(kind, latents, i, out);
    return out;
}

Gradients batch_backward(const EncoderParams& params, const std::vector<ForwardCache>& caches,
                         const std::vector<std::vector<double>>& upstream_v,
                         const std::vector<std::vector<double>>& upstream_z) {
    if (caches.size() != upstream_v.size() || caches.size() != upstream_z.size())
        throw std::invalid_argument("batch_backward: length mismatch");

    // Per-document deltas are computed in parallel a block at a time (the
    // dense tensors make one delta fairly large), then accumulated in
    // document index order, so the result is bitwise independent of the
    // thread count and matches the serial reference.
#ifdef _OPENMP
    const size_t kBlock = std::max<size_t>(4, 2 * static_cast<size_t>(omp_get_max_threads()));
#else
    const size_t kBlock = 4;
#endif
    Gradients grads = Gradients::zeros(params.dims);
    std::vector<BackwardDelta> deltas(std::min(kBlock, caches.size()));
    for (size_t start = 0; start < caches.size(); start += kBlock) {
        size_t end = std::min(caches.size(), start + kBlock);
        int64_t count = static_cast<int64_t>(end - start);
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < count; ++i)
            deltas[i] = document_backward(params, caches[start + i], upstream_v[start + i],
                                          upstream_z[start + i]);
        for (int64_t i = 0; i < count; ++i) add_delta(grads, deltas[i]);
    }
    return grads;
}

Gradients batch_backward_serial(const EncoderParams& params,
                                const std::vector<ForwardCache>& caches,
                                const std::vector<std::vector<double>>& upstream_v,
                                const std::vector<std::vector<double>>& upstream_z) {
    if (caches.size() != upstream_v.size() || caches.size() != upstream_z.size())
        throw std::invalid_argument("batch_backward: length mismatch");
    Gradients grads = Gradients::zeros(params.dims);
    for (size_t i = 0; i < caches.size(); ++i)
        add_delta(grads, document_backward(params, caches[i], upstream_v[i], upstream_z[i]));
    return grads;
}

namespace {

int nearest_centroid(const double* point, const std::vector<double>& centroids,
                     size_t n_centroids, size_t dim) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < n_centroids; ++k) {
        const double* c = centroids.data() + k * dim;
        double d = 0.0;
        for (size_t e = 0; e < dim; ++e) {
            double diff = point[e] - c[e];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace

std::vector<int> assign_clusters(const std::vector<double>& points, size_t n_points,
                                 const std::vector<double>& centroids, size_t n_centroids,
                                 size_t dim) {
    std::vector<int> assignment(n_points, 0);
    int64_t n = static_cast<int64_t>(n_points);
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i)
        assignment[i] = nearest_centroid(points.data() + i * dim, centroids, n_centroids, dim);
    return assignment;
}

std::vector<int> assign_clusters_serial(const std::vector<double>& points, size_t n_points,
                                        const std::vector<double>& centroids, size_t n_centroids,
                                        size_t dim) {
    std::vector<int> assignment(n_points, 0);
    for (size_t i = 0; i < n_points; ++i)
        assignment[i] = nearest_centroid(points.data() + i * dim, centroids, n_centroids, dim);
    return assignment;
}

}  // namespace doccl
