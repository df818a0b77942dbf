#pragma once

#include <span>
#include <vector>

#include "doccl/contrastive.hpp"
#include "doccl/encoder.hpp"

namespace doccl {

// Data-parallel kernels, each in an OpenMP flavor (used in production) and
// a serial reference flavor kept for testing. Every parallel loop writes
// disjoint slots only, so the two flavors agree bitwise and results do not
// depend on the thread count. Cross-document reductions happen serially in
// index order.

struct BatchForward {
    std::vector<LatentVector> latents;
    std::vector<ForwardCache> caches;
};

BatchForward encode_batch(const EncoderParams& params,
                          const std::vector<std::vector<int>>& token_lists);
BatchForward encode_batch_serial(const EncoderParams& params,
                                 const std::vector<std::vector<int>>& token_lists);

std::vector<std::vector<double>> pairwise_similarity_matrix(SimilarityKind kind,
                                                            const BatchLatents& latents);
std::vector<std::vector<double>> pairwise_similarity_matrix_serial(SimilarityKind kind,
                                                                   const BatchLatents& latents);

// Per-document backward passes computed independently, then accumulated
// into one Gradients in document index order. upstream_v[i] may be empty
// when only upstream_z[i] applies (consistency path) and vice versa.
Gradients batch_backward(const EncoderParams& params, const std::vector<ForwardCache>& caches,
                         const std::vector<std::vector<double>>& upstream_v,
                         const std::vector<std::vector<double>>& upstream_z);
Gradients batch_backward_serial(const EncoderParams& params,
                                const std::vector<ForwardCache>& caches,
                                const std::vector<std::vector<double>>& upstream_v,
                                const std::vector<std::vector<double>>& upstream_z);

// Nearest-centroid assignment for k-means; points and centroids are
// row-major N x dim and K x dim.
std::vector<int> assign_clusters(const std::vector<double>& points, size_t n_points,
                                 const std::vector<double>& centroids, size_t n_centroids,
                                 size_t dim);
std::vector<int> assign_clusters_serial(const std::vector<double>& points, size_t n_points,
                                        const std::vector<double>& centroids, size_t n_centroids,
                                        size_t dim);

}  // namespace doccl
