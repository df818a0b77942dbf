#pragma once

#include <span>
#include <string>
#include <vector>

namespace doccl {

// The neg_* kinds are negated distances so that larger always means more
// similar, matching the softmax orientation of the loss.
enum class SimilarityKind { Cosine, NegManhattan, NegEuclidean };

SimilarityKind similarity_kind_from_string(const std::string& name);
std::string to_string(SimilarityKind kind);

// Ordered batch of latent vectors where positions (2k, 2k+1) (0-based) form
// a positive pair.
using BatchLatents = std::vector<std::vector<double>>;

double similarity(SimilarityKind kind, std::span<const double> a, std::span<const double> b);

// S[i][j] = similarity(v_i, v_j). The diagonal is filled but never enters
// the loss. Parallel over rows; see kernels.hpp for the serial reference.
std::vector<std::vector<double>> pairwise_similarities(SimilarityKind kind,
                                                       const BatchLatents& latents);

// l(i, j): softmax cross-entropy of pair (i, j) within row i, temperature
// tau, denominator over all k != i. Stable for tau down to 0.05.
double pair_loss(std::span<const double> row, size_t i, size_t j, double tau);

// Mean of l over both orientations of every positive pair.
double batch_contrastive_loss(const BatchLatents& latents, SimilarityKind kind, double tau);

// dL/dv_i for every vector in the batch, all three kernels.
std::vector<std::vector<double>> contrastive_backward(const BatchLatents& latents,
                                                      SimilarityKind kind, double tau);

// Loss gradient with respect to the similarity matrix entries; exposed for
// the kernel-jacobian composition and for tests.
std::vector<std::vector<double>> loss_similarity_gradient(
    const std::vector<std::vector<double>>& sims, double tau);

// Gradient of similarity(kind, a, b) with respect to a and b.
void similarity_gradient(SimilarityKind kind, std::span<const double> a,
                         std::span<const double> b, std::span<double> grad_a,
                         std::span<double> grad_b);

void validate_batch_shape(const BatchLatents& latents);

}  // namespace doccl
