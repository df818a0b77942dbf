#include "doccl/contrastive.hpp"

#include <cmath>
#include <stdexcept>

#include "doccl/kernels.hpp"

namespace doccl {

SimilarityKind similarity_kind_from_string(const std::string& name) {
    if (name == "cosine") return SimilarityKind::Cosine;
    if (name == "manhattan") return SimilarityKind::NegManhattan;
    if (name == "euclidean") return SimilarityKind::NegEuclidean;
    throw std::invalid_argument("unknown similarity kind: " + name);
}

std::string to_string(SimilarityKind kind) {
    switch (kind) {
        case SimilarityKind::Cosine: return "cosine";
        case SimilarityKind::NegManhattan: return "manhattan";
        case SimilarityKind::NegEuclidean: return "euclidean";
    }
    return "?";
}

void validate_batch_shape(const BatchLatents& latents) {
    if (latents.size() < 4 || latents.size() % 2 != 0)
        throw std::invalid_argument("contrastive batch must have even length >= 4");
    size_t dim = latents.front().size();
    if (dim == 0) throw std::invalid_argument("contrastive batch has zero-dim vectors");
    for (const auto& v : latents)
        if (v.size() != dim) throw std::invalid_argument("contrastive batch dims differ");
}

double similarity(SimilarityKind kind, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("similarity: dimension mismatch");
    switch (kind) {
        case SimilarityKind::Cosine: {
            double dot = 0.0, sa = 0.0, sb = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                dot += a[i] * b[i];
                sa += a[i] * a[i];
                sb += b[i] * b[i];
            }
            if (sa == 0.0 || sb == 0.0)
                throw std::invalid_argument("cosine similarity of zero vector");
            return dot / (std::sqrt(sa) * std::sqrt(sb));
        }
        case SimilarityKind::NegEuclidean: {
            double d = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                double diff = a[i] - b[i];
                d += diff * diff;
            }
            return -std::sqrt(d);
        }
        case SimilarityKind::NegManhattan: {
            double d = 0.0;
            for (size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
            return -d;
        }
    }
    throw std::logic_error("similarity: bad kind");
}

void similarity_gradient(SimilarityKind kind, std::span<const double> a,
                         std::span<const double> b, std::span<double> grad_a,
                         std::span<double> grad_b) {
    if (a.size() != b.size() || grad_a.size() != a.size() || grad_b.size() != a.size())
        throw std::invalid_argument("similarity_gradient: dimension mismatch");
    switch (kind) {
        case SimilarityKind::Cosine: {
            double dot = 0.0, sa = 0.0, sb = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                dot += a[i] * b[i];
                sa += a[i] * a[i];
                sb += b[i] * b[i];
            }
            if (sa == 0.0 || sb == 0.0)
                throw std::invalid_argument("cosine similarity of zero vector");
            double na = std::sqrt(sa), nb = std::sqrt(sb);
            double s = dot / (na * nb);
            for (size_t i = 0; i < a.size(); ++i) {
                grad_a[i] = b[i] / (na * nb) - s * a[i] / sa;
                grad_b[i] = a[i] / (na * nb) - s * b[i] / sb;
            }
            return;
        }
        case SimilarityKind::NegEuclidean: {
            double d = 0.0;
            for (size_t i = 0; i < a.size(); ++i) {
                double diff = a[i] - b[i];
                d += diff * diff;
            }
            d = std::sqrt(d);
            if (d == 0.0) {
                // Subgradient at coincident points.
                for (size_t i = 0; i < a.size(); ++i) grad_a[i] = grad_b[i] = 0.0;
                return;
            }
            for (size_t i = 0; i < a.size(); ++i) {
                double g = (a[i] - b[i]) / d;
                grad_a[i] = -g;
                grad_b[i] = g;
            }
            return;
        }
        case SimilarityKind::NegManhattan: {
            // sign() subgradient, 0 at coordinate ties.
            for (size_t i = 0; i < a.size(); ++i) {
                double diff = a[i] - b[i];
                double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                grad_a[i] = -sgn;
                grad_b[i] = sgn;
            }
            return;
        }
    }
    throw std::logic_error("similarity_gradient: bad kind");
}

std::vector<std::vector<double>> pairwise_similarities(SimilarityKind kind,
                                                       const BatchLatents& latents) {
    validate_batch_shape(latents);
    return pairwise_similarity_matrix(kind, latents);
}

double pair_loss(std::span<const double> row, size_t i, size_t j, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("pair_loss: tau must be > 0");
    if (i == j) throw std::invalid_argument("pair_loss: i == j");
    if (i >= row.size() || j >= row.size()) throw std::invalid_argument("pair_loss: index out of range");
    if (row.size() < 2) throw std::invalid_argument("pair_loss: row too short");

    // l(i,j) = -s_ij/tau + logsumexp_{k != i}(s_ik/tau), max-subtracted.
    double m = -HUGE_VAL;
    for (size_t k = 0; k < row.size(); ++k)
        if (k != i) m = std::max(m, row[k] / tau);
    double sum = 0.0;
    for (size_t k = 0; k < row.size(); ++k)
        if (k != i) sum += std::exp(row[k] / tau - m);
    double sij = row[j] / tau;
    // When j attains the max, log1p on the remaining mass preserves the
    // strict positivity of the loss.
    if (sij == m) return std::log1p(sum - 1.0);
    return (m - sij) + std::log(sum);
}

double batch_contrastive_loss(const BatchLatents& latents, SimilarityKind kind, double tau) {
    validate_batch_shape(latents);
    if (!(tau > 0.0)) throw std::invalid_argument("batch_contrastive_loss: tau must be > 0");
    auto sims = pairwise_similarity_matrix(kind, latents);
    size_t n = latents.size();
    double total = 0.0;
    for (size_t k = 0; k < n; k += 2) {
        total += pair_loss(sims[k], k, k + 1, tau);
        total += pair_loss(sims[k + 1], k + 1, k, tau);
    }
    return total / static_cast<double>(n);
}

std::vector<std::vector<double>> loss_similarity_gradient(
    const std::vector<std::vector<double>>& sims, double tau) {
    size_t n = sims.size();
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("loss_similarity_gradient: bad batch size");
    if (!(tau > 0.0)) throw std::invalid_argument("loss_similarity_gradient: tau must be > 0");

    std::vector<std::vector<double>> grad(n, std::vector<double>(n, 0.0));
    double weight = 1.0 / (tau * static_cast<double>(n));

    // One directed term l(i, j) contributes softmax(row i)/tau to every
    // off-diagonal entry of row i and an extra -1/tau at (i, j).
    auto add_term = [&](size_t i, size_t j) {
        double m = -HUGE_VAL;
        for (size_t k = 0; k < n; ++k)
            if (k != i) m = std::max(m, sims[i][k] / tau);
        double sum = 0.0;
        for (size_t k = 0; k < n; ++k)
            if (k != i) sum += std::exp(sims[i][k] / tau - m);
        for (size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            double p = std::exp(sims[i][k] / tau - m) / sum;
            grad[i][k] += p * weight;
        }
        grad[i][j] -= weight;
    };
    for (size_t k = 0; k < n; k += 2) {
        add_term(k, k + 1);
        add_term(k + 1, k);
    }
    return grad;
}

std::vector<std::vector<double>> contrastive_backward(const BatchLatents& latents,
                                                      SimilarityKind kind, double tau) {
    validate_batch_shape(latents);
    if (!(tau > 0.0)) throw std::invalid_argument("contrastive_backward: tau must be > 0");
    size_t n = latents.size();
    size_t dim = latents.front().size();

    auto sims = pairwise_similarity_matrix(kind, latents);
    auto dS = loss_similarity_gradient(sims, tau);

    std::vector<std::vector<double>> grads(n, std::vector<double>(dim, 0.0));
    std::vector<double> ga(dim), gb(dim);
    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < n; ++k) {
            if (k == i || dS[i][k] == 0.0) continue;
            similarity_gradient(kind, latents[i], latents[k], ga, gb);
            double w = dS[i][k];
            for (size_t e = 0; e < dim; ++e) {
                grads[i][e] += w * ga[e];
                grads[k][e] += w * gb[e];
            }
        }
    }
    return grads;
}

}  // namespace doccl
