#include "doccl/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doccl/kernels.hpp"

namespace doccl {

ClassDistribution softmax(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    double m = *std::max_element(logits.begin(), logits.end());
    ClassDistribution out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

ClassDistribution predict_distribution(const EncoderParams& params, std::span<const int> tokens) {
    ForwardCache cache = forward_logits(params, tokens);
    return softmax(cache.z);
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;   // 0 * log(0/.) = 0
        double qi = std::max(q[i], 1e-12);
        sum += p[i] * std::log(p[i] / qi);
    }
    return std::max(sum, 0.0);
}

UdaBatchSignals uda_batch_signals(const EncoderParams& params, const std::vector<UdaPair>& pairs,
                                  bool freeze_target) {
    if (pairs.empty()) throw std::invalid_argument("uda_batch_loss: empty pair list");
    const int d_lat = params.dims.d_lat;

    UdaBatchSignals out;
    out.aug_caches.reserve(pairs.size());
    out.aug_dz.reserve(pairs.size());
    out.clean_caches.reserve(pairs.size());
    out.clean_dz.reserve(pairs.size());

    for (const UdaPair& pair : pairs) {
        if (pair.tokens.empty() || pair.tokens_aug.empty())
            throw std::invalid_argument("uda pair has empty token sequence (doc " + pair.doc_id + ")");
        ForwardCache clean = forward_logits(params, pair.tokens);
        ForwardCache aug = forward_logits(params, pair.tokens_aug);
        ClassDistribution p = softmax(clean.z);
        ClassDistribution q = softmax(aug.z);
        double kl = kl_divergence(p, q);
        out.loss += kl;

        std::vector<double> dz_aug(d_lat);
        for (int l = 0; l < d_lat; ++l) dz_aug[l] = q[l] - p[l];
        out.aug_dz.push_back(std::move(dz_aug));
        out.aug_caches.push_back(std::move(aug));

        std::vector<double> dz_clean;
        if (!freeze_target) {
            dz_clean.resize(d_lat);
            for (int l = 0; l < d_lat; ++l) {
                double ratio = std::log(std::max(p[l], 1e-300) / std::max(q[l], 1e-12));
                dz_clean[l] = p[l] * (ratio - kl);
            }
        }
        out.clean_dz.push_back(std::move(dz_clean));
        out.clean_caches.push_back(std::move(clean));
    }
    return out;
}

double uda_batch_loss(const EncoderParams& params, const std::vector<UdaPair>& pairs) {
    if (pairs.empty()) throw std::invalid_argument("uda_batch_loss: empty pair list");
    double total = 0.0;
    for (const UdaPair& pair : pairs) {
        ClassDistribution p = predict_distribution(params, pair.tokens);
        ClassDistribution q = predict_distribution(params, pair.tokens_aug);
        total += kl_divergence(p, q);
    }
    return total;
}

Gradients uda_backward(const EncoderParams& params, const std::vector<UdaPair>& pairs,
                       bool freeze_target) {
    UdaBatchSignals sig = uda_batch_signals(params, pairs, freeze_target);
    std::vector<std::vector<double>> no_v(sig.aug_caches.size());
    Gradients grads = batch_backward_serial(params, sig.aug_caches, no_v, sig.aug_dz);
    if (!freeze_target) {
        Gradients clean = batch_backward_serial(params, sig.clean_caches, no_v, sig.clean_dz);
        grads.add(clean);
    }
    return grads;
}

double total_loss(double contrastive, double uda) {
    if (!std::isfinite(contrastive) || !std::isfinite(uda))
        throw std::invalid_argument("total_loss: non-finite input");
    return contrastive + uda;
}

}  // namespace doccl
