#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "doccl/encoder.hpp"

namespace doccl {

// Probabilities over the d_lat categories of the shared projection head.
using ClassDistribution = std::vector<double>;

// A document paired with its back-translated version, plus provenance.
struct UdaPair {
    std::string doc_id;
    std::vector<int> tokens;        // x_i
    std::vector<int> tokens_aug;    // x_i'
    std::string route_id;
    uint64_t seed = 0;
};

// Numerically stable softmax.
ClassDistribution softmax(std::span<const double> logits);

// Class distribution from the encoder's pre-normalization logits.
ClassDistribution predict_distribution(const EncoderParams& params, std::span<const int> tokens);

// KL(p || q) with q floored at 1e-12 and 0 * log(0/.) = 0. Never negative.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Sum of per-pair KL(p(y|x) || p(y|x')) — an unnormalized sum over the
// batch. The clean-side distribution acts as a fixed target by default.
double uda_batch_loss(const EncoderParams& params, const std::vector<UdaPair>& pairs);

// Gradients of uda_batch_loss. With freeze_target (the default) gradient
// flows through the augmented branch only: dL/dz' = q - p per pair. With
// freeze_target = false the clean branch contributes
// dL/dz_m = p_m (log(p_m/q_m) - KL) as well.
Gradients uda_backward(const EncoderParams& params, const std::vector<UdaPair>& pairs,
                       bool freeze_target = true);

// Per-pair upstream logit gradients, exposed so the trainer can route them
// through the shared batch-backward kernel.
struct UdaBatchSignals {
    double loss = 0.0;
    std::vector<ForwardCache> aug_caches;
    std::vector<std::vector<double>> aug_dz;
    std::vector<ForwardCache> clean_caches;
    std::vector<std::vector<double>> clean_dz;   // empty vectors when frozen
};
UdaBatchSignals uda_batch_signals(const EncoderParams& params, const std::vector<UdaPair>& pairs,
                                  bool freeze_target = true);

// L = L_CL + L_UDA with unit weights.
double total_loss(double contrastive, double uda);

}  // namespace doccl
