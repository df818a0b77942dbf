#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace doccl {

struct EncoderDims {
    int vocab_size = 0;
    int d_emb = 64;
    int d_hid = 128;
    int d_lat = 20;
};

// All trainable tensors: embedding table, hidden layer, and the linear
// projection whose output doubles as the consistency-head logits.
struct EncoderParams {
    EncoderDims dims;
    std::vector<double> E;    // vocab_size x d_emb
    std::vector<double> W1;   // d_emb x d_hid
    std::vector<double> b1;   // d_hid
    std::vector<double> W2;   // d_hid x d_lat
    std::vector<double> b2;   // d_lat
};

struct Gradients {
    EncoderDims dims;
    std::vector<double> E;
    std::vector<double> W1;
    std::vector<double> b1;
    std::vector<double> W2;
    std::vector<double> b2;

    static Gradients zeros(const EncoderDims& dims);
    void add(const Gradients& other);
    bool all_finite() const;
};

// Unit-norm latent representation of one document.
using LatentVector = std::vector<double>;

// Intermediate activations of one forward pass, kept for the backward pass.
struct ForwardCache {
    std::vector<int> tokens;
    std::vector<double> h0;   // mean-pooled embeddings
    std::vector<double> h1;   // tanh hidden activations
    std::vector<double> z;    // pre-normalization logits
    double z_norm = 0.0;
};

// Per-document gradient contribution with the embedding part kept sparse;
// summing these in document order gives bitwise-deterministic accumulation
// regardless of how the per-document backward passes were scheduled.
struct BackwardDelta {
    std::vector<std::pair<int, std::vector<double>>> emb_rows;
    std::vector<double> W1, b1, W2, b2;
};

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    EncoderDims dims;
    AdamHyper hyper;
    long long step = 0;
    std::vector<double> mE, uE, mW1, uW1, mb1, ub1, mW2, uW2, mb2, ub2;

    static AdamState init(const EncoderDims& dims, const AdamHyper& hyper);
};

// Xavier-uniform weights, zero biases, deterministic given seed.
EncoderParams init_params(uint64_t seed, const EncoderDims& dims);

// Mean-pool -> tanh hidden layer -> linear projection. No normalization;
// shared by encode() and the consistency head.
ForwardCache forward_logits(const EncoderParams& params, std::span<const int> tokens);

// Full forward pass ending in L2 normalization; ||v|| = 1 by construction.
std::pair<LatentVector, ForwardCache> encode(const EncoderParams& params,
                                             std::span<const int> tokens);

// Chain rule through normalization, projection, tanh and mean-pool.
// upstream_v is dL/dv; upstream_z (optional, may be empty) is a gradient
// arriving directly at the pre-normalization logits.
BackwardDelta encode_backward_delta(const EncoderParams& params, const ForwardCache& cache,
                                    std::span<const double> upstream_v,
                                    std::span<const double> upstream_z = {});

Gradients encode_backward(const EncoderParams& params, const ForwardCache& cache,
                          std::span<const double> upstream_v,
                          std::span<const double> upstream_z = {});

void add_delta(Gradients& grads, const BackwardDelta& delta);

// One bias-corrected Adam update on a flat array.
void adam_update_array(std::span<double> param, std::span<const double> grad,
                       std::span<double> m, std::span<double> u,
                       long long step, const AdamHyper& hyper);

// Updates all tensors in place; state.step advances by one.
void adam_step(EncoderParams& params, const Gradients& grads, AdamState& state);

// Versioned binary checkpoint: dims, seed, flat parameter arrays.
// Round-trips bitwise.
void save_checkpoint(const EncoderParams& params, uint64_t seed, const std::string& path);
std::pair<EncoderParams, uint64_t> load_checkpoint(const std::string& path);

}  // namespace doccl
