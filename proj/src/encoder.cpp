#include "doccl/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "doccl/rng.hpp"

namespace doccl {

namespace {

void check_dims(const EncoderDims& d) {
    if (d.vocab_size < 1 || d.d_emb < 1 || d.d_hid < 1 || d.d_lat < 1)
        throw std::invalid_argument("encoder: all dimensions must be >= 1");
}

void fill_xavier(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
    double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& x : w) x = rng.uniform(-a, a);
}

bool finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace

Gradients Gradients::zeros(const EncoderDims& dims) {
    check_dims(dims);
    Gradients g;
    g.dims = dims;
    g.E.assign(static_cast<size_t>(dims.vocab_size) * dims.d_emb, 0.0);
    g.W1.assign(static_cast<size_t>(dims.d_emb) * dims.d_hid, 0.0);
    g.b1.assign(dims.d_hid, 0.0);
    g.W2.assign(static_cast<size_t>(dims.d_hid) * dims.d_lat, 0.0);
    g.b2.assign(dims.d_lat, 0.0);
    return g;
}

void Gradients::add(const Gradients& other) {
    auto axpy = [](std::vector<double>& dst, const std::vector<double>& src) {
        if (dst.size() != src.size()) throw std::invalid_argument("Gradients::add: shape mismatch");
        for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    axpy(E, other.E);
    axpy(W1, other.W1);
    axpy(b1, other.b1);
    axpy(W2, other.W2);
    axpy(b2, other.b2);
}

bool Gradients::all_finite() const {
    return finite(E) && finite(W1) && finite(b1) && finite(W2) && finite(b2);
}

AdamState AdamState::init(const EncoderDims& dims, const AdamHyper& hyper) {
    check_dims(dims);
    AdamState s;
    s.dims = dims;
    s.hyper = hyper;
    size_t ne = static_cast<size_t>(dims.vocab_size) * dims.d_emb;
    size_t nw1 = static_cast<size_t>(dims.d_emb) * dims.d_hid;
    size_t nw2 = static_cast<size_t>(dims.d_hid) * dims.d_lat;
    s.mE.assign(ne, 0.0);
    s.uE.assign(ne, 0.0);
    s.mW1.assign(nw1, 0.0);
    s.uW1.assign(nw1, 0.0);
    s.mb1.assign(dims.d_hid, 0.0);
    s.ub1.assign(dims.d_hid, 0.0);
    s.mW2.assign(nw2, 0.0);
    s.uW2.assign(nw2, 0.0);
    s.mb2.assign(dims.d_lat, 0.0);
    s.ub2.assign(dims.d_lat, 0.0);
    return s;
}

EncoderParams init_params(uint64_t seed, const EncoderDims& dims) {
    check_dims(dims);
    EncoderParams p;
    p.dims = dims;
    p.E.resize(static_cast<size_t>(dims.vocab_size) * dims.d_emb);
    p.W1.resize(static_cast<size_t>(dims.d_emb) * dims.d_hid);
    p.b1.assign(dims.d_hid, 0.0);
    p.W2.resize(static_cast<size_t>(dims.d_hid) * dims.d_lat);
    p.b2.assign(dims.d_lat, 0.0);

    Rng rng(derive_seed(seed, "init-params"));
    fill_xavier(p.E, dims.vocab_size, dims.d_emb, rng);
    fill_xavier(p.W1, dims.d_emb, dims.d_hid, rng);
    fill_xavier(p.W2, dims.d_hid, dims.d_lat, rng);
    return p;
}

ForwardCache forward_logits(const EncoderParams& params, std::span<const int> tokens) {
    if (tokens.empty()) throw std::invalid_argument("encode: empty token sequence");
    const EncoderDims& d = params.dims;

    ForwardCache cache;
    cache.tokens.assign(tokens.begin(), tokens.end());
    cache.h0.assign(d.d_emb, 0.0);
    // Accumulate in sorted token order: the mean is order-free, and a
    // canonical summation order makes that hold bitwise.
    std::vector<int> sorted(cache.tokens);
    std::sort(sorted.begin(), sorted.end());
    for (int t : sorted) {
        if (t < 0 || t >= d.vocab_size)
            throw std::out_of_range("encode: token index " + std::to_string(t) + " out of range");
        const double* row = params.E.data() + static_cast<size_t>(t) * d.d_emb;
        for (int e = 0; e < d.d_emb; ++e) cache.h0[e] += row[e];
    }
    double inv_n = 1.0 / static_cast<double>(tokens.size());
    for (double& x : cache.h0) x *= inv_n;

    cache.h1.assign(d.d_hid, 0.0);
    for (int e = 0; e < d.d_emb; ++e) {
        double he = cache.h0[e];
        const double* w = params.W1.data() + static_cast<size_t>(e) * d.d_hid;
        for (int h = 0; h < d.d_hid; ++h) cache.h1[h] += he * w[h];
    }
    for (int h = 0; h < d.d_hid; ++h) cache.h1[h] = std::tanh(cache.h1[h] + params.b1[h]);

    cache.z = params.b2;
    for (int h = 0; h < d.d_hid; ++h) {
        double hh = cache.h1[h];
        const double* w = params.W2.data() + static_cast<size_t>(h) * d.d_lat;
        for (int l = 0; l < d.d_lat; ++l) cache.z[l] += hh * w[l];
    }
    double sq = 0.0;
    for (double zl : cache.z) sq += zl * zl;
    cache.z_norm = std::sqrt(sq);
    return cache;
}

std::pair<LatentVector, ForwardCache> encode(const EncoderParams& params,
                                             std::span<const int> tokens) {
    ForwardCache cache = forward_logits(params, tokens);
    if (cache.z_norm < 1e-12)
        throw std::runtime_error("encode: degenerate projection (||z|| < 1e-12)");
    LatentVector v(cache.z.size());
    for (size_t l = 0; l < v.size(); ++l) v[l] = cache.z[l] / cache.z_norm;
    return {std::move(v), std::move(cache)};
}

BackwardDelta encode_backward_delta(const EncoderParams& params, const ForwardCache& cache,
                                    std::span<const double> upstream_v,
                                    std::span<const double> upstream_z) {
    const EncoderDims& d = params.dims;
    if (!upstream_v.empty() && upstream_v.size() != static_cast<size_t>(d.d_lat))
        throw std::invalid_argument("encode_backward: upstream_v shape mismatch");
    if (!upstream_z.empty() && upstream_z.size() != static_cast<size_t>(d.d_lat))
        throw std::invalid_argument("encode_backward: upstream_z shape mismatch");
    if (cache.h0.size() != static_cast<size_t>(d.d_emb) ||
        cache.h1.size() != static_cast<size_t>(d.d_hid) ||
        cache.z.size() != static_cast<size_t>(d.d_lat))
        throw std::invalid_argument("encode_backward: cache does not match params");

    // dL/dz via the normalization Jacobian (I - v v^T)/||z||, plus any
    // gradient arriving at z directly.
    std::vector<double> dz(d.d_lat, 0.0);
    if (!upstream_v.empty()) {
        if (cache.z_norm < 1e-12)
            throw std::runtime_error("encode_backward: degenerate cached projection");
        double vdot = 0.0;
        for (int l = 0; l < d.d_lat; ++l) vdot += cache.z[l] / cache.z_norm * upstream_v[l];
        for (int l = 0; l < d.d_lat; ++l) {
            double vl = cache.z[l] / cache.z_norm;
            dz[l] = (upstream_v[l] - vdot * vl) / cache.z_norm;
        }
    }
    if (!upstream_z.empty())
        for (int l = 0; l < d.d_lat; ++l) dz[l] += upstream_z[l];

    BackwardDelta delta;
    delta.b2 = dz;
    delta.W2.assign(static_cast<size_t>(d.d_hid) * d.d_lat, 0.0);
    std::vector<double> dh1(d.d_hid, 0.0);
    for (int h = 0; h < d.d_hid; ++h) {
        const double* w = params.W2.data() + static_cast<size_t>(h) * d.d_lat;
        double* gw = delta.W2.data() + static_cast<size_t>(h) * d.d_lat;
        double acc = 0.0;
        for (int l = 0; l < d.d_lat; ++l) {
            gw[l] = cache.h1[h] * dz[l];
            acc += w[l] * dz[l];
        }
        dh1[h] = acc;
    }

    std::vector<double> da1(d.d_hid);
    for (int h = 0; h < d.d_hid; ++h) da1[h] = dh1[h] * (1.0 - cache.h1[h] * cache.h1[h]);
    delta.b1 = da1;

    delta.W1.assign(static_cast<size_t>(d.d_emb) * d.d_hid, 0.0);
    std::vector<double> dh0(d.d_emb, 0.0);
    for (int e = 0; e < d.d_emb; ++e) {
        const double* w = params.W1.data() + static_cast<size_t>(e) * d.d_hid;
        double* gw = delta.W1.data() + static_cast<size_t>(e) * d.d_hid;
        double acc = 0.0;
        for (int h = 0; h < d.d_hid; ++h) {
            gw[h] = cache.h0[e] * da1[h];
            acc += w[h] * da1[h];
        }
        dh0[e] = acc;
    }

    // Sparse embedding gradient: dh0/n per token occurrence, grouped by
    // token in first-occurrence order.
    double inv_n = 1.0 / static_cast<double>(cache.tokens.size());
    std::unordered_map<int, size_t> row_of;
    for (int t : cache.tokens) {
        auto [it, inserted] = row_of.try_emplace(t, delta.emb_rows.size());
        if (inserted) delta.emb_rows.emplace_back(t, std::vector<double>(d.d_emb, 0.0));
        std::vector<double>& row = delta.emb_rows[it->second].second;
        for (int e = 0; e < d.d_emb; ++e) row[e] += dh0[e] * inv_n;
    }
    return delta;
}

void add_delta(Gradients& grads, const BackwardDelta& delta) {
    const EncoderDims& d = grads.dims;
    for (const auto& [token, row] : delta.emb_rows) {
        double* dst = grads.E.data() + static_cast<size_t>(token) * d.d_emb;
        for (int e = 0; e < d.d_emb; ++e) dst[e] += row[e];
    }
    for (size_t i = 0; i < grads.W1.size(); ++i) grads.W1[i] += delta.W1[i];
    for (size_t i = 0; i < grads.b1.size(); ++i) grads.b1[i] += delta.b1[i];
    for (size_t i = 0; i < grads.W2.size(); ++i) grads.W2[i] += delta.W2[i];
    for (size_t i = 0; i < grads.b2.size(); ++i) grads.b2[i] += delta.b2[i];
}

Gradients encode_backward(const EncoderParams& params, const ForwardCache& cache,
                          std::span<const double> upstream_v,
                          std::span<const double> upstream_z) {
    Gradients grads = Gradients::zeros(params.dims);
    add_delta(grads, encode_backward_delta(params, cache, upstream_v, upstream_z));
    return grads;
}

void adam_update_array(std::span<double> param, std::span<const double> grad,
                       std::span<double> m, std::span<double> u,
                       long long step, const AdamHyper& hyper) {
    if (param.size() != grad.size() || param.size() != m.size() || param.size() != u.size())
        throw std::invalid_argument("adam_update_array: shape mismatch");
    double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
    for (size_t i = 0; i < param.size(); ++i) {
        double g = grad[i];
        if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient");
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        u[i] = hyper.beta2 * u[i] + (1.0 - hyper.beta2) * g * g;
        double mhat = m[i] / bc1;
        double uhat = u[i] / bc2;
        param[i] -= hyper.lr * mhat / (std::sqrt(uhat) + hyper.eps);
    }
}

void adam_step(EncoderParams& params, const Gradients& grads, AdamState& state) {
    if (params.E.size() != grads.E.size() || params.W1.size() != grads.W1.size() ||
        params.b1.size() != grads.b1.size() || params.W2.size() != grads.W2.size() ||
        params.b2.size() != grads.b2.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    ++state.step;
    adam_update_array(params.E, grads.E, state.mE, state.uE, state.step, state.hyper);
    adam_update_array(params.W1, grads.W1, state.mW1, state.uW1, state.step, state.hyper);
    adam_update_array(params.b1, grads.b1, state.mb1, state.ub1, state.step, state.hyper);
    adam_update_array(params.W2, grads.W2, state.mW2, state.uW2, state.step, state.hyper);
    adam_update_array(params.b2, grads.b2, state.mb2, state.ub2, state.step, state.hyper);
}

namespace {
constexpr char kCheckpointMagic[8] = {'D', 'O', 'C', 'C', 'L', 'C', 'K', '1'};
}

void save_checkpoint(const EncoderParams& params, uint64_t seed, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
    int32_t dims[4] = {params.dims.vocab_size, params.dims.d_emb, params.dims.d_hid,
                       params.dims.d_lat};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    auto write_vec = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write_vec(params.E);
    write_vec(params.W1);
    write_vec(params.b1);
    write_vec(params.W2);
    write_vec(params.b2);
    if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

std::pair<EncoderParams, uint64_t> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
    uint64_t seed = 0;
    in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
    int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw std::runtime_error("load_checkpoint: truncated file: " + path);

    EncoderParams p;
    p.dims = {dims[0], dims[1], dims[2], dims[3]};
    check_dims(p.dims);
    p.E.resize(static_cast<size_t>(dims[0]) * dims[1]);
    p.W1.resize(static_cast<size_t>(dims[1]) * dims[2]);
    p.b1.resize(dims[2]);
    p.W2.resize(static_cast<size_t>(dims[2]) * dims[3]);
    p.b2.resize(dims[3]);
    auto read_vec = [&](std::vector<double>& v) {
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    read_vec(p.E);
    read_vec(p.W1);
    read_vec(p.b1);
    read_vec(p.W2);
    read_vec(p.b2);
    if (!in) throw std::runtime_error("load_checkpoint: truncated file: " + path);
    return {std::move(p), seed};
}

}  // namespace doccl
