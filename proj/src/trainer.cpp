#include "doccl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doccl/consistency.hpp"
#include "doccl/kernels.hpp"
#include "doccl/rng.hpp"
#include "doccl/sampler.hpp"

namespace doccl {

namespace fs = std::filesystem;

Method method_from_string(const std::string& name) {
    if (name == "cl") return Method::Cl;
    if (name == "pcl") return Method::Pcl;
    if (name == "scl") return Method::Scl;
    throw std::invalid_argument("unknown method: " + name);
}

std::string to_string(Method method) {
    switch (method) {
        case Method::Cl: return "cl";
        case Method::Pcl: return "pcl";
        case Method::Scl: return "scl";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("config: fraction must be in (0, 1]");
    if (method == Method::Scl && use_uda)
        throw std::invalid_argument("config: SCL does not combine with UDA");
    if (batch_pairs < 2) throw std::invalid_argument("config: batch size must be >= 2 pairs");
    if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("config: learning rate must be > 0");
    if (d_emb < 1 || d_hid < 1 || d_lat < 1)
        throw std::invalid_argument("config: encoder dims must be >= 1");
    if (method == Method::Scl && (scl_routes.size() != 2 || scl_routes[0] == scl_routes[1]))
        throw std::invalid_argument("config: SCL needs exactly two distinct routes");
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

EvalResult evaluate_params(const EncoderParams& params, const Corpus& corpus, uint64_t seed) {
    std::vector<std::vector<int>> token_lists;
    token_lists.reserve(corpus.size());
    for (const Document& doc : corpus.documents()) token_lists.push_back(doc.tokens);
    BatchForward fwd = encode_batch(params, token_lists);

    EvalResult result;
    size_t d_lat = params.dims.d_lat;
    result.latents.resize(corpus.size() * d_lat);
    for (size_t i = 0; i < corpus.size(); ++i)
        std::copy(fwd.latents[i].begin(), fwd.latents[i].end(), result.latents.begin() + i * d_lat);

    int k = corpus.class_count();
    if (k < 1) throw std::runtime_error("evaluate: corpus has no labeled classes");
    result.clusters =
        kmeans(result.latents, corpus.size(), d_lat, k, derive_seed(seed, "kmeans-eval"));

    std::vector<std::optional<int>> labels;
    labels.reserve(corpus.size());
    for (const Document& doc : corpus.documents()) labels.push_back(doc.label);
    result.accuracy = clustering_accuracy(result.clusters.assignment, labels, k, k);
    return result;
}

namespace {

struct MiniBatch {
    std::string kind;                       // "contrastive" or "uda"
    std::vector<size_t> docs;               // contrastive: corpus indices, pair order
    std::vector<std::vector<int>> tokens;   // contrastive: per-doc token lists
    std::vector<UdaPair> uda_pairs;
};

std::vector<MiniBatch> plan_epoch(const TrainConfig& config, const Corpus& corpus,
                                  int epoch_index, TrainContext& ctx) {
    std::vector<MiniBatch> contrastive;
    std::vector<MiniBatch> uda;

    if (config.method == Method::Scl) {
        std::vector<AugmentationRoute> routes;
        for (const auto& r : config.scl_routes) routes.push_back({r, r});
        for (const auto& group : scl_epoch_groups(corpus.size(), config.batch_pairs, config.seed,
                                                  epoch_index)) {
            SclBatch batch = make_scl_batch(corpus, group, ctx.cache, ctx.provider, routes);
            MiniBatch mb;
            mb.kind = "contrastive";
            for (const SclItem& item : batch.items) {
                mb.docs.push_back(item.source_index);
                mb.tokens.push_back(item.tokens);
            }
            contrastive.push_back(std::move(mb));
        }
    } else {
        double fraction = config.method == Method::Cl ? 1.0 : config.fraction;
        LabeledSubset subset = select_partial_subset(corpus, fraction, config.seed);
        for (const auto& batch : pcl_epoch_batches(subset, corpus, config.batch_pairs,
                                                   config.seed, epoch_index)) {
            MiniBatch mb;
            mb.kind = "contrastive";
            mb.docs = batch.doc_indices;
            for (size_t idx : batch.doc_indices)
                mb.tokens.push_back(corpus.documents()[idx].tokens);
            contrastive.push_back(std::move(mb));
        }
        if (config.use_uda) {
            std::vector<size_t> complement = subset_complement(corpus, subset);
            AugmentationRoute route{config.uda_route, config.uda_route};
            for (const auto& group : uda_epoch_groups(complement, config.batch_pairs, config.seed,
                                                      epoch_index)) {
                MiniBatch mb;
                mb.kind = "uda";
                mb.uda_pairs = make_uda_pairs(corpus, group, ctx.cache, ctx.provider, route);
                uda.push_back(std::move(mb));
            }
        }
    }

    std::vector<MiniBatch> plan;
    if (config.schedule == Schedule::PrefixSuffix) {
        for (auto& mb : contrastive) plan.push_back(std::move(mb));
        for (auto& mb : uda) plan.push_back(std::move(mb));
    } else {
        size_t i = 0, j = 0;
        while (i < contrastive.size() || j < uda.size()) {
            if (i < contrastive.size()) plan.push_back(std::move(contrastive[i++]));
            if (j < uda.size()) plan.push_back(std::move(uda[j++]));
        }
    }
    return plan;
}

}  // namespace

EpochOutcome run_epoch(const TrainConfig& config, const Corpus& corpus, EncoderParams& params,
                       AdamState& state, int epoch_index, TrainContext ctx) {
    config.validate();
    auto started = std::chrono::steady_clock::now();

    EpochOutcome outcome;
    outcome.report.epoch = epoch_index;
    double sum_contrastive = 0.0;
    double sum_uda = 0.0;

    for (MiniBatch& mb : plan_epoch(config, corpus, epoch_index, ctx)) {
        if (mb.kind == "contrastive") {
            BatchForward fwd = encode_batch(params, mb.tokens);
            double loss = batch_contrastive_loss(fwd.latents, config.similarity, config.tau);
            auto dvs = contrastive_backward(fwd.latents, config.similarity, config.tau);
            std::vector<std::vector<double>> dzs(fwd.caches.size());
            Gradients grads = batch_backward(params, fwd.caches, dvs, dzs);
            adam_step(params, grads, state);
            sum_contrastive += loss;
            ++outcome.report.contrastive_batches;
        } else {
            UdaBatchSignals sig =
                uda_batch_signals(params, mb.uda_pairs, config.freeze_uda_target);
            std::vector<std::vector<double>> no_v(sig.aug_caches.size());
            Gradients grads = batch_backward(params, sig.aug_caches, no_v, sig.aug_dz);
            if (!config.freeze_uda_target) {
                Gradients clean = batch_backward(params, sig.clean_caches, no_v, sig.clean_dz);
                grads.add(clean);
            }
            adam_step(params, grads, state);
            sum_uda += sig.loss;
            ++outcome.report.uda_batches;
        }
        outcome.batch_kinds.push_back(mb.kind);
    }

    if (outcome.report.contrastive_batches > 0)
        outcome.report.mean_contrastive = sum_contrastive / outcome.report.contrastive_batches;
    if (outcome.report.uda_batches > 0)
        outcome.report.mean_uda = sum_uda / outcome.report.uda_batches;

    EvalResult eval = evaluate_params(params, corpus, config.seed);
    outcome.report.accuracy = eval.accuracy;
    outcome.clusters = std::move(eval.clusters);
    outcome.latents = std::move(eval.latents);

    outcome.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return outcome;
}

void write_metrics_csv(const std::string& path, double initial_accuracy,
                       const std::vector<EpochReport>& reports) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "epoch,L_CL,L_UDA,total,accuracy\n";
    out << "0,0,0,0," << format_double(initial_accuracy) << "\n";
    for (const EpochReport& r : reports) {
        double total = total_loss(r.mean_contrastive, r.mean_uda);
        out << r.epoch << "," << format_double(r.mean_contrastive) << ","
            << format_double(r.mean_uda) << "," << format_double(total) << ","
            << format_double(r.accuracy) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_embeddings_tsv(const std::string& path, const Corpus& corpus,
                          const std::vector<int>& assignment, const std::vector<double>& latents,
                          size_t d_lat) {
    auto coords = project_2d(latents, corpus.size(), d_lat);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "doc_id\tlabel\tcluster\tx\ty\n";
    for (size_t i = 0; i < corpus.size(); ++i) {
        const Document& doc = corpus.documents()[i];
        out << doc.id << "\t" << (doc.label ? std::to_string(*doc.label) : "-1") << "\t"
            << assignment[i] << "\t" << format_double(coords[i][0]) << "\t"
            << format_double(coords[i][1]) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

TrainResult train(const TrainConfig& config, const Corpus& corpus, TrainContext ctx,
                  const std::string& run_dir) {
    config.validate();
    if (!run_dir.empty()) fs::create_directories(run_dir);

    EncoderDims dims{static_cast<int>(corpus.vocabulary().size()), config.d_emb, config.d_hid,
                     config.d_lat};
    TrainResult result;
    result.params_last = init_params(config.seed, dims);
    AdamHyper hyper;
    hyper.lr = config.lr;
    AdamState state = AdamState::init(dims, hyper);

    EvalResult init_eval = evaluate_params(result.params_last, corpus, config.seed);
    result.initial_accuracy = init_eval.accuracy;
    result.params_best = result.params_last;
    result.best_epoch = 0;
    result.best_accuracy = init_eval.accuracy;

    std::ofstream batch_log;
    if (!run_dir.empty()) {
        batch_log.open(fs::path(run_dir) / "batch_kinds.log", std::ios::binary);
        if (!batch_log) throw std::runtime_error("cannot write batch_kinds.log in " + run_dir);
    }

    std::vector<int> final_assignment = init_eval.clusters.assignment;
    std::vector<double> final_latents = std::move(init_eval.latents);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        EpochOutcome outcome = run_epoch(config, corpus, result.params_last, state, epoch, ctx);
        if (batch_log.is_open()) {
            for (size_t b = 0; b < outcome.batch_kinds.size(); ++b)
                batch_log << epoch << "," << b << "," << outcome.batch_kinds[b] << "\n";
        }
        if (outcome.report.accuracy > result.best_accuracy) {
            result.best_accuracy = outcome.report.accuracy;
            result.best_epoch = epoch;
            result.params_best = result.params_last;
        }
        if (!run_dir.empty() && config.export_epoch_embeddings) {
            char name[48];
            std::snprintf(name, sizeof(name), "embeddings_epoch_%03d.tsv", epoch);
            write_embeddings_tsv((fs::path(run_dir) / name).string(), corpus,
                                 outcome.clusters.assignment, outcome.latents,
                                 static_cast<size_t>(config.d_lat));
        }
        final_assignment = std::move(outcome.clusters.assignment);
        final_latents = std::move(outcome.latents);
        result.reports.push_back(outcome.report);
    }

    if (!run_dir.empty()) {
        write_metrics_csv((fs::path(run_dir) / "metrics.csv").string(), result.initial_accuracy,
                          result.reports);
        write_embeddings_tsv((fs::path(run_dir) / "embeddings.tsv").string(), corpus,
                             final_assignment, final_latents,
                             static_cast<size_t>(config.d_lat));
        save_checkpoint(result.params_last, config.seed,
                        (fs::path(run_dir) / "checkpoint_last.bin").string());
        save_checkpoint(result.params_best, config.seed,
                        (fs::path(run_dir) / "checkpoint_best.bin").string());
    }
    return result;
}

std::vector<SweepRow> sweep_tau(const TrainConfig& config, const Corpus& corpus,
                                TrainContext ctx, const std::vector<double>& taus,
                                const std::string& out_dir) {
    if (taus.empty()) throw std::invalid_argument("sweep_tau: empty tau list");
    for (double tau : taus)
        if (!(tau > 0.0)) throw std::invalid_argument("sweep_tau: tau must be > 0");
    if (!out_dir.empty()) fs::create_directories(out_dir);

    std::vector<SweepRow> rows;
    for (double tau : taus) {
        TrainConfig cfg = config;
        cfg.tau = tau;
        std::string run_dir;
        if (!out_dir.empty()) {
            char name[40];
            std::snprintf(name, sizeof(name), "tau_%g", tau);
            run_dir = (fs::path(out_dir) / name).string();
        }
        TrainResult result = train(cfg, corpus, ctx, run_dir);
        double best = result.initial_accuracy;
        for (const EpochReport& r : result.reports) best = std::max(best, r.accuracy);
        rows.push_back({tau, best});
    }

    if (!out_dir.empty()) {
        std::ofstream out(fs::path(out_dir) / "sweep.csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write sweep.csv in " + out_dir);
        out << "tau,accuracy\n";
        for (const SweepRow& row : rows)
            out << format_double(row.tau) << "," << format_double(row.accuracy) << "\n";
    }
    return rows;
}

}  // namespace doccl
