#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doccl/augment.hpp"
#include "doccl/cluster.hpp"
#include "doccl/contrastive.hpp"
#include "doccl/corpus.hpp"
#include "doccl/encoder.hpp"

namespace doccl {

enum class Method { Cl, Pcl, Scl };
enum class Schedule { PrefixSuffix, Interleaved };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

struct TrainConfig {
    Method method = Method::Pcl;
    bool use_uda = false;
    double tau = 0.5;
    int batch_pairs = 20;        // C for pcl/cl, m for scl and uda batches
    int epochs = 30;
    double lr = 3e-4;            // 1e-3 destabilizes the consistency phase
    double fraction = 0.14;      // labeled-subset fraction rho
    SimilarityKind similarity = SimilarityKind::Cosine;
    uint64_t seed = 42;
    int d_emb = 64;
    int d_hid = 128;
    int d_lat = 20;
    Schedule schedule = Schedule::PrefixSuffix;
    bool freeze_uda_target = true;
    std::vector<std::string> scl_routes = {"es", "fr"};
    std::string uda_route = "es";
    bool export_epoch_embeddings = false;

    // Throws on contradictions (e.g. scl + use_uda) before any work.
    void validate() const;
};

struct EpochReport {
    int epoch = 0;
    double mean_contrastive = 0.0;
    double mean_uda = 0.0;
    double accuracy = 0.0;
    double wall_seconds = 0.0;
    int contrastive_batches = 0;
    int uda_batches = 0;
};

struct EpochOutcome {
    EpochReport report;
    std::vector<std::string> batch_kinds;        // "contrastive" / "uda", in step order
    ClusterAssignment clusters;
    std::vector<double> latents;                 // N x d_lat, row-major
};

struct TrainContext {
    AugmentCache& cache;
    TranslationProvider& provider;
};

// End-of-epoch evaluation: encode every document, cluster with K = class
// count, score with optimally matched accuracy.
struct EvalResult {
    double accuracy = 0.0;
    ClusterAssignment clusters;
    std::vector<double> latents;
};
EvalResult evaluate_params(const EncoderParams& params, const Corpus& corpus, uint64_t seed);

// One epoch: contrastive mini-batches over the labeled subset first, then
// (with UDA) residual mini-batches over its complement; one optimizer step
// per mini-batch; clustering only after the last batch.
EpochOutcome run_epoch(const TrainConfig& config, const Corpus& corpus, EncoderParams& params,
                       AdamState& state, int epoch_index, TrainContext ctx);

struct TrainResult {
    std::vector<EpochReport> reports;            // one per training epoch
    double initial_accuracy = 0.0;               // epoch-0 evaluation at init
    EncoderParams params_last;
    EncoderParams params_best;
    int best_epoch = 0;                          // 0 = initialization
    double best_accuracy = 0.0;
};

// Sequential epochs with best-accuracy checkpoint retention. When run_dir
// is nonempty writes metrics.csv, embeddings.tsv, batch_kinds.log and the
// two checkpoints there.
TrainResult train(const TrainConfig& config, const Corpus& corpus, TrainContext ctx,
                  const std::string& run_dir = "");

struct SweepRow {
    double tau = 0.0;
    double accuracy = 0.0;
};

// Independent train() per tau with the same seed; rows in input order.
// When out_dir is nonempty writes sweep.csv plus one run directory per tau.
std::vector<SweepRow> sweep_tau(const TrainConfig& config, const Corpus& corpus,
                                TrainContext ctx, const std::vector<double>& taus,
                                const std::string& out_dir = "");

// Shared writers for the run-directory artifacts.
void write_metrics_csv(const std::string& path, double initial_accuracy,
                       const std::vector<EpochReport>& reports);
void write_embeddings_tsv(const std::string& path, const Corpus& corpus,
                          const std::vector<int>& assignment, const std::vector<double>& latents,
                          size_t d_lat);
std::string format_double(double value);

}  // namespace doccl
