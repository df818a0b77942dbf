#include "doccl/trainer.hpp"

#include <fstream>
#include <sstream>

#include "doccl/consistency.hpp"
#include "doccl/sampler.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"
#include "support/test_util.hpp"

using namespace doccl;
using testutil::TempDir;

namespace {

// Small-but-separable corpus so training epochs stay cheap.
Corpus small_corpus() {
    testutil::SyntheticSpec spec;
    spec.classes = 3;
    spec.docs_per_class = 20;
    spec.topic_vocab_per_class = 30;
    spec.noise_vocab = 15;
    spec.seed = 515;
    return testutil::synthetic_corpus(spec);
}

TrainConfig small_config() {
    TrainConfig config;
    config.method = Method::Pcl;
    config.fraction = 0.5;
    config.batch_pairs = 3;
    config.epochs = 3;
    config.d_emb = 16;
    config.d_hid = 24;
    config.d_lat = 8;
    config.seed = 77;
    return config;
}

bool reports_equal(const EpochReport& a, const EpochReport& b) {
    return a.epoch == b.epoch && a.mean_contrastive == b.mean_contrastive &&
           a.mean_uda == b.mean_uda && a.accuracy == b.accuracy &&
           a.contrastive_batches == b.contrastive_batches && a.uda_batches == b.uda_batches;
}

}  // namespace

TEST_CASE("config validation rejects contradictions before work") {
    TrainConfig config = small_config();
    config.method = Method::Scl;
    config.use_uda = true;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);

    TrainConfig bad_tau = small_config();
    bad_tau.tau = 0.0;
    CHECK_THROWS_AS(bad_tau.validate(), std::invalid_argument);

    TrainConfig bad_fraction = small_config();
    bad_fraction.fraction = 1.0001;
    CHECK_THROWS_AS(bad_fraction.validate(), std::invalid_argument);
}

TEST_CASE("pcl with fraction 1 and no uda has an empty residual branch") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.fraction = 1.0;
    config.epochs = 1;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TrainResult result = train(config, corpus, {cache, provider});
    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0].uda_batches == 0);
    CHECK(result.reports[0].mean_uda == 0.0);
    CHECK(result.reports[0].contrastive_batches > 0);
}

TEST_CASE("identical configs and seeds give bitwise-identical epochs") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.use_uda = true;
    DeterministicParaphraser provider(config.seed);

    AugmentCache cache_a;
    TrainResult a = train(config, corpus, {cache_a, provider});
    AugmentCache cache_b;
    TrainResult b = train(config, corpus, {cache_b, provider});
    REQUIRE(a.reports.size() == b.reports.size());
    CHECK(a.initial_accuracy == b.initial_accuracy);
    for (size_t e = 0; e < a.reports.size(); ++e) CHECK(reports_equal(a.reports[e], b.reports[e]));
    CHECK(a.params_last.E == b.params_last.E);
    CHECK(a.params_last.W2 == b.params_last.W2);
}

TEST_CASE("contrastive loss falls between epoch 1 and epoch 5") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.epochs = 5;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TrainResult result = train(config, corpus, {cache, provider});
    REQUIRE(result.reports.size() == 5);
    CHECK(result.reports[4].mean_contrastive < result.reports[0].mean_contrastive);
}

TEST_CASE("train with zero epochs returns init params and no reports") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.epochs = 0;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TrainResult result = train(config, corpus, {cache, provider});
    CHECK(result.reports.empty());
    EncoderDims dims{static_cast<int>(corpus.vocabulary().size()), config.d_emb, config.d_hid,
                     config.d_lat};
    EncoderParams init = init_params(config.seed, dims);
    CHECK(result.params_last.E == init.E);
    CHECK(result.params_last.W1 == init.W1);
    CHECK(result.best_epoch == 0);
}

TEST_CASE("reports length equals epochs and accuracy matches exports") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.epochs = 2;
    config.export_epoch_embeddings = true;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TempDir dir("doccl-run");
    TrainResult result = train(config, corpus, {cache, provider}, dir.path().string());
    REQUIRE(result.reports.size() == 2);

    for (int epoch = 1; epoch <= 2; ++epoch) {
        char name[48];
        std::snprintf(name, sizeof(name), "embeddings_epoch_%03d.tsv", epoch);
        std::ifstream in(dir.file(name));
        REQUIRE(in.good());
        std::string header;
        std::getline(in, header);
        CHECK(header == "doc_id\tlabel\tcluster\tx\ty");

        // Recompute accuracy from the exported (label, cluster) columns.
        std::vector<int> assignment;
        std::vector<std::optional<int>> labels;
        std::string line;
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            std::string doc_id, label, cluster, x, y;
            std::getline(ls, doc_id, '\t');
            std::getline(ls, label, '\t');
            std::getline(ls, cluster, '\t');
            std::getline(ls, x, '\t');
            std::getline(ls, y, '\t');
            labels.push_back(std::stoi(label));
            assignment.push_back(std::stoi(cluster));
        }
        REQUIRE(assignment.size() == corpus.size());
        double acc = clustering_accuracy(assignment, labels, corpus.class_count(),
                                         corpus.class_count());
        CHECK(acc == result.reports[epoch - 1].accuracy);
    }
}

TEST_CASE("uda batches form a strict suffix under the default schedule") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.use_uda = true;
    config.epochs = 1;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;

    EncoderDims dims{static_cast<int>(corpus.vocabulary().size()), config.d_emb, config.d_hid,
                     config.d_lat};
    EncoderParams params = init_params(config.seed, dims);
    AdamState state = AdamState::init(dims, {});
    EpochOutcome outcome = run_epoch(config, corpus, params, state, 1, {cache, provider});

    REQUIRE(!outcome.batch_kinds.empty());
    bool seen_uda = false;
    int uda_count = 0, contrastive_count = 0;
    for (const std::string& kind : outcome.batch_kinds) {
        if (kind == "uda") {
            seen_uda = true;
            ++uda_count;
        } else {
            CHECK_FALSE(seen_uda);   // no contrastive batch after the first uda
            ++contrastive_count;
        }
    }
    CHECK(seen_uda);
    CHECK(contrastive_count > 0);

    // One optimizer step per mini-batch.
    CHECK(state.step == static_cast<long long>(outcome.batch_kinds.size()));
    CHECK(outcome.report.contrastive_batches == contrastive_count);
    CHECK(outcome.report.uda_batches == uda_count);

    SUBCASE("interleaved schedule mixes the kinds") {
        TrainConfig inter = config;
        inter.schedule = Schedule::Interleaved;
        EncoderParams p2 = init_params(config.seed, dims);
        AdamState s2 = AdamState::init(dims, {});
        EpochOutcome mixed = run_epoch(inter, corpus, p2, s2, 1, {cache, provider});
        REQUIRE(mixed.batch_kinds.size() >= 2);
        CHECK(mixed.batch_kinds[0] == "contrastive");
        CHECK(mixed.batch_kinds[1] == "uda");
    }
}

TEST_CASE("scl training runs without labels and improves the loss") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.method = Method::Scl;
    config.batch_pairs = 4;
    config.epochs = 3;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TrainResult result = train(config, corpus, {cache, provider});
    REQUIRE(result.reports.size() == 3);
    CHECK(result.reports[0].uda_batches == 0);
    CHECK(result.reports[2].mean_contrastive < result.reports[0].mean_contrastive);
}

TEST_CASE("best checkpoint evaluation reproduces the recorded accuracy") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.epochs = 4;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;
    TempDir dir("doccl-best");
    TrainResult result = train(config, corpus, {cache, provider}, dir.path().string());

    auto [best_params, seed] = load_checkpoint(dir.file("checkpoint_best.bin"));
    CHECK(seed == config.seed);
    EvalResult eval = evaluate_params(best_params, corpus, seed);
    CHECK(eval.accuracy == result.best_accuracy);

    // metrics.csv rows: header + epoch 0 + one per epoch.
    std::ifstream in(dir.file("metrics.csv"));
    REQUIRE(in.good());
    int lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 2 + config.epochs);
}

TEST_CASE("sweep_tau runs one training per tau in input order") {
    Corpus corpus = small_corpus();
    TrainConfig config = small_config();
    config.epochs = 2;
    DeterministicParaphraser provider(config.seed);
    AugmentCache cache;

    TrainResult single = train(config, corpus, {cache, provider});
    double best = single.initial_accuracy;
    for (const auto& r : single.reports) best = std::max(best, r.accuracy);

    TempDir dir("doccl-sweep");
    auto rows = sweep_tau(config, corpus, {cache, provider}, {0.5}, dir.path().string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].tau == 0.5);
    CHECK(rows[0].accuracy == best);

    auto multi = sweep_tau(config, corpus, {cache, provider}, {2.0, 0.5, 0.1});
    REQUIRE(multi.size() == 3);
    CHECK(multi[0].tau == 2.0);
    CHECK(multi[1].tau == 0.5);
    CHECK(multi[2].tau == 0.1);
    CHECK(multi[1].accuracy == rows[0].accuracy);

    std::string sweep_csv = testutil::slurp(dir.file("sweep.csv"));
    CHECK(sweep_csv.rfind("tau,accuracy\n", 0) == 0);

    CHECK_THROWS_AS(sweep_tau(config, corpus, {cache, provider}, {}), std::invalid_argument);
}
