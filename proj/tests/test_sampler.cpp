#include "doccl/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "doccl/rng.hpp"
#include "doctest.h"
#include "support/synthetic.hpp"

using namespace doccl;

namespace {

// Balanced toy corpus: `classes` classes with `per_class` documents each.
Corpus toy_corpus(int classes, int per_class) {
    Corpus corpus;
    std::vector<std::vector<std::string>> lists;
    std::vector<std::string> names;
    for (int c = 0; c < classes; ++c) names.push_back("c" + std::to_string(c));
    corpus.set_class_names(names);
    for (int c = 0; c < classes; ++c)
        for (int d = 0; d < per_class; ++d)
            lists.push_back({"w" + std::to_string(c), "w" + std::to_string(c) + "x" +
                                                          std::to_string(d)});
    Vocabulary vocab = build_vocabulary(lists, 1, 10000);
    corpus.vocabulary() = vocab;
    for (int c = 0; c < classes; ++c) {
        for (int d = 0; d < per_class; ++d) {
            Document doc;
            doc.id = "c" + std::to_string(c) + "-d" + std::to_string(d);
            doc.label = c;
            size_t i = static_cast<size_t>(c) * per_class + d;
            doc.tokens = vectorize(lists[i], vocab);
            doc.text = lists[i][0] + " " + lists[i][1];
            corpus.documents().push_back(std::move(doc));
        }
    }
    return corpus;
}

}  // namespace

TEST_CASE("select_partial_subset") {
    Corpus corpus = toy_corpus(4, 10);
    SUBCASE("fraction 1 selects everything") {
        LabeledSubset s = select_partial_subset(corpus, 1.0, 1);
        CHECK(s.doc_indices.size() == corpus.size());
    }
    SUBCASE("balanced corpus, fraction 0.5 keeps 5 per class") {
        LabeledSubset s = select_partial_subset(corpus, 0.5, 1);
        CHECK(s.doc_indices.size() == 20);
        std::map<int, int> per_class;
        for (size_t idx : s.doc_indices) ++per_class[*corpus.documents()[idx].label];
        for (auto& [cls, count] : per_class) CHECK(count == 5);
    }
    SUBCASE("deterministic given seed") {
        LabeledSubset a = select_partial_subset(corpus, 0.5, 9);
        LabeledSubset b = select_partial_subset(corpus, 0.5, 9);
        CHECK(a.doc_indices == b.doc_indices);
        LabeledSubset c = select_partial_subset(corpus, 0.5, 10);
        CHECK(a.doc_indices != c.doc_indices);
    }
    SUBCASE("a class starved below 2 documents errors by name") {
        CHECK_THROWS_WITH_AS(select_partial_subset(corpus, 0.14, 1), doctest::Contains("c0"),
                             std::runtime_error);
    }
    SUBCASE("invalid fractions") {
        CHECK_THROWS_AS(select_partial_subset(corpus, 0.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(select_partial_subset(corpus, 1.5, 1), std::invalid_argument);
    }
    SUBCASE("stratified proportions on an unbalanced corpus") {
        Corpus uneven = toy_corpus(2, 10);
        // Add 30 more docs to class 1 (total 40) so fractions differ per class.
        for (int d = 0; d < 30; ++d) {
            Document doc;
            doc.id = "extra" + std::to_string(d);
            doc.label = 1;
            doc.tokens = {1};
            doc.text = "w1";
            uneven.documents().push_back(std::move(doc));
        }
        LabeledSubset s = select_partial_subset(uneven, 0.5, 3);
        std::map<int, int> per_class;
        for (size_t idx : s.doc_indices) ++per_class[*uneven.documents()[idx].label];
        CHECK(per_class[0] == 5);
        CHECK(per_class[1] == 20);
    }
}

TEST_CASE("a 14% subset of an 11314-style corpus stays stratified") {
    // 20 classes with the 20newsgroup-like size; labels only, no text needed.
    Corpus corpus;
    std::vector<std::string> names;
    for (int c = 0; c < 20; ++c) names.push_back("g" + std::to_string(c));
    corpus.set_class_names(names);
    size_t n = 0;
    for (int c = 0; c < 20; ++c) {
        size_t size = 540 + 7 * c;   // uneven classes, ~11.3k total
        for (size_t d = 0; d < size; ++d) {
            Document doc;
            doc.id = "d" + std::to_string(n++);
            doc.label = c;
            doc.tokens = {1};
            doc.text = "x";
            corpus.documents().push_back(std::move(doc));
        }
    }
    LabeledSubset subset = select_partial_subset(corpus, 0.14, 4);
    double expected = 0.14 * static_cast<double>(corpus.size());
    CHECK(std::llabs(static_cast<long long>(subset.doc_indices.size()) -
                     static_cast<long long>(expected)) <= 20);   // rounding, one per class
    std::map<int, int> per_class;
    for (size_t idx : subset.doc_indices) ++per_class[*corpus.documents()[idx].label];
    for (int c = 0; c < 20; ++c) {
        double class_expected = 0.14 * (540 + 7 * c);
        CHECK(std::abs(per_class[c] - class_expected) <= 1.0);
    }
}

TEST_CASE("sample_pcl_batch yields valid batches deterministically") {
    Corpus corpus = toy_corpus(4, 10);
    LabeledSubset subset = select_partial_subset(corpus, 1.0, 1);

    PclBatch batch = sample_pcl_batch(subset, corpus, 3, 5, 0);
    CHECK(batch.doc_indices.size() == 6);
    validate_pcl_batch(batch, corpus);

    PclBatch again = sample_pcl_batch(subset, corpus, 3, 5, 0);
    CHECK(batch.doc_indices == again.doc_indices);
    PclBatch other = sample_pcl_batch(subset, corpus, 3, 5, 1);
    CHECK(batch.doc_indices != other.doc_indices);

    CHECK_THROWS_AS(sample_pcl_batch(subset, corpus, 5, 5, 0), std::runtime_error);
}

TEST_CASE("a 20-pair batch holds 40 documents") {
    Corpus corpus = toy_corpus(20, 4);
    LabeledSubset subset = select_partial_subset(corpus, 1.0, 1);
    PclBatch batch = sample_pcl_batch(subset, corpus, 20, 7, 0);
    CHECK(batch.doc_indices.size() == 40);
    validate_pcl_batch(batch, corpus);
}

TEST_CASE("pcl epoch covers the subset without early repeats") {
    Corpus corpus = toy_corpus(4, 10);
    LabeledSubset subset = select_partial_subset(corpus, 1.0, 1);
    auto batches = pcl_epoch_batches(subset, corpus, 4, 11, 0);
    REQUIRE(!batches.empty());

    std::map<size_t, int> appearances;
    bool all_seen_before_third = true;
    for (const auto& batch : batches) {
        validate_pcl_batch(batch, corpus);
        for (size_t idx : batch.doc_indices) {
            int count = ++appearances[idx];
            if (count == 3 && appearances.size() < subset.doc_indices.size())
                all_seen_before_third = false;
        }
    }
    CHECK(all_seen_before_third);
    // The schedule consumes each class stream once: no repeats at all.
    for (auto& [idx, count] : appearances) CHECK(count == 1);
    // 10 docs per class / 2 per batch -> 5 batches over 4 classes.
    CHECK(batches.size() == 5);
    CHECK(appearances.size() == corpus.size());

    auto same = pcl_epoch_batches(subset, corpus, 4, 11, 0);
    REQUIRE(same.size() == batches.size());
    for (size_t b = 0; b < batches.size(); ++b)
        CHECK(same[b].doc_indices == batches[b].doc_indices);
    auto next_epoch = pcl_epoch_batches(subset, corpus, 4, 11, 1);
    CHECK(next_epoch[0].doc_indices != batches[0].doc_indices);
}

TEST_CASE("scl batches pair the two routes of one source and read no labels") {
    Corpus corpus = toy_corpus(3, 8);
    DeterministicParaphraser provider(3);
    AugmentCache cache;
    std::vector<AugmentationRoute> routes{{"es", "es"}, {"fr", "fr"}};

    corpus.reset_label_read_count();
    SclBatch batch = sample_scl_batch(corpus, 2, cache, provider, routes, 13, 0);
    CHECK(batch.items.size() == 4);
    validate_scl_batch(batch, corpus);
    CHECK(batch.items[0].source_index == batch.items[1].source_index);
    CHECK(batch.items[0].route_id == "es");
    CHECK(batch.items[1].route_id == "fr");

    SUBCASE("zero label reads across 100 batches") {
        corpus.reset_label_read_count();
        for (uint64_t b = 0; b < 100; ++b) {
            SclBatch sb = sample_scl_batch(corpus, 3, cache, provider, routes, 13, b);
            CHECK(sb.items.size() == 6);
        }
        CHECK(corpus.label_read_count() == 0);

        // Sanity: the PCL path does read labels through the counter.
        LabeledSubset subset = select_partial_subset(corpus, 1.0, 1);
        sample_pcl_batch(subset, corpus, 2, 1, 0);
        CHECK(corpus.label_read_count() > 0);
    }
    SUBCASE("same-class sources still form separate pairs") {
        // All sources from one class: batch structure is unchanged.
        Corpus single = toy_corpus(1, 6);
        single.reset_label_read_count();
        SclBatch sb = make_scl_batch(single, {0, 1}, cache, provider, routes);
        CHECK(sb.items.size() == 4);
        CHECK(sb.items[0].source_index != sb.items[2].source_index);
        CHECK(single.label_read_count() == 0);
    }
    SUBCASE("m below 2 or above corpus size is rejected") {
        CHECK_THROWS_AS(sample_scl_batch(corpus, 1, cache, provider, routes, 13, 0),
                        std::invalid_argument);
        CHECK_THROWS_AS(sample_scl_batch(corpus, 100, cache, provider, routes, 13, 0),
                        std::invalid_argument);
    }
}

TEST_CASE("scl epoch groups partition a shuffled corpus") {
    auto groups = scl_epoch_groups(23, 5, 3, 0);
    // 23 = 5+5+5+5+3; trailing group of 3 is kept, only singletons drop.
    CHECK(groups.size() == 5);
    std::set<size_t> seen;
    for (const auto& g : groups)
        for (size_t idx : g) CHECK(seen.insert(idx).second);
    CHECK(seen.size() == 23);

    auto groups21 = scl_epoch_groups(21, 5, 3, 0);
    CHECK(groups21.size() == 4);   // the lone 21st source cannot pair negatives
}

TEST_CASE("uda pairs come from the complement") {
    Corpus corpus = toy_corpus(4, 10);
    DeterministicParaphraser provider(3);
    AugmentCache cache;
    AugmentationRoute es{"es", "es"};

    LabeledSubset half = select_partial_subset(corpus, 0.5, 1);
    auto complement = subset_complement(corpus, half);
    CHECK(complement.size() == corpus.size() - half.doc_indices.size());

    auto pairs = sample_uda_pairs(corpus, complement, 5, cache, provider, es, 17, 0);
    CHECK(pairs.size() == 5);
    for (const auto& pair : pairs) {
        CHECK_FALSE(pair.tokens.empty());
        CHECK_FALSE(pair.tokens_aug.empty());
        CHECK(pair.route_id == "es");
    }
    auto again = sample_uda_pairs(corpus, complement, 5, cache, provider, es, 17, 0);
    for (size_t i = 0; i < pairs.size(); ++i) {
        CHECK(pairs[i].doc_id == again[i].doc_id);
        CHECK(pairs[i].tokens_aug == again[i].tokens_aug);
    }

    LabeledSubset all = select_partial_subset(corpus, 1.0, 1);
    auto empty_complement = subset_complement(corpus, all);
    CHECK_THROWS_AS(sample_uda_pairs(corpus, empty_complement, 5, cache, provider, es, 17, 0),
                    std::invalid_argument);
}

TEST_CASE("10k sampled batches satisfy the structural invariants") {
    Corpus corpus = testutil::synthetic_corpus({4, 25, 30, 10, 0.1, 6, 12, 4242});
    LabeledSubset subset = select_partial_subset(corpus, 1.0, 1);
    DeterministicParaphraser provider(3);
    AugmentCache cache;
    std::vector<AugmentationRoute> routes{{"es", "es"}, {"fr", "fr"}};

    for (uint64_t b = 0; b < 10000; ++b) {
        PclBatch batch = sample_pcl_batch(subset, corpus, 3, 1001, b);
        validate_pcl_batch(batch, corpus);
    }
    corpus.reset_label_read_count();
    for (uint64_t b = 0; b < 10000; ++b) {
        SclBatch batch = sample_scl_batch(corpus, 2, cache, provider, routes, 1002, b);
        validate_scl_batch(batch, corpus);
    }
    CHECK(corpus.label_read_count() == 0);
}
