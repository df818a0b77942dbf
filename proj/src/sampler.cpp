#include "doccl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "doccl/rng.hpp"

namespace doccl {

namespace {

// Subset documents grouped by class, class index order. Uses the counted
// label accessor; the SCL path below must never call it.
std::vector<std::vector<size_t>> group_by_class(const Corpus& corpus,
                                                const std::vector<size_t>& doc_indices) {
    std::vector<std::vector<size_t>> groups(corpus.class_count());
    for (size_t idx : doc_indices) {
        auto label = corpus.label_of(idx);
        if (!label) continue;
        groups.at(*label).push_back(idx);
    }
    return groups;
}

}  // namespace

LabeledSubset select_partial_subset(const Corpus& corpus, double fraction, uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("select_partial_subset: fraction must be in (0, 1]");
    if (corpus.class_count() == 0)
        throw std::runtime_error("select_partial_subset: corpus has no labeled documents");

    std::vector<size_t> all(corpus.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto groups = group_by_class(corpus, all);

    LabeledSubset subset;
    subset.fraction = fraction;
    for (int c = 0; c < corpus.class_count(); ++c) {
        auto& docs = groups[c];
        size_t take = fraction == 1.0
                          ? docs.size()
                          : static_cast<size_t>(std::llround(fraction * static_cast<double>(docs.size())));
        take = std::min(take, docs.size());
        if (take < 2)
            throw std::runtime_error("select_partial_subset: class '" + corpus.class_names()[c] +
                                     "' would keep fewer than 2 documents");
        Rng rng(derive_seed(seed, "subset", static_cast<uint64_t>(c)));
        rng.shuffle(docs);
        subset.doc_indices.insert(subset.doc_indices.end(), docs.begin(), docs.begin() + take);
    }
    std::sort(subset.doc_indices.begin(), subset.doc_indices.end());
    return subset;
}

std::vector<size_t> subset_complement(const Corpus& corpus, const LabeledSubset& subset) {
    std::vector<char> in_subset(corpus.size(), 0);
    for (size_t idx : subset.doc_indices) in_subset.at(idx) = 1;
    std::vector<size_t> complement;
    for (size_t i = 0; i < corpus.size(); ++i)
        if (!in_subset[i]) complement.push_back(i);
    return complement;
}

PclBatch sample_pcl_batch(const LabeledSubset& subset, const Corpus& corpus, int c_batch,
                          uint64_t seed, uint64_t batch_index) {
    if (c_batch < 2) throw std::invalid_argument("sample_pcl_batch: c_batch must be >= 2");
    auto groups = group_by_class(corpus, subset.doc_indices);
    std::vector<int> eligible;
    for (int c = 0; c < static_cast<int>(groups.size()); ++c)
        if (groups[c].size() >= 2) eligible.push_back(c);
    if (static_cast<int>(eligible.size()) < c_batch)
        throw std::runtime_error("sample_pcl_batch: need " + std::to_string(c_batch) +
                                 " classes with >= 2 documents, have " +
                                 std::to_string(eligible.size()));

    Rng rng(derive_seed(seed, "pcl-batch", batch_index));
    std::vector<size_t> picked_classes = rng.sample_indices(eligible.size(), c_batch);

    std::vector<std::pair<size_t, size_t>> pairs;
    pairs.reserve(c_batch);
    for (size_t pc : picked_classes) {
        const auto& docs = groups[eligible[pc]];
        std::vector<size_t> two = rng.sample_indices(docs.size(), 2);
        pairs.emplace_back(docs[two[0]], docs[two[1]]);
    }
    rng.shuffle(pairs);

    PclBatch batch;
    for (const auto& [a, b] : pairs) {
        batch.doc_indices.push_back(a);
        batch.doc_indices.push_back(b);
    }
    return batch;
}

std::vector<PclBatch> pcl_epoch_batches(const LabeledSubset& subset, const Corpus& corpus,
                                        int c_batch, uint64_t seed, uint64_t epoch) {
    if (c_batch < 2) throw std::invalid_argument("pcl_epoch_batches: c_batch must be >= 2");
    auto groups = group_by_class(corpus, subset.doc_indices);
    std::vector<int> classes;
    for (int c = 0; c < static_cast<int>(groups.size()); ++c)
        if (groups[c].size() >= 2) classes.push_back(c);
    if (static_cast<int>(classes.size()) < c_batch)
        throw std::runtime_error("pcl_epoch_batches: need " + std::to_string(c_batch) +
                                 " classes with >= 2 documents, have " +
                                 std::to_string(classes.size()));

    for (int c : classes) {
        Rng rng(derive_seed(seed, "pcl-epoch", epoch, static_cast<uint64_t>(c)));
        rng.shuffle(groups[c]);
    }
    std::vector<size_t> cursor(groups.size(), 0);

    std::vector<PclBatch> batches;
    Rng order_rng(derive_seed(seed, "pcl-epoch-order", epoch));
    for (;;) {
        // Classes with at least one full pair left, preferring those with
        // the most remaining documents so coverage stays even.
        std::vector<int> ready;
        for (int c : classes)
            if (groups[c].size() - cursor[c] >= 2) ready.push_back(c);
        if (static_cast<int>(ready.size()) < c_batch) break;
        std::stable_sort(ready.begin(), ready.end(), [&](int a, int b) {
            return groups[a].size() - cursor[a] > groups[b].size() - cursor[b];
        });
        ready.resize(c_batch);

        std::vector<std::pair<size_t, size_t>> pairs;
        for (int c : ready) {
            pairs.emplace_back(groups[c][cursor[c]], groups[c][cursor[c] + 1]);
            cursor[c] += 2;
        }
        order_rng.shuffle(pairs);

        PclBatch batch;
        for (const auto& [a, b] : pairs) {
            batch.doc_indices.push_back(a);
            batch.doc_indices.push_back(b);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

std::vector<int> tokenize_augmented(const std::string& text, const Vocabulary& vocab) {
    static const std::unordered_set<std::string> no_stopwords;
    return vectorize(preprocess(text, no_stopwords), vocab);
}

SclBatch make_scl_batch(const Corpus& corpus, const std::vector<size_t>& sources,
                        AugmentCache& cache, TranslationProvider& provider,
                        const std::vector<AugmentationRoute>& routes) {
    if (routes.size() != 2 || routes[0].id == routes[1].id)
        throw std::invalid_argument("SCL requires exactly two distinct augmentation routes");
    SclBatch batch;
    for (size_t idx : sources) {
        const Document& doc = corpus.documents().at(idx);
        for (const AugmentationRoute& route : routes) {
            SclItem item;
            item.source_index = idx;
            item.route_id = route.id;
            item.text = cache_get_or_compute(cache, doc.id, doc.text, route, provider);
            item.tokens = tokenize_augmented(item.text, corpus.vocabulary());
            if (item.tokens.empty())
                throw std::runtime_error("SCL augmentation produced no tokens for doc '" +
                                         doc.id + "'");
            batch.items.push_back(std::move(item));
        }
    }
    return batch;
}

SclBatch sample_scl_batch(const Corpus& corpus, int m, AugmentCache& cache,
                          TranslationProvider& provider,
                          const std::vector<AugmentationRoute>& routes, uint64_t seed,
                          uint64_t batch_index) {
    if (m < 2) throw std::invalid_argument("sample_scl_batch: m must be >= 2");
    if (static_cast<size_t>(m) > corpus.size())
        throw std::invalid_argument("sample_scl_batch: m exceeds corpus size");
    Rng rng(derive_seed(seed, "scl-batch", batch_index));
    std::vector<size_t> sources = rng.sample_indices(corpus.size(), m);
    return make_scl_batch(corpus, sources, cache, provider, routes);
}

std::vector<std::vector<size_t>> scl_epoch_groups(size_t corpus_size, int m, uint64_t seed,
                                                  uint64_t epoch) {
    if (m < 2) throw std::invalid_argument("scl_epoch_groups: m must be >= 2");
    std::vector<size_t> perm(corpus_size);
    for (size_t i = 0; i < corpus_size; ++i) perm[i] = i;
    Rng rng(derive_seed(seed, "scl-epoch", epoch));
    rng.shuffle(perm);

    std::vector<std::vector<size_t>> groups;
    for (size_t start = 0; start < perm.size(); start += m) {
        size_t end = std::min(perm.size(), start + m);
        if (end - start < 2) break;   // a single source cannot form negatives
        groups.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return groups;
}

std::vector<UdaPair> make_uda_pairs(const Corpus& corpus, const std::vector<size_t>& sources,
                                    AugmentCache& cache, TranslationProvider& provider,
                                    const AugmentationRoute& route) {
    std::vector<UdaPair> pairs;
    pairs.reserve(sources.size());
    for (size_t idx : sources) {
        const Document& doc = corpus.documents().at(idx);
        UdaPair pair;
        pair.doc_id = doc.id;
        pair.tokens = doc.tokens;
        std::string aug = cache_get_or_compute(cache, doc.id, doc.text, route, provider);
        pair.tokens_aug = tokenize_augmented(aug, corpus.vocabulary());
        if (pair.tokens_aug.empty())
            throw std::runtime_error("UDA augmentation produced no tokens for doc '" + doc.id + "'");
        pair.route_id = route.id;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

std::vector<UdaPair> sample_uda_pairs(const Corpus& corpus,
                                      const std::vector<size_t>& complement, int m,
                                      AugmentCache& cache, TranslationProvider& provider,
                                      const AugmentationRoute& route, uint64_t seed,
                                      uint64_t batch_index) {
    if (complement.empty())
        throw std::invalid_argument("sample_uda_pairs: empty complement (subset covers corpus)");
    if (m < 1) throw std::invalid_argument("sample_uda_pairs: m must be >= 1");
    size_t take = std::min(static_cast<size_t>(m), complement.size());
    Rng rng(derive_seed(seed, "uda-batch", batch_index));
    std::vector<size_t> picks = rng.sample_indices(complement.size(), take);
    std::vector<size_t> sources;
    sources.reserve(take);
    for (size_t p : picks) sources.push_back(complement[p]);
    return make_uda_pairs(corpus, sources, cache, provider, route);
}

std::vector<std::vector<size_t>> uda_epoch_groups(const std::vector<size_t>& complement, int m,
                                                  uint64_t seed, uint64_t epoch) {
    if (m < 1) throw std::invalid_argument("uda_epoch_groups: m must be >= 1");
    std::vector<size_t> perm = complement;
    Rng rng(derive_seed(seed, "uda-epoch", epoch));
    rng.shuffle(perm);
    std::vector<std::vector<size_t>> groups;
    for (size_t start = 0; start < perm.size(); start += m) {
        size_t end = std::min(perm.size(), start + m);
        groups.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return groups;
}

void validate_pcl_batch(const PclBatch& batch, const Corpus& corpus) {
    if (batch.doc_indices.size() < 4 || batch.doc_indices.size() % 2 != 0)
        throw std::runtime_error("PclBatch: length must be even and >= 4");
    std::set<size_t> distinct(batch.doc_indices.begin(), batch.doc_indices.end());
    if (distinct.size() != batch.doc_indices.size())
        throw std::runtime_error("PclBatch: duplicate document");
    std::set<int> seen_labels;
    for (size_t k = 0; k < batch.doc_indices.size(); k += 2) {
        auto la = corpus.label_of(batch.doc_indices[k]);
        auto lb = corpus.label_of(batch.doc_indices[k + 1]);
        if (!la || !lb) throw std::runtime_error("PclBatch: unlabeled document");
        if (*la != *lb) throw std::runtime_error("PclBatch: pair labels differ");
        if (!seen_labels.insert(*la).second)
            throw std::runtime_error("PclBatch: class appears in two pairs");
    }
}

void validate_scl_batch(const SclBatch& batch, const Corpus& corpus) {
    if (batch.items.size() < 4 || batch.items.size() % 2 != 0)
        throw std::runtime_error("SclBatch: length must be even and >= 4");
    std::set<size_t> sources;
    for (size_t k = 0; k < batch.items.size(); k += 2) {
        const SclItem& a = batch.items[k];
        const SclItem& b = batch.items[k + 1];
        if (a.source_index != b.source_index)
            throw std::runtime_error("SclBatch: pair spans two source documents");
        if (a.route_id == b.route_id)
            throw std::runtime_error("SclBatch: pair uses one route twice");
        if (!sources.insert(a.source_index).second)
            throw std::runtime_error("SclBatch: source document appears twice");
        // Every element must be an augmentation, never an origin slot.
        if (a.route_id.empty() || b.route_id.empty())
            throw std::runtime_error("SclBatch: element without augmentation provenance");
        if (a.source_index >= corpus.size())
            throw std::runtime_error("SclBatch: source index out of range");
    }
}

}  // namespace doccl
