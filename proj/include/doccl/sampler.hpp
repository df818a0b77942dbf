#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doccl/augment.hpp"
#include "doccl/consistency.hpp"
#include "doccl/corpus.hpp"

namespace doccl {

// Document ids (as corpus indices) selected for contrastive training.
struct LabeledSubset {
    std::vector<size_t> doc_indices;   // distinct, ascending
    double fraction = 1.0;
};

// 2C documents in pair order: positions (2k, 2k+1) share a class and the C
// classes are pairwise distinct.
struct PclBatch {
    std::vector<size_t> doc_indices;
};

struct SclItem {
    size_t source_index;       // corpus index of the origin document
    std::string route_id;
    std::string text;          // back-translated text
    std::vector<int> tokens;
};

// 2m augmented texts in pair order; pair k is the two pivot-route back
// translations of one source document. Origin documents are not included.
struct SclBatch {
    std::vector<SclItem> items;
};

// Per-class stratified sample of ~fraction*N documents, deterministic
// given seed. Errors if any class would be left with fewer than 2
// documents in the subset.
LabeledSubset select_partial_subset(const Corpus& corpus, double fraction, uint64_t seed);

std::vector<size_t> subset_complement(const Corpus& corpus, const LabeledSubset& subset);

// Independent batch draw: c_batch classes without replacement, 2 documents
// per class without replacement, pair order randomized.
PclBatch sample_pcl_batch(const LabeledSubset& subset, const Corpus& corpus, int c_batch,
                          uint64_t seed, uint64_t batch_index);

// Epoch schedule: each class's subset documents are shuffled once per
// epoch and consumed sequentially, forming batches until fewer than two
// documents per class remain. No document repeats within an epoch.
std::vector<PclBatch> pcl_epoch_batches(const LabeledSubset& subset, const Corpus& corpus,
                                        int c_batch, uint64_t seed, uint64_t epoch);

// Independent SCL draw: m source documents without replacement, each
// yielding one (routes[0], routes[1]) back-translation pair. Never
// consults labels.
SclBatch sample_scl_batch(const Corpus& corpus, int m, AugmentCache& cache,
                          TranslationProvider& provider,
                          const std::vector<AugmentationRoute>& routes, uint64_t seed,
                          uint64_t batch_index);

// Epoch schedule for SCL: one shuffled pass over the whole corpus in
// groups of m source documents (a trailing group of one is dropped).
std::vector<std::vector<size_t>> scl_epoch_groups(size_t corpus_size, int m, uint64_t seed,
                                                  uint64_t epoch);
SclBatch make_scl_batch(const Corpus& corpus, const std::vector<size_t>& sources,
                        AugmentCache& cache, TranslationProvider& provider,
                        const std::vector<AugmentationRoute>& routes);

// UDA residual batches: documents outside the labeled subset, each paired
// with its back translation on one route.
std::vector<UdaPair> sample_uda_pairs(const Corpus& corpus,
                                      const std::vector<size_t>& complement, int m,
                                      AugmentCache& cache, TranslationProvider& provider,
                                      const AugmentationRoute& route, uint64_t seed,
                                      uint64_t batch_index);

std::vector<std::vector<size_t>> uda_epoch_groups(const std::vector<size_t>& complement, int m,
                                                  uint64_t seed, uint64_t epoch);
std::vector<UdaPair> make_uda_pairs(const Corpus& corpus, const std::vector<size_t>& sources,
                                    AugmentCache& cache, TranslationProvider& provider,
                                    const AugmentationRoute& route);

// Tokenizes augmented text against the corpus vocabulary (no stop-word
// pass: unseen words fall into the unknown bucket anyway).
std::vector<int> tokenize_augmented(const std::string& text, const Vocabulary& vocab);

// Throws unless the batch satisfies the PclBatch invariants.
void validate_pcl_batch(const PclBatch& batch, const Corpus& corpus);
void validate_scl_batch(const SclBatch& batch, const Corpus& corpus);

}  // namespace doccl
