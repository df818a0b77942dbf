#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "doccl/corpus.hpp"
#include "doccl/rng.hpp"

namespace testutil {

struct SyntheticSpec {
    int classes = 4;
    int docs_per_class = 100;
    int topic_vocab_per_class = 120;   // disjoint across classes
    int noise_vocab = 50;              // shared
    double noise_prob = 0.10;          // fraction of token draws from the noise pool
    int min_len = 6;
    int max_len = 14;
    uint64_t seed = 7777;
};

struct SyntheticRecord {
    std::string id;
    std::string text;
    std::string label;
};

// Topic-model toy corpus: each class draws from its own token pool with a
// shared noise pool mixed in.
inline std::vector<SyntheticRecord> synthetic_records(const SyntheticSpec& spec) {
    doccl::Rng rng(doccl::derive_seed(spec.seed, "synthetic-corpus"));
    std::vector<SyntheticRecord> records;
    for (int c = 0; c < spec.classes; ++c) {
        for (int d = 0; d < spec.docs_per_class; ++d) {
            int len = spec.min_len + static_cast<int>(rng.index(spec.max_len - spec.min_len + 1));
            std::string text;
            for (int t = 0; t < len; ++t) {
                if (!text.empty()) text.push_back(' ');
                if (rng.bernoulli(spec.noise_prob)) {
                    text += "noise" + std::to_string(rng.index(spec.noise_vocab));
                } else {
                    text += "topic" + std::to_string(c) + "w" +
                            std::to_string(rng.index(spec.topic_vocab_per_class));
                }
            }
            SyntheticRecord rec;
            rec.id = "doc" + std::to_string(c * spec.docs_per_class + d);
            rec.text = text;
            rec.label = "class" + std::to_string(c);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

inline std::string synthetic_jsonl(const SyntheticSpec& spec) {
    std::string out;
    for (const auto& rec : synthetic_records(spec)) {
        out += "{\"id\":\"" + rec.id + "\",\"text\":\"" + rec.text + "\",\"label\":\"" +
               rec.label + "\"}\n";
    }
    return out;
}

// Builds a Corpus in memory through the public preprocessing pipeline.
inline doccl::Corpus synthetic_corpus(const SyntheticSpec& spec = {}) {
    auto records = synthetic_records(spec);
    std::vector<std::vector<std::string>> token_lists;
    for (const auto& rec : records)
        token_lists.push_back(doccl::preprocess(rec.text, {}, 256));
    doccl::Vocabulary vocab = doccl::build_vocabulary(token_lists, 1, 30000);

    doccl::Corpus corpus;
    corpus.vocabulary() = vocab;
    std::vector<std::string> class_names;
    for (int c = 0; c < spec.classes; ++c) class_names.push_back("class" + std::to_string(c));
    corpus.set_class_names(class_names);
    for (size_t i = 0; i < records.size(); ++i) {
        doccl::Document doc;
        doc.id = records[i].id;
        doc.text = records[i].text;
        doc.label = static_cast<int>(i) / spec.docs_per_class;
        doc.tokens = doccl::vectorize(token_lists[i], vocab);
        corpus.documents().push_back(std::move(doc));
    }
    return corpus;
}

}  // namespace testutil
