#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace doccl {

// One text item. `tokens` are vocabulary indices; index 0 is the
// unknown-token bucket. `text` keeps the preprocessed token stream
// (space-joined) so augmentation never needs the raw source again.
struct Document {
    std::string id;
    std::string text;
    std::optional<int> label;   // class index in [0, C) when present
    std::vector<int> tokens;
};

class Vocabulary {
  public:
    Vocabulary();

    // index 0 is reserved for unknown; kept tokens occupy [1, size).
    int index_of(const std::string& token) const;
    size_t size() const { return index_to_token_.size(); }
    const std::string& token_at(size_t index) const { return index_to_token_.at(index); }

    void add(const std::string& token);

    int min_frequency = 1;
    int max_size = 30000;

  private:
    std::unordered_map<std::string, int> token_to_index_;
    std::vector<std::string> index_to_token_;
};

struct CorpusOptions {
    std::unordered_set<std::string> stopwords;
    int min_frequency = 1;
    int max_size = 30000;
    int max_tokens = 256;
};

enum class CorpusFormat { Jsonl, DirPerClass };

class Corpus {
  public:
    Corpus() = default;
    Corpus(const Corpus& other)
        : documents_(other.documents_),
          vocabulary_(other.vocabulary_),
          class_names_(other.class_names_),
          label_reads_(other.label_reads_.load()) {}
    Corpus(Corpus&& other) noexcept
        : documents_(std::move(other.documents_)),
          vocabulary_(std::move(other.vocabulary_)),
          class_names_(std::move(other.class_names_)),
          label_reads_(other.label_reads_.load()) {}
    Corpus& operator=(const Corpus& other) {
        documents_ = other.documents_;
        vocabulary_ = other.vocabulary_;
        class_names_ = other.class_names_;
        label_reads_ = other.label_reads_.load();
        return *this;
    }
    Corpus& operator=(Corpus&& other) noexcept {
        documents_ = std::move(other.documents_);
        vocabulary_ = std::move(other.vocabulary_);
        class_names_ = std::move(other.class_names_);
        label_reads_ = other.label_reads_.load();
        return *this;
    }

    const std::vector<Document>& documents() const { return documents_; }
    std::vector<Document>& documents() { return documents_; }
    const Vocabulary& vocabulary() const { return vocabulary_; }
    Vocabulary& vocabulary() { return vocabulary_; }

    size_t size() const { return documents_.size(); }
    int class_count() const { return static_cast<int>(class_names_.size()); }
    const std::vector<std::string>& class_names() const { return class_names_; }
    void set_class_names(std::vector<std::string> names) { class_names_ = std::move(names); }

    // Label access goes through here in all batch-sampling code so tests
    // can observe whether a sampler consulted labels at all.
    std::optional<int> label_of(size_t doc_index) const {
        ++label_reads_;
        return documents_.at(doc_index).label;
    }
    size_t label_read_count() const { return label_reads_.load(); }
    void reset_label_read_count() const { label_reads_ = 0; }

  private:
    std::vector<Document> documents_;
    Vocabulary vocabulary_;
    std::vector<std::string> class_names_;
    mutable std::atomic<size_t> label_reads_{0};
};

// Lowercase, strip non-alphanumerics, split on whitespace, drop stopwords,
// truncate to max_tokens. May return an empty sequence.
std::vector<std::string> preprocess(const std::string& text,
                                    const std::unordered_set<std::string>& stopwords,
                                    int max_tokens = 256);

// Frequency-filtered vocabulary, most frequent first (ties broken
// lexicographically), capped at max_size including the unknown slot.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int min_frequency, int max_size);

// Out-of-vocabulary tokens map to index 0.
std::vector<int> vectorize(const std::vector<std::string>& tokens, const Vocabulary& vocab);

Corpus load_corpus(const std::string& path, CorpusFormat format, const CorpusOptions& options);

// Self-contained prepared-corpus file (vocabulary + token sequences +
// labels), deterministic byte-for-byte for identical inputs.
void save_prepared(const Corpus& corpus, const std::string& path);
Corpus load_prepared(const std::string& path);

// Fingerprint of a file's bytes, as 16 hex digits.
std::string file_fingerprint(const std::string& path);

// One token per line, UTF-8. '#' lines and blanks ignored.
std::unordered_set<std::string> load_stopwords(const std::string& path);
std::unordered_set<std::string> parse_stopwords(const std::string& contents);

// The fixed English list shipped with the toolkit.
const std::unordered_set<std::string>& default_stopwords();

}  // namespace doccl
