#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace doccl {

struct AugmentationRoute {
    std::string id;       // unique within a run, e.g. "es"
    std::string pivot;    // pivot-language tag
};

// token -> alternatives, one record per line in the shipped data file.
class SynonymTable {
  public:
    static SynonymTable parse(const std::string& contents);
    static SynonymTable load(const std::string& path);
    static const SynonymTable& default_table();

    const std::vector<std::string>* alternatives(const std::string& token) const;
    size_t size() const { return table_.size(); }
    void add(const std::string& token, std::vector<std::string> alts);

  private:
    std::unordered_map<std::string, std::vector<std::string>> table_;
};

// Behavioral contract for translation backends. translate() either returns
// a nonempty string or throws.
class TranslationProvider {
  public:
    virtual ~TranslationProvider() = default;
    virtual std::string translate(const std::string& text, const std::string& source_lang,
                                  const std::string& target_lang) = 0;
};

// Offline stand-in for neural back translation: seeded synonym
// substitution (p = 0.3), token dropout (p = 0.1, skipped if it would
// empty the text) and one adjacent swap per 20 tokens. A pure function of
// (text, route, seed).
std::string deterministic_paraphrase(const std::string& text, const std::string& route,
                                     uint64_t seed, const SynonymTable& table);

class DeterministicParaphraser : public TranslationProvider {
  public:
    explicit DeterministicParaphraser(uint64_t seed,
                                      SynonymTable table = SynonymTable::default_table())
        : seed_(seed), table_(std::move(table)) {}
    std::string translate(const std::string& text, const std::string& source_lang,
                          const std::string& target_lang) override;

  private:
    uint64_t seed_;
    SynonymTable table_;
};

struct RemoteProviderOptions {
    std::string base_url;          // e.g. "http://localhost:8089"
    std::string path = "/translate";
    int retries = 3;               // attempts, not extra tries
    int backoff_ms = 500;          // doubles per retry
    int max_in_flight = 4;
    int timeout_sec = 10;
};

// JSON-over-HTTP client: request {"q","source","target"}, response
// {"translatedText": ...}. Retries with exponential backoff.
class RemoteTranslationProvider : public TranslationProvider {
  public:
    explicit RemoteTranslationProvider(RemoteProviderOptions options)
        : options_(std::move(options)) {}
    std::string translate(const std::string& text, const std::string& source_lang,
                          const std::string& target_lang) override;
    const RemoteProviderOptions& options() const { return options_; }

  private:
    RemoteProviderOptions options_;
};

// translate(text, en -> pivot) then back. Throws (carrying the route) on
// provider failure or empty output.
std::string back_translate(TranslationProvider& provider, const std::string& text,
                           const AugmentationRoute& route);

// Persistent (doc id, route id) -> augmented text map backed by an
// append-friendly JSONL file. Concurrent reads, serialized writes.
class AugmentCache {
  public:
    AugmentCache() = default;                       // memory-only
    // Loads existing entries; an empty path means memory-only.
    explicit AugmentCache(const std::string& path);

    std::optional<std::string> get(const std::string& doc_id, const std::string& route_id) const;
    void put(const std::string& doc_id, const std::string& route_id, const std::string& text);
    bool contains(const std::string& doc_id, const std::string& route_id) const;
    size_t size() const;
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::map<std::pair<std::string, std::string>, std::string> entries_;
    mutable std::shared_mutex mutex_;
};

// Returns the cached augmentation or computes, stores and persists it.
// Provider errors propagate without poisoning the cache.
std::string cache_get_or_compute(AugmentCache& cache, const std::string& doc_id,
                                 const std::string& text, const AugmentationRoute& route,
                                 TranslationProvider& provider);

struct CacheBuildReport {
    size_t computed = 0;
    size_t skipped = 0;
    std::vector<std::pair<std::string, std::string>> failures;   // (key, error)
};

struct CacheBuildTask {
    std::string doc_id;
    std::string text;
    AugmentationRoute route;
};

// Fills the cache for every task not already present. Tasks run with at
// most `max_in_flight` concurrent provider calls; results are persisted in
// task order so a deterministic provider yields a bitwise-reproducible
// cache file.
CacheBuildReport build_cache(AugmentCache& cache, const std::vector<CacheBuildTask>& tasks,
                             TranslationProvider& provider, int max_in_flight = 1);

}  // namespace doccl
