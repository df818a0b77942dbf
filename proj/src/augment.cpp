#include "doccl/augment.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "doccl/rng.hpp"
#include "embedded_data.hpp"
#include "httplib.h"
#include "json.hpp"

namespace doccl {

using nlohmann::json;

SynonymTable SynonymTable::parse(const std::string& contents) {
    SynonymTable table;
    std::istringstream in(contents);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) continue;
        std::vector<std::string> alts;
        std::string alt;
        while (ls >> alt) alts.push_back(alt);
        if (!alts.empty()) table.add(token, std::move(alts));
    }
    return table;
}

SynonymTable SynonymTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("SynonymTable::load: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const SynonymTable& SynonymTable::default_table() {
    static const SynonymTable table = parse(kDefaultSynonymsText);
    return table;
}

const std::vector<std::string>* SynonymTable::alternatives(const std::string& token) const {
    auto it = table_.find(token);
    return it == table_.end() ? nullptr : &it->second;
}

void SynonymTable::add(const std::string& token, std::vector<std::string> alts) {
    table_[token] = std::move(alts);
}

std::string deterministic_paraphrase(const std::string& text, const std::string& route,
                                     uint64_t seed, const SynonymTable& table) {
    std::vector<std::string> tokens;
    {
        std::istringstream in(text);
        std::string t;
        while (in >> t) tokens.push_back(t);
    }
    if (tokens.empty()) throw std::invalid_argument("deterministic_paraphrase: empty input");

    Rng rng(derive_seed(seed, "paraphrase", fnv1a64(route), fnv1a64(text)));

    // 1. Synonym substitution.
    for (auto& token : tokens) {
        const std::vector<std::string>* alts = table.alternatives(token);
        if (alts && !alts->empty() && rng.bernoulli(0.3))
            token = (*alts)[rng.index(alts->size())];
    }

    // 2. Token dropout, skipped entirely if it would empty the text.
    std::vector<char> drop(tokens.size());
    size_t kept = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
        drop[i] = rng.bernoulli(0.1) ? 1 : 0;
        if (!drop[i]) ++kept;
    }
    if (kept > 0 && kept < tokens.size()) {
        std::vector<std::string> survivors;
        survivors.reserve(kept);
        for (size_t i = 0; i < tokens.size(); ++i)
            if (!drop[i]) survivors.push_back(std::move(tokens[i]));
        tokens = std::move(survivors);
    }

    // 3. One adjacent swap per 20 tokens.
    size_t swaps = tokens.size() / 20;
    for (size_t s = 0; s < swaps; ++s) {
        size_t i = rng.index(tokens.size() - 1);
        std::swap(tokens[i], tokens[i + 1]);
    }

    std::string out;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::string DeterministicParaphraser::translate(const std::string& text,
                                                const std::string& source_lang,
                                                const std::string& target_lang) {
    return deterministic_paraphrase(text, source_lang + "-" + target_lang, seed_, table_);
}

std::string RemoteTranslationProvider::translate(const std::string& text,
                                                 const std::string& source_lang,
                                                 const std::string& target_lang) {
    json req;
    req["q"] = text;
    req["source"] = source_lang;
    req["target"] = target_lang;
    const std::string body = req.dump();

    std::string last_error;
    int backoff = options_.backoff_ms;
    for (int attempt = 0; attempt < options_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client client(options_.base_url);
        client.set_connection_timeout(options_.timeout_sec);
        client.set_read_timeout(options_.timeout_sec);
        auto res = client.Post(options_.path, body, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            json rep = json::parse(res->body);
            std::string translated = rep.at("translatedText").get<std::string>();
            if (translated.empty()) {
                last_error = "empty translation";
                continue;
            }
            return translated;
        } catch (const std::exception& e) {
            last_error = std::string("bad response: ") + e.what();
        }
    }
    throw std::runtime_error("remote translation failed after " +
                             std::to_string(options_.retries) + " attempts: " + last_error);
}

std::string back_translate(TranslationProvider& provider, const std::string& text,
                           const AugmentationRoute& route) {
    try {
        std::string pivoted = provider.translate(text, "en", route.pivot);
        std::string restored = provider.translate(pivoted, route.pivot, "en");
        if (restored.empty())
            throw std::runtime_error("provider returned empty text");
        return restored;
    } catch (const std::exception& e) {
        throw std::runtime_error("back_translate failed on route '" + route.id + "': " + e.what());
    }
}

AugmentCache::AugmentCache(const std::string& path) : path_(path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) return;   // a missing file is an empty cache
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("AugmentCache: malformed line " + std::to_string(line_no) +
                                     " in " + path + ": " + e.what());
        }
        entries_[{rec.at("doc").get<std::string>(), rec.at("route").get<std::string>()}] =
            rec.at("text").get<std::string>();
    }
}

std::optional<std::string> AugmentCache::get(const std::string& doc_id,
                                             const std::string& route_id) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find({doc_id, route_id});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

bool AugmentCache::contains(const std::string& doc_id, const std::string& route_id) const {
    std::shared_lock lock(mutex_);
    return entries_.count({doc_id, route_id}) > 0;
}

size_t AugmentCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void AugmentCache::put(const std::string& doc_id, const std::string& route_id,
                       const std::string& text) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace({doc_id, route_id}, text);
    if (!inserted) return;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw std::runtime_error("AugmentCache: cannot append to " + path_);
    json rec;
    rec["doc"] = doc_id;
    rec["route"] = route_id;
    rec["text"] = text;
    out << rec.dump() << "\n";
    if (!out) throw std::runtime_error("AugmentCache: write failed: " + path_);
}

std::string cache_get_or_compute(AugmentCache& cache, const std::string& doc_id,
                                 const std::string& text, const AugmentationRoute& route,
                                 TranslationProvider& provider) {
    if (auto hit = cache.get(doc_id, route.id)) return *hit;
    std::string augmented;
    try {
        augmented = back_translate(provider, text, route);
    } catch (const std::exception& e) {
        throw std::runtime_error("augmentation failed for doc '" + doc_id + "': " + e.what());
    }
    cache.put(doc_id, route.id, augmented);
    return augmented;
}

CacheBuildReport build_cache(AugmentCache& cache, const std::vector<CacheBuildTask>& tasks,
                             TranslationProvider& provider, int max_in_flight) {
    CacheBuildReport report;
    std::vector<const CacheBuildTask*> pending;
    for (const auto& task : tasks) {
        if (cache.contains(task.doc_id, task.route.id))
            ++report.skipped;
        else
            pending.push_back(&task);
    }

    size_t chunk = static_cast<size_t>(std::max(1, max_in_flight));
    for (size_t start = 0; start < pending.size(); start += chunk) {
        size_t end = std::min(pending.size(), start + chunk);
        std::vector<std::string> results(end - start);
        std::vector<std::string> errors(end - start);
        std::vector<std::thread> workers;
        for (size_t i = start; i < end; ++i) {
            auto work = [&, i] {
                try {
                    results[i - start] = back_translate(provider, pending[i]->text, pending[i]->route);
                } catch (const std::exception& e) {
                    errors[i - start] = e.what();
                }
            };
            if (chunk == 1)
                work();
            else
                workers.emplace_back(work);
        }
        for (auto& w : workers) w.join();

        // Persist in task order regardless of completion order.
        for (size_t i = start; i < end; ++i) {
            const CacheBuildTask& task = *pending[i];
            if (!errors[i - start].empty()) {
                report.failures.emplace_back(task.doc_id + "/" + task.route.id, errors[i - start]);
                continue;
            }
            cache.put(task.doc_id, task.route.id, results[i - start]);
            ++report.computed;
        }
    }
    return report;
}

}  // namespace doccl
