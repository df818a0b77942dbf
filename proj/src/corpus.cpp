#include "doccl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "doccl/rng.hpp"
#include "embedded_data.hpp"
#include "json.hpp"

namespace doccl {

namespace fs = std::filesystem;
using nlohmann::json;

Vocabulary::Vocabulary() {
    index_to_token_.push_back("<unk>");
    token_to_index_["<unk>"] = 0;
}

int Vocabulary::index_of(const std::string& token) const {
    auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? 0 : it->second;
}

void Vocabulary::add(const std::string& token) {
    if (token_to_index_.count(token)) return;
    token_to_index_[token] = static_cast<int>(index_to_token_.size());
    index_to_token_.push_back(token);
}

std::vector<std::string> preprocess(const std::string& text,
                                    const std::unordered_set<std::string>& stopwords,
                                    int max_tokens) {
    std::vector<std::string> out;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            if (!stopwords.count(current) && static_cast<int>(out.size()) < max_tokens)
                out.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& token_lists,
                            int min_frequency, int max_size) {
    if (min_frequency < 1) throw std::invalid_argument("build_vocabulary: min_frequency must be >= 1");
    if (max_size < 1) throw std::invalid_argument("build_vocabulary: max_size must be >= 1");

    std::unordered_map<std::string, long long> counts;
    for (const auto& tokens : token_lists)
        for (const auto& t : tokens) ++counts[t];

    std::vector<std::pair<std::string, long long>> kept;
    kept.reserve(counts.size());
    for (auto& [token, n] : counts)
        if (n >= min_frequency) kept.emplace_back(token, n);

    // Most frequent first; lexicographic tie-break keeps the build
    // independent of hash-map iteration order.
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary vocab;
    vocab.min_frequency = min_frequency;
    vocab.max_size = max_size;
    for (const auto& [token, n] : kept) {
        if (static_cast<int>(vocab.size()) >= max_size) break;
        vocab.add(token);
    }
    return vocab;
}

std::vector<int> vectorize(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(vocab.index_of(t));
    return out;
}

namespace {

std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string s;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) s.push_back(' ');
        s += tokens[i];
    }
    return s;
}

struct RawDoc {
    std::string id;
    std::string label;   // empty string = unlabeled
    bool has_label = false;
    std::vector<std::string> tokens;
};

std::vector<RawDoc> read_jsonl(const std::string& path, const CorpusOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_corpus: cannot open " + path);

    std::vector<RawDoc> docs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("load_corpus: malformed JSON at " + path + ":" +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string())
            throw std::runtime_error("load_corpus: record missing \"id\" at " + path + ":" +
                                     std::to_string(line_no));
        if (!rec.contains("text") || !rec["text"].is_string())
            throw std::runtime_error("load_corpus: record missing \"text\" at " + path + ":" +
                                     std::to_string(line_no));
        RawDoc d;
        d.id = rec["id"].get<std::string>();
        if (rec.contains("label")) {
            if (!rec["label"].is_string())
                throw std::runtime_error("load_corpus: non-string \"label\" at " + path + ":" +
                                         std::to_string(line_no));
            d.label = rec["label"].get<std::string>();
            d.has_label = true;
        }
        d.tokens = preprocess(rec["text"].get<std::string>(), options.stopwords, options.max_tokens);
        docs.push_back(std::move(d));
    }
    return docs;
}

std::vector<RawDoc> read_dir_per_class(const std::string& path, const CorpusOptions& options) {
    if (!fs::is_directory(path))
        throw std::runtime_error("load_corpus: not a directory: " + path);

    std::vector<std::string> classes;
    for (const auto& entry : fs::directory_iterator(path))
        if (entry.is_directory()) classes.push_back(entry.path().filename().string());
    std::sort(classes.begin(), classes.end());

    std::vector<RawDoc> docs;
    for (const auto& cls : classes) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(fs::path(path) / cls))
            if (entry.is_regular_file()) files.push_back(entry.path().filename().string());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::ifstream in(fs::path(path) / cls / f);
            if (!in) throw std::runtime_error("load_corpus: cannot open " + (fs::path(path) / cls / f).string());
            std::ostringstream ss;
            ss << in.rdbuf();
            RawDoc d;
            d.id = cls + "/" + f;
            d.label = cls;
            d.has_label = true;
            d.tokens = preprocess(ss.str(), options.stopwords, options.max_tokens);
            docs.push_back(std::move(d));
        }
    }
    return docs;
}

}  // namespace

Corpus load_corpus(const std::string& path, CorpusFormat format, const CorpusOptions& options) {
    std::vector<RawDoc> raw = format == CorpusFormat::Jsonl ? read_jsonl(path, options)
                                                            : read_dir_per_class(path, options);

    std::vector<RawDoc> admitted;
    for (auto& d : raw) {
        if (d.tokens.empty()) {
            std::cerr << "warning: dropping document '" << d.id << "': empty after preprocessing\n";
            continue;
        }
        admitted.push_back(std::move(d));
    }
    if (admitted.empty()) throw std::runtime_error("load_corpus: empty corpus: " + path);

    // Label strings map to [0, C) in lexicographic order.
    std::map<std::string, int> label_index;
    for (const auto& d : admitted)
        if (d.has_label) label_index.emplace(d.label, 0);
    {
        int next = 0;
        for (auto& [name, idx] : label_index) idx = next++;
    }

    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(admitted.size());
    for (const auto& d : admitted) token_lists.push_back(d.tokens);
    Vocabulary vocab = build_vocabulary(token_lists, options.min_frequency, options.max_size);

    Corpus corpus;
    corpus.vocabulary() = vocab;
    std::vector<std::string> class_names;
    for (const auto& [name, idx] : label_index) class_names.push_back(name);
    corpus.set_class_names(std::move(class_names));

    for (auto& d : admitted) {
        Document doc;
        doc.id = std::move(d.id);
        doc.text = join_tokens(d.tokens);
        if (d.has_label) doc.label = label_index.at(d.label);
        doc.tokens = vectorize(d.tokens, vocab);
        corpus.documents().push_back(std::move(doc));
    }
    return corpus;
}

void save_prepared(const Corpus& corpus, const std::string& path) {
    json j;
    j["format"] = "doccl-prepared";
    j["version"] = 1;
    j["min_frequency"] = corpus.vocabulary().min_frequency;
    j["max_size"] = corpus.vocabulary().max_size;
    j["class_names"] = corpus.class_names();

    std::vector<std::string> vocab_tokens;
    for (size_t i = 1; i < corpus.vocabulary().size(); ++i)
        vocab_tokens.push_back(corpus.vocabulary().token_at(i));
    j["vocabulary"] = vocab_tokens;

    json docs = json::array();
    for (const auto& d : corpus.documents()) {
        json rec;
        rec["id"] = d.id;
        rec["text"] = d.text;
        rec["label"] = d.label ? *d.label : -1;
        rec["tokens"] = d.tokens;
        docs.push_back(std::move(rec));
    }
    j["documents"] = std::move(docs);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_prepared: cannot write " + path);
    out << j.dump() << "\n";
    if (!out) throw std::runtime_error("save_prepared: write failed: " + path);
}

Corpus load_prepared(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_prepared: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_prepared: malformed file " + path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "doccl-prepared")
        throw std::runtime_error("load_prepared: not a prepared corpus: " + path);
    if (j.value("version", 0) != 1)
        throw std::runtime_error("load_prepared: unsupported version in " + path);

    Corpus corpus;
    Vocabulary vocab;
    vocab.min_frequency = j.value("min_frequency", 1);
    vocab.max_size = j.value("max_size", 30000);
    for (const auto& t : j.at("vocabulary")) vocab.add(t.get<std::string>());
    corpus.vocabulary() = vocab;
    corpus.set_class_names(j.at("class_names").get<std::vector<std::string>>());

    for (const auto& rec : j.at("documents")) {
        Document d;
        d.id = rec.at("id").get<std::string>();
        d.text = rec.at("text").get<std::string>();
        int label = rec.at("label").get<int>();
        if (label >= corpus.class_count())
            throw std::runtime_error("load_prepared: label out of range for doc '" + d.id + "'");
        if (label >= 0) d.label = label;
        d.tokens = rec.at("tokens").get<std::vector<int>>();
        if (d.tokens.empty())
            throw std::runtime_error("load_prepared: document '" + d.id + "' has no tokens");
        corpus.documents().push_back(std::move(d));
    }
    if (corpus.documents().empty()) throw std::runtime_error("load_prepared: empty corpus: " + path);
    return corpus;
}

std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("file_fingerprint: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    uint64_t h = fnv1a64(ss.str());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unordered_set<std::string> parse_stopwords(const std::string& contents) {
    std::unordered_set<std::string> words;
    std::istringstream in(contents);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.insert(line);
    }
    return words;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_stopwords: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_stopwords(ss.str());
}

const std::unordered_set<std::string>& default_stopwords() {
    static const std::unordered_set<std::string> words = parse_stopwords(kDefaultStopwordsText);
    return words;
}

}  // namespace doccl
