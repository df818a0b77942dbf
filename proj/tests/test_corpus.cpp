#include "doccl/corpus.hpp"

#include <filesystem>

#include "doccl/rng.hpp"
#include "doctest.h"
#include "support/test_util.hpp"

using namespace doccl;
using testutil::TempDir;

TEST_CASE("preprocess lowercases, strips punctuation and drops stopwords") {
    std::unordered_set<std::string> stop{"the"};
    CHECK(preprocess("The cat sat, the mat!", stop) ==
          std::vector<std::string>{"cat", "sat", "mat"});
    CHECK(preprocess("", {}).empty());
    CHECK(preprocess("THE the The", stop).empty());
}

TEST_CASE("preprocess truncates to max_tokens") {
    std::string text;
    for (int i = 0; i < 400; ++i) text += "tok" + std::to_string(i) + " ";
    CHECK(preprocess(text, {}, 256).size() == 256);
    CHECK(preprocess(text, {}, 10).size() == 10);
}

TEST_CASE("preprocess is idempotent") {
    Rng rng(123);
    const std::string charset = "abcXYZ0189 ,.!?-_;the";
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        size_t len = rng.index(120);
        for (size_t i = 0; i < len; ++i) text.push_back(charset[rng.index(charset.size())]);
        std::unordered_set<std::string> stop{"the", "a"};
        auto once = preprocess(text, stop);
        std::string joined;
        for (size_t i = 0; i < once.size(); ++i) {
            if (i) joined.push_back(' ');
            joined += once[i];
        }
        CHECK(preprocess(joined, stop) == once);
    }
}

TEST_CASE("build_vocabulary filters by frequency and caps size") {
    std::vector<std::vector<std::string>> lists{{"a", "a", "b"}, {"a"}};
    SUBCASE("min frequency") {
        Vocabulary v = build_vocabulary(lists, 2, 100);
        CHECK(v.size() == 2);
        CHECK(v.index_of("a") == 1);
        CHECK(v.index_of("b") == 0);
    }
    SUBCASE("size cap") {
        Vocabulary v = build_vocabulary(lists, 1, 2);
        CHECK(v.size() == 2);
        CHECK(v.index_of("a") == 1);
        CHECK(v.index_of("b") == 0);
    }
    SUBCASE("empty corpus") {
        Vocabulary v = build_vocabulary({}, 1, 100);
        CHECK(v.size() == 1);
    }
}

TEST_CASE("vocabulary indices are a bijection onto [1, size)") {
    std::vector<std::vector<std::string>> lists;
    Rng rng(5);
    for (int d = 0; d < 40; ++d) {
        std::vector<std::string> toks;
        for (int t = 0; t < 30; ++t) toks.push_back("w" + std::to_string(rng.index(100)));
        lists.push_back(toks);
    }
    Vocabulary v = build_vocabulary(lists, 1, 1000);
    std::vector<bool> seen(v.size(), false);
    for (size_t i = 1; i < v.size(); ++i) {
        const std::string& tok = v.token_at(i);
        CHECK(v.index_of(tok) == static_cast<int>(i));
        CHECK_FALSE(seen[i]);
        seen[i] = true;
    }
}

TEST_CASE("vectorize maps OOV to index 0") {
    Vocabulary v = build_vocabulary({{"cat"}}, 1, 10);
    CHECK(vectorize({"cat", "dog"}, v) == std::vector<int>{1, 0});
    CHECK(vectorize({}, v).empty());
    CHECK(vectorize({"x", "y", "z"}, v) == std::vector<int>{0, 0, 0});
}

TEST_CASE("load_corpus from jsonl") {
    TempDir dir("doccl-corpus");
    testutil::spit(dir.file("c.jsonl"),
                   "{\"id\":\"1\",\"text\":\"alpha beta\",\"label\":\"pos\"}\n"
                   "{\"id\":\"2\",\"text\":\"gamma\",\"label\":\"neg\"}\n"
                   "{\"id\":\"3\",\"text\":\"delta beta\",\"label\":\"pos\"}\n");
    Corpus corpus = load_corpus(dir.file("c.jsonl"), CorpusFormat::Jsonl, {});
    CHECK(corpus.size() == 3);
    CHECK(corpus.class_count() == 2);
    // lexicographic: neg=0, pos=1
    CHECK(corpus.class_names() == std::vector<std::string>{"neg", "pos"});
    CHECK(*corpus.documents()[0].label == 1);
    CHECK(*corpus.documents()[1].label == 0);

    SUBCASE("missing text errors with line number") {
        testutil::spit(dir.file("bad.jsonl"),
                       "{\"id\":\"1\",\"text\":\"ok\",\"label\":\"a\"}\n"
                       "{\"id\":\"2\",\"label\":\"a\"}\n");
        CHECK_THROWS_WITH_AS(load_corpus(dir.file("bad.jsonl"), CorpusFormat::Jsonl, {}),
                             doctest::Contains(":2"), std::runtime_error);
    }
    SUBCASE("malformed json errors with line number") {
        testutil::spit(dir.file("bad2.jsonl"), "{\"id\":\"1\",\"text\":\"ok\"}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_corpus(dir.file("bad2.jsonl"), CorpusFormat::Jsonl, {}),
                             doctest::Contains(":2"), std::runtime_error);
    }
    SUBCASE("empty corpus errors") {
        testutil::spit(dir.file("empty.jsonl"), "");
        CHECK_THROWS_AS(load_corpus(dir.file("empty.jsonl"), CorpusFormat::Jsonl, {}),
                        std::runtime_error);
    }
    SUBCASE("documents empty after preprocessing are dropped") {
        CorpusOptions opts;
        opts.stopwords = {"beta"};
        testutil::spit(dir.file("drop.jsonl"),
                       "{\"id\":\"1\",\"text\":\"beta\",\"label\":\"a\"}\n"
                       "{\"id\":\"2\",\"text\":\"keep this\",\"label\":\"a\"}\n");
        Corpus c = load_corpus(dir.file("drop.jsonl"), CorpusFormat::Jsonl, opts);
        CHECK(c.size() == 1);
        CHECK(c.documents()[0].id == "2");
    }
}

TEST_CASE("load_corpus from dir-per-class derives labels lexicographically") {
    TempDir dir("doccl-dpc");
    std::filesystem::create_directories(dir.path() / "sci.space");
    std::filesystem::create_directories(dir.path() / "alt.atheism");
    testutil::spit((dir.path() / "alt.atheism" / "a1.txt").string(), "atoms and void");
    testutil::spit((dir.path() / "sci.space" / "s1.txt").string(), "orbital mechanics");
    testutil::spit((dir.path() / "sci.space" / "s2.txt").string(), "launch window");

    Corpus corpus = load_corpus(dir.path().string(), CorpusFormat::DirPerClass, {});
    CHECK(corpus.size() == 3);
    CHECK(corpus.class_names() == std::vector<std::string>{"alt.atheism", "sci.space"});
    CHECK(*corpus.documents()[0].label == 0);
    CHECK(*corpus.documents()[1].label == 1);
    CHECK(corpus.documents()[1].id == "sci.space/s1.txt");
}

TEST_CASE("load_corpus is deterministic under serialization") {
    TempDir dir("doccl-det");
    testutil::spit(dir.file("c.jsonl"),
                   "{\"id\":\"1\",\"text\":\"alpha beta gamma\",\"label\":\"x\"}\n"
                   "{\"id\":\"2\",\"text\":\"beta beta delta\",\"label\":\"y\"}\n"
                   "{\"id\":\"3\",\"text\":\"gamma alpha\",\"label\":\"x\"}\n");
    Corpus a = load_corpus(dir.file("c.jsonl"), CorpusFormat::Jsonl, {});
    Corpus b = load_corpus(dir.file("c.jsonl"), CorpusFormat::Jsonl, {});
    save_prepared(a, dir.file("a.json"));
    save_prepared(b, dir.file("b.json"));
    CHECK(testutil::slurp(dir.file("a.json")) == testutil::slurp(dir.file("b.json")));
    CHECK(file_fingerprint(dir.file("a.json")) == file_fingerprint(dir.file("b.json")));
}

TEST_CASE("prepared corpus round-trips") {
    TempDir dir("doccl-prep");
    testutil::spit(dir.file("c.jsonl"),
                   "{\"id\":\"1\",\"text\":\"alpha beta gamma\",\"label\":\"x\"}\n"
                   "{\"id\":\"2\",\"text\":\"beta delta\",\"label\":\"y\"}\n");
    Corpus a = load_corpus(dir.file("c.jsonl"), CorpusFormat::Jsonl, {});
    save_prepared(a, dir.file("prep.json"));
    Corpus b = load_prepared(dir.file("prep.json"));
    REQUIRE(b.size() == a.size());
    CHECK(b.class_names() == a.class_names());
    CHECK(b.vocabulary().size() == a.vocabulary().size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(b.documents()[i].id == a.documents()[i].id);
        CHECK(b.documents()[i].text == a.documents()[i].text);
        CHECK(b.documents()[i].tokens == a.documents()[i].tokens);
        CHECK(b.documents()[i].label == a.documents()[i].label);
    }
    CHECK_THROWS_AS(load_prepared(dir.file("c.jsonl")), std::runtime_error);
}

TEST_CASE("stopword parsing skips comments and blanks") {
    auto words = parse_stopwords("# header\nthe\n\nand\r\n");
    CHECK(words.count("the") == 1);
    CHECK(words.count("and") == 1);
    CHECK(words.size() == 2);
    CHECK(default_stopwords().count("the") == 1);
    CHECK(default_stopwords().count("clustering") == 0);
}
