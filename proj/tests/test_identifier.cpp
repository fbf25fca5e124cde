#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "genret/corpus.hpp"
#include "genret/identifier.hpp"

using namespace genret;

namespace {

Document six_token_doc() { return {"dA", {"the", "cat", "sat", "on", "the", "mat"}}; }

}  // namespace

TEST_CASE("ngram extraction: overlap-scored windows") {
    Query q{"q1", {"cat", "on", "mat"}};
    auto set = extract_ngram_identifiers(six_token_doc(), q, /*m=*/2, /*n=*/3);
    REQUIRE(set.identifiers.size() == 2);
    // offsets 1 ([cat,sat,on]) and 3 ([on,the,mat]) both score 2 distinct hits
    CHECK(set.identifiers[0].source_pos == 1);
    CHECK(set.identifiers[0].tokens == std::vector<std::string>{"cat", "sat", "on"});
    CHECK(set.identifiers[1].source_pos == 3);
    CHECK(set.identifiers[1].tokens == std::vector<std::string>{"on", "the", "mat"});
}

TEST_CASE("ngram extraction: zero overlap falls back to earliest windows") {
    Query q{"q1", {"zebra"}};
    auto set = extract_ngram_identifiers(six_token_doc(), q, 1, 3);
    REQUIRE(set.identifiers.size() == 1);
    CHECK(set.identifiers[0].source_pos == 0);
}

TEST_CASE("ngram extraction: short document yields the whole document") {
    Document d{"dS", {"only", "two"}};
    auto set = extract_ngram_identifiers(d, Query{"q", {"only"}}, 3, 10);
    REQUIRE(set.identifiers.size() == 1);
    CHECK(set.identifiers[0].tokens == d.tokens);
}

TEST_CASE("ngram extraction: errors and substring invariant") {
    CHECK_THROWS_AS(extract_ngram_identifiers(Document{"e", {}}, Query{"q", {"x"}}, 2, 3),
                    data_error);

    SynthConfig c;
    c.n_topics = 2;
    c.docs_per_topic = 10;
    c.doc_len = 15;
    c.topic_vocab = 8;
    c.shared_vocab = 5;
    c.query_len = 3;
    c.queries_per_doc = 1;
    auto corpus = generate_synthetic(c);
    for (const auto& q : corpus.queries) {
        const Document* doc = corpus.find_document(corpus.positives(q.id).front());
        auto set = extract_ngram_identifiers(*doc, q, 4, 5);
        for (const auto& ng : set.identifiers) {
            REQUIRE(ng.source_pos + ng.tokens.size() <= doc->tokens.size());
            for (std::size_t i = 0; i < ng.tokens.size(); ++i)
                CHECK(ng.tokens[i] == doc->tokens[ng.source_pos + i]);
        }
    }
}

TEST_CASE("embed_document: determinism and unit norm") {
    Document d{"d", {"alpha", "beta", "gamma", "alpha"}};
    auto v1 = embed_document(d, 16, 5);
    auto v2 = embed_document(d, 16, 5);
    CHECK(v1 == v2);
    double norm = 0.0;
    for (double x : v1) norm += x * x;
    CHECK(std::fabs(std::sqrt(norm) - 1.0) < 1e-9);
    CHECK_THROWS_AS(embed_document(Document{"e", {}}, 16, 5), data_error);
    CHECK_THROWS_AS(embed_document(d, 1, 5), config_error);
}

TEST_CASE("embed_document: disjoint token sets are near-orthogonal at dim 1024") {
    Document a{"a", {"apple", "banana", "cherry", "date", "elder"}};
    Document b{"b", {"fig", "grape", "honey", "iris", "jade"}};
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto va = embed_document(a, 1024, seed);
        auto vb = embed_document(b, 1024, seed);
        double dot = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) dot += va[i] * vb[i];
        if (std::fabs(dot) < 0.2) ++ok;
    }
    CHECK(ok >= 95);
}

TEST_CASE("train_codebook: two points, one level covers exactly") {
    std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 1.0}};
    auto cb = train_codebook(pts, 2, 1, 3, 5);
    CHECK(reconstruction_error(pts, cb, 1) == doctest::Approx(0.0).epsilon(1e-12));

    auto codes0 = assign_codes(pts[0], cb);
    auto codes1 = assign_codes(pts[1], cb);
    CHECK(codes0[0] != codes1[0]);
}

TEST_CASE("train_codebook: second level of an exact cover is all zeros") {
    std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 1.0}};
    auto cb = train_codebook(pts, 2, 2, 3, 5);
    for (int c = 0; c < 2; ++c) {
        const double* ctr = cb.centroid(1, c);
        CHECK(std::fabs(ctr[0]) < 1e-12);
        CHECK(std::fabs(ctr[1]) < 1e-12);
    }
}

TEST_CASE("train_codebook: reconstruction error monotone in levels") {
    Rng rng(11);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 40; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = rng.uniform(-1.0, 1.0);
        pts.push_back(std::move(v));
    }
    auto cb = train_codebook(pts, 4, 6, 17, 8);
    double prev = reconstruction_error(pts, cb, 0);
    for (int levels = 1; levels <= 6; ++levels) {
        double err = reconstruction_error(pts, cb, levels);
        CHECK(err <= prev + 1e-12);
        prev = err;
    }
}

TEST_CASE("train_codebook: input validation") {
    CHECK_THROWS_AS(train_codebook({}, 2, 1, 0, 5), data_error);
    std::vector<std::vector<double>> ragged = {{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(train_codebook(ragged, 2, 1, 0, 5), data_error);
}

TEST_CASE("assign_codes: determinism and exact-centroid match") {
    std::vector<std::vector<double>> pts = {{0.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}};
    auto cb = train_codebook(pts, 3, 2, 9, 10);
    std::vector<double> probe(cb.centroid(0, 1), cb.centroid(0, 1) + 2);
    auto codes = assign_codes(probe, cb);
    CHECK(codes[0] == 1);
    CHECK(assign_codes(pts[2], cb) == assign_codes(pts[2], cb));
    CHECK_THROWS_AS(assign_codes(std::vector<double>{1.0, 2.0, 3.0}, cb), data_error);
}

TEST_CASE("assign_all_codes: collision handling and injectivity") {
    SUBCASE("identical documents get identical prefixes, distinct finals") {
        Corpus corpus;
        corpus.documents = {{"da", {"same", "text", "here"}}, {"db", {"same", "text", "here"}}};
        std::vector<std::vector<double>> vecs;
        for (const auto& d : corpus.documents) vecs.push_back(embed_document(d, 8, 1));
        auto cb = train_codebook(vecs, 4, 3, 1, 5);
        auto seqs = assign_all_codes(corpus, cb);
        REQUIRE(seqs.size() == 2);
        CHECK(std::vector<int>(seqs[0].codes.begin(), seqs[0].codes.end() - 1) ==
              std::vector<int>(seqs[1].codes.begin(), seqs[1].codes.end() - 1));
        CHECK(seqs[0].codes.back() != seqs[1].codes.back());
    }
    SUBCASE("capacity exhaustion raises") {
        Corpus corpus;
        for (int i = 0; i < 4; ++i)
            corpus.documents.push_back({"d" + std::to_string(i), {"same", "text"}});
        std::vector<std::vector<double>> vecs;
        for (const auto& d : corpus.documents) vecs.push_back(embed_document(d, 8, 1));
        auto cb = train_codebook(vecs, 3, 1, 1, 5);  // N_c=3 < 4 identical docs
        CHECK_THROWS_AS(assign_all_codes(corpus, cb), data_error);
    }
    SUBCASE("pigeonhole check over a generated corpus") {
        SynthConfig c;
        c.n_topics = 3;
        c.docs_per_topic = 30;
        c.doc_len = 20;
        c.topic_vocab = 10;
        c.shared_vocab = 6;
        c.query_len = 3;
        c.queries_per_doc = 1;
        auto corpus = generate_synthetic(c);
        std::vector<std::vector<double>> vecs;
        for (const auto& d : corpus.documents) vecs.push_back(embed_document(d, 16, 2));
        auto cb = train_codebook(vecs, 8, 4, 2, 6);
        auto seqs = assign_all_codes(corpus, cb);
        std::set<std::vector<int>> unique_codes;
        for (const auto& s : seqs) unique_codes.insert(s.codes);
        CHECK(unique_codes.size() == corpus.documents.size());
    }
}

TEST_CASE("identifier index: ngram lookup") {
    Corpus corpus;
    corpus.documents = {six_token_doc(), {"dB", {"a", "dog", "ran"}}};
    auto idx = IdentifierIndex::build_ngram(corpus, 3);

    auto hits = idx.lookup_ngram({"cat", "sat", "on"});
    REQUIRE(hits.size() == 1);
    CHECK(hits[0] == "dA");
    CHECK(idx.lookup_ngram({"no", "such", "gram"}).empty());
    // windows of every doc are indexed, including the full short doc
    CHECK(idx.lookup_ngram({"a", "dog", "ran"}) == std::vector<std::string>{"dB"});
}

TEST_CASE("identifier index: code trie resolves each doc uniquely") {
    std::vector<CodeSequence> seqs = {{"dx", {1, 2, 3}}, {"dy", {1, 2, 4}}};
    auto idx = IdentifierIndex::build_code(seqs);
    auto hit = idx.resolve_codes({1, 2, 3});
    REQUIRE(hit.has_value());
    CHECK(*hit == "dx");
    CHECK(!idx.resolve_codes({1, 2, 5}).has_value());
    CHECK(!idx.resolve_codes({1, 2}).has_value());  // prefix is not terminal

    auto children = idx.trie_children({"1", "2"});
    CHECK(children.size() == 2);
    CHECK(idx.trie_complete({"1", "2", "4"}));
}

TEST_CASE("identifier and codebook files round-trip") {
    auto dir = std::filesystem::temp_directory_path() / "genret_ident_test";
    std::filesystem::create_directories(dir);

    std::vector<std::vector<double>> pts = {{0.0, 1.0}, {1.0, 0.0}, {0.5, 0.5}};
    auto cb = train_codebook(pts, 2, 3, 7, 5);
    const auto path = (dir / "codebook.json").string();
    save_codebook(cb, path);
    auto loaded = load_codebook(path);
    CHECK(loaded.dim == cb.dim);
    CHECK(loaded.n_codes == cb.n_codes);
    CHECK(loaded.n_levels() == cb.n_levels());
    CHECK(loaded.levels == cb.levels);
    CHECK(assign_codes(pts[0], loaded) == assign_codes(pts[0], cb));
}
