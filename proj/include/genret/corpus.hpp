#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <utility>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "genret/common.hpp"

namespace genret {

struct Document {
    std::string id;
    std::vector<std::string> tokens;
};

struct Query {
    std::string id;
    std::vector<std::string> tokens;
};

struct Judgment {
    std::string query_id;
    std::string doc_id;
    int relevance = 0;  // binary
};

struct Corpus {
    std::vector<Document> documents;
    std::vector<Query> queries;
    std::vector<Judgment> judgments;

    const Document* find_document(const std::string& id) const {
        for (const auto& d : documents)
            if (d.id == id) return &d;
        return nullptr;
    }

    // Positive doc ids for a query, sorted ascending.
    std::vector<std::string> positives(const std::string& query_id) const {
        std::vector<std::string> out;
        for (const auto& j : judgments)
            if (j.relevance == 1 && j.query_id == query_id) out.push_back(j.doc_id);
        std::sort(out.begin(), out.end());
        return out;
    }

    void validate() const {
        std::unordered_set<std::string> doc_ids, query_ids;
        for (const auto& d : documents) {
            if (d.tokens.empty()) throw data_error("document '" + d.id + "' has no tokens");
            if (!doc_ids.insert(d.id).second)
                throw data_error("duplicate document id '" + d.id + "'");
        }
        for (const auto& q : queries) {
            if (q.tokens.empty()) throw data_error("query '" + q.id + "' has no tokens");
            if (!query_ids.insert(q.id).second)
                throw data_error("duplicate query id '" + q.id + "'");
        }
        for (const auto& j : judgments) {
            if (!query_ids.count(j.query_id))
                throw data_error("judgment references unknown query id '" + j.query_id + "'");
            if (!doc_ids.count(j.doc_id))
                throw data_error("judgment references unknown doc id '" + j.doc_id + "'");
            if (j.relevance != 0 && j.relevance != 1)
                throw data_error("judgment relevance must be 0 or 1");
        }
    }

    // Stable content hash over documents, queries, and judgments.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 0;
        auto mix = [&](std::string_view s) { h = fnv1a64(s, h); };
        for (const auto& d : documents) {
            mix(d.id);
            for (const auto& t : d.tokens) mix(t);
        }
        for (const auto& q : queries) {
            mix(q.id);
            for (const auto& t : q.tokens) mix(t);
        }
        for (const auto& j : judgments) {
            mix(j.query_id);
            mix(j.doc_id);
            mix(j.relevance ? "1" : "0");
        }
        return h;
    }
};

struct SynthConfig {
    int n_topics = 4;
    int docs_per_topic = 250;
    int doc_len = 40;
    int topic_vocab = 50;
    int shared_vocab = 30;
    int query_len = 5;
    int queries_per_doc = 2;
    std::uint64_t seed = 1;

    void validate() const {
        if (n_topics < 1 || docs_per_topic < 1 || doc_len < 1 || topic_vocab < 1 ||
            shared_vocab < 1 || query_len < 1 || queries_per_doc < 0)
            throw config_error("SynthConfig: all sizes must be positive");
        if (query_len > doc_len) throw config_error("SynthConfig: query_len > doc_len");
        if (topic_vocab < query_len) throw config_error("SynthConfig: topic_vocab < query_len");
    }
};

// Seeded synthetic corpus. Each topic owns a disjoint vocabulary; documents
// mix 70% topic tokens with 30% shared tokens; each query samples distinct
// tokens from its source document, topic tokens first, and carries exactly
// one relevance=1 judgment back to that document.
inline Corpus generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    Corpus corpus;

    auto topic_token = [](int t, int w) {
        return "t" + std::to_string(t) + "w" + std::to_string(w);
    };
    auto shared_token = [](int w) { return "sw" + std::to_string(w); };

    const int n_topic_tokens = std::max(1, (cfg.doc_len * 7 + 5) / 10);

    for (int t = 0; t < cfg.n_topics; ++t) {
        for (int k = 0; k < cfg.docs_per_topic; ++k) {
            Document doc;
            doc.id = "d" + std::to_string(t) + "_" + std::to_string(k);
            doc.tokens.reserve(cfg.doc_len);
            for (int i = 0; i < cfg.doc_len; ++i) {
                if (i < n_topic_tokens)
                    doc.tokens.push_back(topic_token(t, static_cast<int>(rng.index(cfg.topic_vocab))));
                else
                    doc.tokens.push_back(shared_token(static_cast<int>(rng.index(cfg.shared_vocab))));
            }
            rng.shuffle(doc.tokens);

            for (int qi = 0; qi < cfg.queries_per_doc; ++qi) {
                // Distinct doc tokens by first occurrence, topic-prefixed names
                // sort into the front pool.
                std::vector<std::string> topic_pool, shared_pool;
                std::unordered_set<std::string> seen;
                for (const auto& tok : doc.tokens) {
                    if (!seen.insert(tok).second) continue;
                    if (tok[0] == 't')
                        topic_pool.push_back(tok);
                    else
                        shared_pool.push_back(tok);
                }
                rng.shuffle(topic_pool);
                rng.shuffle(shared_pool);
                Query q;
                q.id = "q" + doc.id.substr(1) + "_" + std::to_string(qi);
                for (const auto& tok : topic_pool) {
                    if (static_cast<int>(q.tokens.size()) >= cfg.query_len) break;
                    q.tokens.push_back(tok);
                }
                for (const auto& tok : shared_pool) {
                    if (static_cast<int>(q.tokens.size()) >= cfg.query_len) break;
                    q.tokens.push_back(tok);
                }
                corpus.judgments.push_back({q.id, doc.id, 1});
                corpus.queries.push_back(std::move(q));
            }
            corpus.documents.push_back(std::move(doc));
        }
    }
    corpus.validate();
    return corpus;
}

inline std::vector<std::string> tokenize_lower(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

namespace detail {

inline void load_jsonl(const std::string& path, const char* what,
                       std::vector<std::pair<std::string, std::vector<std::string>>>& out) {
    std::ifstream in(path);
    if (!in) throw data_error(std::string(what) + " file not found: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw data_error(std::string(what) + " file " + path + ": malformed JSON at line " +
                             std::to_string(lineno));
        }
        if (!j.contains("id") || !j.contains("text") || !j["id"].is_string() ||
            !j["text"].is_string())
            throw data_error(std::string(what) + " file " + path +
                             ": missing id/text at line " + std::to_string(lineno));
        auto tokens = tokenize_lower(j["text"].get<std::string>());
        if (tokens.empty())
            throw data_error(std::string(what) + " file " + path + ": empty text at line " +
                             std::to_string(lineno));
        out.emplace_back(j["id"].get<std::string>(), std::move(tokens));
    }
}

}  // namespace detail

// Documents/queries are JSON-lines {"id":..., "text":...}; qrels are
// tab-separated query_id, doc_id, relevance.
inline Corpus load_corpus(const std::string& doc_path, const std::string& query_path,
                          const std::string& qrel_path) {
    Corpus corpus;
    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    detail::load_jsonl(doc_path, "documents", rows);
    for (auto& [id, tokens] : rows) corpus.documents.push_back({id, std::move(tokens)});
    rows.clear();
    detail::load_jsonl(query_path, "queries", rows);
    for (auto& [id, tokens] : rows) corpus.queries.push_back({id, std::move(tokens)});

    std::ifstream in(qrel_path);
    if (!in) throw data_error("qrels file not found: " + qrel_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, did, rel;
        if (!std::getline(ss, qid, '\t') || !std::getline(ss, did, '\t') ||
            !std::getline(ss, rel, '\t') || qid.empty() || did.empty())
            throw data_error("qrels file " + qrel_path + ": malformed line " +
                             std::to_string(lineno));
        if (rel != "0" && rel != "1")
            throw data_error("qrels file " + qrel_path + ": relevance must be 0 or 1 at line " +
                             std::to_string(lineno));
        corpus.judgments.push_back({qid, did, rel == "1" ? 1 : 0});
    }
    corpus.validate();
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& doc_path,
                        const std::string& query_path, const std::string& qrel_path) {
    auto join = [](const std::vector<std::string>& toks) {
        std::string s;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) s += ' ';
            s += toks[i];
        }
        return s;
    };
    {
        std::ofstream out(doc_path);
        if (!out) throw data_error("cannot write " + doc_path);
        for (const auto& d : corpus.documents) {
            nlohmann::json j{{"id", d.id}, {"text", join(d.tokens)}};
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(query_path);
        if (!out) throw data_error("cannot write " + query_path);
        for (const auto& q : corpus.queries) {
            nlohmann::json j{{"id", q.id}, {"text", join(q.tokens)}};
            out << j.dump() << "\n";
        }
    }
    {
        std::ofstream out(qrel_path);
        if (!out) throw data_error("cannot write " + qrel_path);
        for (const auto& j : corpus.judgments)
            out << j.query_id << '\t' << j.doc_id << '\t' << j.relevance << "\n";
    }
}

// Uniform sample without replacement via a single seeded shuffle; nested
// sizes under one seed are prefixes of the same permutation.
template <typename T>
std::vector<T> subsample(const std::vector<T>& items, std::size_t size, std::uint64_t seed) {
    if (size > items.size())
        throw data_error("subsample: requested " + std::to_string(size) + " of " +
                         std::to_string(items.size()));
    std::vector<T> shuffled = items;
    Rng rng(seed);
    rng.shuffle(shuffled);
    shuffled.resize(size);
    return shuffled;
}

}  // namespace genret
