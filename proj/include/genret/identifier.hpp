#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "genret/common.hpp"
#include "genret/corpus.hpp"

namespace genret {

// ---------------------------------------------------------------------------
// N-gram identifiers
// ---------------------------------------------------------------------------

struct NgramIdentifier {
    std::vector<std::string> tokens;  // contiguous window of the source doc
    std::string source_doc;
    int source_pos = 0;
};

struct IdentifierSet {
    std::string doc_id;
    std::vector<NgramIdentifier> identifiers;
};

// Top-m windows of length n scored by the number of distinct query tokens
// they contain. Ties break toward the earlier offset; a document shorter
// than n yields its single full-document window.
inline IdentifierSet extract_ngram_identifiers(const Document& doc, const Query& query,
                                               int m = 10, int n = 10) {
    if (doc.tokens.empty()) throw data_error("extract_ngram_identifiers: empty document");
    if (m < 1 || n < 1) throw config_error("extract_ngram_identifiers: m and n must be positive");

    const int len = static_cast<int>(doc.tokens.size());
    const int win = std::min(n, len);
    const int n_windows = len - win + 1;

    std::unordered_set<std::string> qset(query.tokens.begin(), query.tokens.end());
    std::vector<std::pair<int, int>> scored;  // (score, offset)
    scored.reserve(n_windows);
    for (int off = 0; off < n_windows; ++off) {
        std::unordered_set<std::string> hit;
        for (int i = 0; i < win; ++i) {
            const auto& tok = doc.tokens[off + i];
            if (qset.count(tok)) hit.insert(tok);
        }
        scored.emplace_back(static_cast<int>(hit.size()), off);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    IdentifierSet out;
    out.doc_id = doc.id;
    const int take = std::min<int>(m, n_windows);
    for (int i = 0; i < take; ++i) {
        int off = scored[i].second;
        NgramIdentifier ng;
        ng.tokens.assign(doc.tokens.begin() + off, doc.tokens.begin() + off + win);
        ng.source_doc = doc.id;
        ng.source_pos = off;
        out.identifiers.push_back(std::move(ng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Document embedding (feature-hashed bag of tokens)
// ---------------------------------------------------------------------------

inline std::vector<double> embed_document(const Document& doc, int dim, std::uint64_t seed) {
    if (doc.tokens.empty()) throw data_error("embed_document: empty document");
    if (dim < 2) throw config_error("embed_document: dim must be >= 2");

    std::vector<double> v(dim, 0.0);
    for (const auto& tok : doc.tokens) {
        std::uint64_t h = fnv1a64(tok, seed);
        std::size_t idx = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
        double sign = (h >> 63) ? -1.0 : 1.0;
        v[idx] += sign;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v.assign(dim, 0.0);
        v[0] = 1.0;
    } else {
        for (double& x : v) x /= norm;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Residual quantization codebook
// ---------------------------------------------------------------------------

struct Codebook {
    // levels[l] holds n_codes centroids, each of length dim, flattened
    // row-major (code index major).
    std::vector<std::vector<double>> levels;
    int n_codes = 256;
    int dim = 0;
    std::uint64_t seed = 0;

    int n_levels() const { return static_cast<int>(levels.size()); }
    const double* centroid(int level, int code) const {
        return levels[level].data() + static_cast<std::size_t>(code) * dim;
    }
};

struct CodeSequence {
    std::string doc_id;
    std::vector<int> codes;  // length n_levels, each in [0, n_codes)
};

namespace detail {

inline double sq_dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Lloyd k-means with seeded distinct-point init; empty clusters reseed to
// the farthest point from its assigned centroid.
inline std::vector<double> kmeans(const std::vector<std::vector<double>>& points, int k,
                                  int dim, Rng& rng, int iters) {
    const int n = static_cast<int>(points.size());
    std::vector<double> centroids(static_cast<std::size_t>(k) * dim, 0.0);

    // Init: shuffle indices, prefer value-distinct points, fall back to
    // duplicates when there are fewer distinct points than k.
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<int> chosen;
    std::set<std::vector<double>> used;
    for (int i : perm) {
        if (static_cast<int>(chosen.size()) == k) break;
        if (used.insert(points[i]).second) chosen.push_back(i);
    }
    for (int i = 0; static_cast<int>(chosen.size()) < k; ++i) chosen.push_back(perm[i % n]);
    for (int c = 0; c < k; ++c)
        std::copy(points[chosen[c]].begin(), points[chosen[c]].end(),
                  centroids.begin() + static_cast<std::size_t>(c) * dim);

    std::vector<int> assign(n, 0);
    std::vector<double> dist(n, 0.0);
    for (int it = 0; it < iters; ++it) {
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < k; ++c) {
                double d = sq_dist(points[i].data(), centroids.data() + static_cast<std::size_t>(c) * dim, dim);
                if (d < best) best = d, best_c = c;
            }
            assign[i] = best_c;
            dist[i] = best;
        }
        std::vector<double> sums(static_cast<std::size_t>(k) * dim, 0.0);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            ++counts[assign[i]];
            double* s = sums.data() + static_cast<std::size_t>(assign[i]) * dim;
            for (int j = 0; j < dim; ++j) s[j] += points[i][j];
        }
        for (int c = 0; c < k; ++c) {
            double* ctr = centroids.data() + static_cast<std::size_t>(c) * dim;
            if (counts[c] > 0) {
                const double* s = sums.data() + static_cast<std::size_t>(c) * dim;
                for (int j = 0; j < dim; ++j) ctr[j] = s[j] / counts[c];
            } else {
                int far = static_cast<int>(std::max_element(dist.begin(), dist.end()) - dist.begin());
                std::copy(points[far].begin(), points[far].end(), ctr);
                dist[far] = 0.0;
            }
        }
    }
    return centroids;
}

}  // namespace detail

inline Codebook train_codebook(const std::vector<std::vector<double>>& vectors, int n_codes = 256,
                               int n_levels = 32, std::uint64_t seed = 0, int iters = 10) {
    if (vectors.empty()) throw data_error("train_codebook: no vectors");
    if (n_codes < 1 || n_levels < 1 || iters < 1)
        throw config_error("train_codebook: n_codes, n_levels, iters must be positive");
    const int dim = static_cast<int>(vectors.front().size());
    for (const auto& v : vectors)
        if (static_cast<int>(v.size()) != dim) throw data_error("train_codebook: ragged vectors");

    Codebook cb;
    cb.n_codes = n_codes;
    cb.dim = dim;
    cb.seed = seed;
    Rng rng(seed);

    std::vector<std::vector<double>> residuals = vectors;
    for (int level = 0; level < n_levels; ++level) {
        auto centroids = detail::kmeans(residuals, n_codes, dim, rng, iters);
        for (auto& r : residuals) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < n_codes; ++c) {
                double d = detail::sq_dist(r.data(), centroids.data() + static_cast<std::size_t>(c) * dim, dim);
                if (d < best) best = d, best_c = c;
            }
            const double* ctr = centroids.data() + static_cast<std::size_t>(best_c) * dim;
            for (int j = 0; j < dim; ++j) r[j] -= ctr[j];
        }
        cb.levels.push_back(std::move(centroids));
    }
    return cb;
}

// Greedy per-level nearest centroid; ties go to the smaller code index.
inline std::vector<int> assign_codes(const std::vector<double>& vec, const Codebook& cb) {
    if (static_cast<int>(vec.size()) != cb.dim)
        throw data_error("assign_codes: dimension mismatch");
    std::vector<double> residual = vec;
    std::vector<int> codes;
    codes.reserve(cb.n_levels());
    for (int level = 0; level < cb.n_levels(); ++level) {
        double best = std::numeric_limits<double>::infinity();
        int best_c = 0;
        for (int c = 0; c < cb.n_codes; ++c) {
            double d = detail::sq_dist(residual.data(), cb.centroid(level, c), cb.dim);
            if (d < best) best = d, best_c = c;
        }
        const double* ctr = cb.centroid(level, best_c);
        for (int j = 0; j < cb.dim; ++j) residual[j] -= ctr[j];
        codes.push_back(best_c);
    }
    return codes;
}

// Assign every document a code sequence, then force injectivity: colliding
// documents (doc-id order, first keeps its codes) have their final-level
// code remapped to the nearest centroid index unused under the same prefix.
inline std::vector<CodeSequence> assign_all_codes(const Corpus& corpus, const Codebook& cb) {
    std::vector<const Document*> docs;
    for (const auto& d : corpus.documents) docs.push_back(&d);
    std::sort(docs.begin(), docs.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });

    const int last = cb.n_levels() - 1;
    std::map<std::vector<int>, std::set<int>> used;  // prefix -> final codes taken
    std::vector<CodeSequence> out;
    out.reserve(docs.size());

    for (const Document* doc : docs) {
        auto vec = embed_document(*doc, cb.dim, cb.seed);
        auto codes = assign_codes(vec, cb);
        std::vector<int> prefix(codes.begin(), codes.end() - 1);
        auto& taken = used[prefix];
        if (taken.count(codes[last])) {
            // Residual entering the final level.
            std::vector<double> residual = vec;
            for (int level = 0; level < last; ++level) {
                const double* ctr = cb.centroid(level, codes[level]);
                for (int j = 0; j < cb.dim; ++j) residual[j] -= ctr[j];
            }
            double best = std::numeric_limits<double>::infinity();
            int best_c = -1;
            for (int c = 0; c < cb.n_codes; ++c) {
                if (taken.count(c)) continue;
                double d = detail::sq_dist(residual.data(), cb.centroid(last, c), cb.dim);
                if (d < best) best = d, best_c = c;
            }
            if (best_c < 0)
                throw data_error("assign_all_codes: collision group exceeds codebook capacity at doc '" +
                                 doc->id + "'");
            codes[last] = best_c;
        }
        taken.insert(codes[last]);
        out.push_back({doc->id, std::move(codes)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reverse index: token windows or code trie
// ---------------------------------------------------------------------------

enum class IdentifierMode { ngram, code };

class IdentifierIndex {
public:
    IdentifierMode mode() const { return mode_; }

    // N-gram mode: index every distinct window of length n (or the full
    // document when shorter) across the corpus.
    static IdentifierIndex build_ngram(const Corpus& corpus, int n) {
        if (n < 1) throw config_error("IdentifierIndex: n must be positive");
        IdentifierIndex idx;
        idx.mode_ = IdentifierMode::ngram;
        idx.ngram_n_ = n;
        for (const auto& doc : corpus.documents) {
            const int len = static_cast<int>(doc.tokens.size());
            const int win = std::min(n, len);
            for (int off = 0; off + win <= len; ++off) {
                std::vector<std::string> g(doc.tokens.begin() + off, doc.tokens.begin() + off + win);
                auto& postings = idx.postings_[join(g)];
                if (postings.empty() || postings.back() != doc.id) postings.push_back(doc.id);
                idx.insert_trie(g, /*doc_id=*/"");
            }
        }
        for (auto& [key, postings] : idx.postings_) {
            std::sort(postings.begin(), postings.end());
            postings.erase(std::unique(postings.begin(), postings.end()), postings.end());
        }
        return idx;
    }

    static IdentifierIndex build_code(const std::vector<CodeSequence>& sequences) {
        IdentifierIndex idx;
        idx.mode_ = IdentifierMode::code;
        for (const auto& cs : sequences) {
            std::vector<std::string> key;
            key.reserve(cs.codes.size());
            for (int c : cs.codes) key.push_back(std::to_string(c));
            idx.insert_trie(key, cs.doc_id);
        }
        return idx;
    }

    // Documents containing the token window as a contiguous subsequence.
    std::vector<std::string> lookup_ngram(const std::vector<std::string>& tokens) const {
        auto it = postings_.find(join(tokens));
        if (it == postings_.end()) return {};
        return it->second;
    }

    // Full code sequence -> unique document, if assigned.
    std::optional<std::string> resolve_codes(const std::vector<int>& codes) const {
        const TrieNode* node = walk(codes_key(codes));
        if (node && node->terminal && !node->doc_id.empty()) return node->doc_id;
        return std::nullopt;
    }

    // Constraint interface for decoding: children keys under a prefix, and
    // whether the prefix is a complete identifier.
    std::vector<std::string> trie_children(const std::vector<std::string>& prefix) const {
        const TrieNode* node = walk(prefix);
        std::vector<std::string> out;
        if (!node) return out;
        for (const auto& [key, child] : node->children) out.push_back(key);
        return out;
    }

    bool trie_complete(const std::vector<std::string>& prefix) const {
        const TrieNode* node = walk(prefix);
        return node && node->terminal;
    }

    bool empty() const { return root_.children.empty(); }

    static std::vector<std::string> codes_key(const std::vector<int>& codes) {
        std::vector<std::string> key;
        key.reserve(codes.size());
        for (int c : codes) key.push_back(std::to_string(c));
        return key;
    }

private:
    struct TrieNode {
        std::map<std::string, TrieNode> children;
        bool terminal = false;
        std::string doc_id;  // code mode only
    };

    static std::string join(const std::vector<std::string>& tokens) {
        std::string s;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) s += '\x1f';
            s += tokens[i];
        }
        return s;
    }

    void insert_trie(const std::vector<std::string>& seq, const std::string& doc_id) {
        TrieNode* node = &root_;
        for (const auto& k : seq) node = &node->children[k];
        node->terminal = true;
        if (!doc_id.empty()) node->doc_id = doc_id;
    }

    const TrieNode* walk(const std::vector<std::string>& seq) const {
        const TrieNode* node = &root_;
        for (const auto& k : seq) {
            auto it = node->children.find(k);
            if (it == node->children.end()) return nullptr;
            node = &it->second;
        }
        return node;
    }

    IdentifierMode mode_ = IdentifierMode::ngram;
    int ngram_n_ = 0;
    std::unordered_map<std::string, std::vector<std::string>> postings_;
    TrieNode root_;
};

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

inline void save_ngram_identifiers(const std::vector<IdentifierSet>& sets, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    for (const auto& s : sets) {
        nlohmann::json items = nlohmann::json::array();
        for (const auto& ng : s.identifiers) items.push_back(ng.tokens);
        nlohmann::json j{{"doc_id", s.doc_id}, {"kind", "ngram"}, {"items", items}};
        out << j.dump() << "\n";
    }
}

inline void save_code_sequences(const std::vector<CodeSequence>& seqs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    for (const auto& s : seqs) {
        nlohmann::json j{{"doc_id", s.doc_id}, {"kind", "code"}, {"items", {s.codes}}};
        out << j.dump() << "\n";
    }
}

inline void save_codebook(const Codebook& cb, const std::string& path) {
    nlohmann::json j;
    j["dim"] = cb.dim;
    j["n_codes"] = cb.n_codes;
    j["n_levels"] = cb.n_levels();
    j["seed"] = cb.seed;
    nlohmann::json levels = nlohmann::json::array();
    for (const auto& level : cb.levels) {
        nlohmann::json rows = nlohmann::json::array();
        for (int c = 0; c < cb.n_codes; ++c) {
            rows.push_back(std::vector<double>(level.begin() + static_cast<std::size_t>(c) * cb.dim,
                                               level.begin() + static_cast<std::size_t>(c + 1) * cb.dim));
        }
        levels.push_back(rows);
    }
    j["levels"] = levels;
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline Codebook load_codebook(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("codebook file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("codebook file " + path + ": " + e.what());
    }
    Codebook cb;
    cb.dim = j.at("dim").get<int>();
    cb.n_codes = j.at("n_codes").get<int>();
    cb.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& level : j.at("levels")) {
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(cb.n_codes) * cb.dim);
        for (const auto& row : level)
            for (const auto& x : row) flat.push_back(x.get<double>());
        if (static_cast<int>(flat.size()) != cb.n_codes * cb.dim)
            throw data_error("codebook file " + path + ": centroid shape mismatch");
        cb.levels.push_back(std::move(flat));
    }
    if (cb.n_levels() != j.at("n_levels").get<int>())
        throw data_error("codebook file " + path + ": level count mismatch");
    return cb;
}

// Mean squared reconstruction error of residual quantization at a given
// number of levels (uses the first `levels` levels of the codebook).
inline double reconstruction_error(const std::vector<std::vector<double>>& vectors,
                                   const Codebook& cb, int levels) {
    double total = 0.0;
    for (const auto& v : vectors) {
        std::vector<double> residual = v;
        for (int level = 0; level < levels; ++level) {
            double best = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (int c = 0; c < cb.n_codes; ++c) {
                double d = detail::sq_dist(residual.data(), cb.centroid(level, c), cb.dim);
                if (d < best) best = d, best_c = c;
            }
            const double* ctr = cb.centroid(level, best_c);
            for (int j = 0; j < cb.dim; ++j) residual[j] -= ctr[j];
        }
        for (double x : residual) total += x * x;
    }
    return total / static_cast<double>(vectors.size());
}

}  // namespace genret
