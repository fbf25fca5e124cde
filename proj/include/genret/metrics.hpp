#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "genret/common.hpp"
#include "genret/corpus.hpp"
#include "genret/decode.hpp"
#include "genret/identifier.hpp"
#include "genret/seqmodel.hpp"

namespace genret {

// ---------------------------------------------------------------------------
// Contrastive generation loss
// ---------------------------------------------------------------------------

struct EvalRecord {
    std::string query_id;
    double pos_loss = 0.0;
    std::vector<double> neg_losses;
};

// -log( sum(neg) / (pos + sum(neg)) ), computed on raw loss values.
inline double cgl(const EvalRecord& record) {
    if (record.neg_losses.empty()) throw data_error("cgl: no negative losses");
    double neg_sum = 0.0;
    for (double x : record.neg_losses) {
        if (x < 0.0) throw data_error("cgl: negative loss value");
        neg_sum += x;
    }
    if (record.pos_loss < 0.0) throw data_error("cgl: negative loss value");
    const double total = record.pos_loss + neg_sum;
    if (total <= 0.0) throw data_error("cgl: all losses are zero; ratio undefined");
    return -std::log(neg_sum / total);
}

// ---------------------------------------------------------------------------
// Ranking metrics (binary relevance)
// ---------------------------------------------------------------------------

inline std::vector<std::string> relevant_docs(const std::vector<Judgment>& judgments,
                                              const std::string& query_id) {
    std::vector<std::string> out;
    for (const auto& j : judgments)
        if (j.query_id == query_id && j.relevance == 1) out.push_back(j.doc_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline double recall_at_k(const RankedList& ranked, const std::vector<std::string>& relevant,
                          int k) {
    if (relevant.empty()) throw data_error("recall_at_k: no relevant documents for query");
    std::unordered_set<std::string> rel(relevant.begin(), relevant.end());
    int hits = 0;
    const int depth = std::min<int>(k, static_cast<int>(ranked.docs.size()));
    for (int i = 0; i < depth; ++i)
        if (rel.count(ranked.docs[i].doc_id)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

inline double mr_at_k(const RankedList& ranked, const std::vector<std::string>& relevant, int k) {
    return 1.0 - recall_at_k(ranked, relevant, k);
}

struct RankMetrics {
    double ndcg = 0.0;
    double mrr = 0.0;
    double map = 0.0;
};

inline RankMetrics ndcg_mrr_map(const RankedList& ranked, const std::vector<std::string>& relevant,
                                int k) {
    if (relevant.empty()) throw data_error("ndcg_mrr_map: no relevant documents for query");
    std::unordered_set<std::string> rel(relevant.begin(), relevant.end());
    const int depth = std::min<int>(k, static_cast<int>(ranked.docs.size()));

    RankMetrics m;
    double dcg = 0.0;
    int hits = 0;
    double precision_sum = 0.0;
    for (int i = 0; i < depth; ++i) {
        if (!rel.count(ranked.docs[i].doc_id)) continue;
        dcg += 1.0 / std::log2(static_cast<double>(i + 2));
        if (m.mrr == 0.0) m.mrr = 1.0 / static_cast<double>(i + 1);
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    const int ideal = std::min<int>(static_cast<int>(relevant.size()), k);
    double idcg = 0.0;
    for (int i = 0; i < ideal; ++i) idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
    m.map = precision_sum / static_cast<double>(ideal);
    return m;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw data_error("pearson: need equal-length series of at least 3 points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
    mx /= n, my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw data_error("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// End-to-end CGL evaluation
// ---------------------------------------------------------------------------

// Per-document identifiers used for generation-loss scoring: either the
// document's n-gram set or its code sequence, as vocab token ids.
struct DocTargets {
    std::unordered_map<std::string, std::vector<std::vector<int>>> by_doc;

    static DocTargets from_ngrams(const std::vector<IdentifierSet>& sets, const Vocab& vocab) {
        DocTargets t;
        for (const auto& s : sets) {
            auto& seqs = t.by_doc[s.doc_id];
            for (const auto& ng : s.identifiers) seqs.push_back(vocab.encode(ng.tokens));
        }
        return t;
    }

    static DocTargets from_codes(const std::vector<CodeSequence>& seqs, const Vocab& vocab) {
        DocTargets t;
        for (const auto& cs : seqs) {
            std::vector<int> ids;
            ids.reserve(cs.codes.size());
            for (int c : cs.codes) ids.push_back(vocab.code_token_id(c));
            t.by_doc[cs.doc_id].push_back(std::move(ids));
        }
        return t;
    }
};

struct CglResult {
    double mean_cgl = 0.0;
    std::vector<EvalRecord> records;
    std::vector<double> per_query_cgl;
};

// Generation loss for one (query, document) pair: mean sequence_loss over
// the document's identifier sequences (a single sequence in code mode).
inline double document_loss(const SeqModel& model, std::span<const int> query_ids,
                            const std::vector<std::vector<int>>& targets) {
    if (targets.empty()) throw data_error("document_loss: document has no identifiers");
    double sum = 0.0;
    for (const auto& t : targets) sum += sequence_loss(model, query_ids, t);
    return sum / static_cast<double>(targets.size());
}

// CGL over a set of queries. The positive document is the first positive by
// doc-id order; negatives are sampled uniformly without replacement from
// documents with no positive judgment for the query, seeded per query so
// evaluation order cannot change results.
inline CglResult cgl_eval(const SeqModel& model, const Vocab& vocab, const Corpus& corpus,
                          const DocTargets& targets, int n_neg, std::uint64_t seed,
                          const std::vector<Query>* eval_queries = nullptr) {
    if (n_neg < 1) throw config_error("cgl_eval: n_neg must be positive");
    const std::vector<Query>& queries = eval_queries ? *eval_queries : corpus.queries;

    // positive doc ids per query
    std::unordered_map<std::string, std::vector<std::string>> positives;
    for (const auto& j : corpus.judgments)
        if (j.relevance == 1) positives[j.query_id].push_back(j.doc_id);

    std::vector<std::string> all_doc_ids;
    all_doc_ids.reserve(corpus.documents.size());
    for (const auto& d : corpus.documents) all_doc_ids.push_back(d.id);
    std::sort(all_doc_ids.begin(), all_doc_ids.end());

    CglResult result;
    double total = 0.0;
    for (const auto& q : queries) {
        auto pit = positives.find(q.id);
        if (pit == positives.end() || pit->second.empty())
            throw data_error("cgl_eval: query '" + q.id + "' has no positive judgment");
        auto pos_ids = pit->second;
        std::sort(pos_ids.begin(), pos_ids.end());
        const std::string& pos_doc = pos_ids.front();

        std::unordered_set<std::string> pos_set(pos_ids.begin(), pos_ids.end());
        std::vector<std::string> candidates;
        candidates.reserve(all_doc_ids.size());
        for (const auto& id : all_doc_ids)
            if (!pos_set.count(id)) candidates.push_back(id);
        if (static_cast<int>(candidates.size()) < n_neg)
            throw data_error("cgl_eval: fewer than n_neg non-relevant documents for query '" +
                             q.id + "'");

        // Partial Fisher-Yates keyed by (seed, query id).
        Rng rng(seed ^ fnv1a64(q.id));
        for (int i = 0; i < n_neg; ++i) {
            std::size_t j = i + rng.index(candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
        }

        const auto query_ids = vocab.encode(q.tokens);
        EvalRecord rec;
        rec.query_id = q.id;
        auto tgt = targets.by_doc.find(pos_doc);
        if (tgt == targets.by_doc.end())
            throw data_error("cgl_eval: no identifiers for document '" + pos_doc + "'");
        rec.pos_loss = document_loss(model, query_ids, tgt->second);
        for (int i = 0; i < n_neg; ++i) {
            auto nit = targets.by_doc.find(candidates[i]);
            if (nit == targets.by_doc.end())
                throw data_error("cgl_eval: no identifiers for document '" + candidates[i] + "'");
            rec.neg_losses.push_back(document_loss(model, query_ids, nit->second));
        }
        const double value = cgl(rec);
        result.per_query_cgl.push_back(value);
        total += value;
        result.records.push_back(std::move(rec));
    }
    if (!queries.empty()) result.mean_cgl = total / static_cast<double>(queries.size());
    return result;
}

}  // namespace genret
