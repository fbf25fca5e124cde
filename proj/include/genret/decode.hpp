#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "genret/common.hpp"
#include "genret/identifier.hpp"
#include "genret/seqmodel.hpp"

namespace genret {

enum class ConstraintKind { none, ngram_trie, code_trie };

struct BeamConfig {
    int beam_size = 10;
    int max_len = 16;
    ConstraintKind constraint = ConstraintKind::none;

    void validate() const {
        if (beam_size < 1) throw config_error("BeamConfig: beam_size must be >= 1");
        if (max_len < 1) throw config_error("BeamConfig: max_len must be >= 1");
    }
};

struct GeneratedIdentifier {
    std::vector<int> tokens;  // token ids, without the terminating EOS
    double logprob = 0.0;
    bool finished = false;  // reached EOS (vs cut off at max_len)
};

namespace detail {

struct Hypothesis {
    std::vector<int> tokens;
    double logprob = 0.0;
    std::vector<double> hidden;
};

struct Candidate {
    int parent = 0;
    int token = 0;
    double logprob = 0.0;
    bool finish = false;
};

}  // namespace detail

// Length-synchronous beam search. Each step expands every live hypothesis
// over the allowed tokens, keeps the top-B candidates by cumulative logprob
// (ties -> lexicographically smaller token sequence), and retires EOS
// candidates into the result pool. Returns the top-B finished sequences,
// padded with the best unfinished hypotheses at max_len.
inline std::vector<GeneratedIdentifier> beam_search(const SeqModel& model,
                                                    std::span<const int> query_ids,
                                                    const BeamConfig& bc,
                                                    const Vocab* vocab = nullptr,
                                                    const IdentifierIndex* index = nullptr) {
    bc.validate();
    const bool constrained = bc.constraint != ConstraintKind::none;
    if (constrained) {
        if (!index || !vocab) throw config_error("beam_search: constraint requires index and vocab");
        if (index->empty()) throw data_error("beam_search: constraint structure is empty");
    }
    const int v = model.cfg.vocab_size;
    auto ctx = query_context(model, query_ids);

    auto token_key = [&](int id) -> std::string {
        // ngram tries are keyed by surface tokens, code tries by code numbers
        if (bc.constraint == ConstraintKind::ngram_trie) return vocab->token_of(id);
        const std::string& t = vocab->token_of(id);  // "<c17>" -> "17"
        return t.substr(2, t.size() - 3);
    };
    auto token_id_for_key = [&](const std::string& key) -> int {
        if (bc.constraint == ConstraintKind::ngram_trie) return vocab->id_of(key);
        return vocab->code_token_id(std::stoi(key));
    };

    std::vector<detail::Hypothesis> live(1);
    live[0].hidden.assign(model.cfg.hidden_dim, 0.0);
    std::vector<GeneratedIdentifier> pool;

    auto seq_less = [](const std::vector<int>& a, const std::vector<int>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };

    for (int step = 0; step < bc.max_len && !live.empty(); ++step) {
        std::vector<detail::Candidate> cands;
        std::vector<std::vector<double>> probs(live.size());
        for (std::size_t i = 0; i < live.size(); ++i) {
            auto& hyp = live[i];
            const int prev = hyp.tokens.empty() ? Vocab::bos : hyp.tokens.back();
            std::vector<double> h = hyp.hidden;
            probs[i] = model_step(model, h, prev, ctx);
            hyp.hidden = std::move(h);

            if (!constrained) {
                for (int tok = 0; tok < v; ++tok)
                    cands.push_back({static_cast<int>(i), tok,
                                     hyp.logprob + std::log(std::max(probs[i][tok], 1e-300)),
                                     tok == Vocab::eos});
            } else {
                std::vector<std::string> prefix;
                prefix.reserve(hyp.tokens.size());
                for (int id : hyp.tokens) prefix.push_back(token_key(id));
                for (const auto& key : index->trie_children(prefix)) {
                    const int tok = token_id_for_key(key);
                    if (tok == Vocab::unk || tok < 0 || tok >= v) continue;
                    cands.push_back({static_cast<int>(i), tok,
                                     hyp.logprob + std::log(std::max(probs[i][tok], 1e-300)), false});
                }
                if (index->trie_complete(prefix))
                    cands.push_back({static_cast<int>(i), Vocab::eos,
                                     hyp.logprob + std::log(std::max(probs[i][Vocab::eos], 1e-300)),
                                     true});
            }
        }

        std::sort(cands.begin(), cands.end(), [&](const detail::Candidate& a,
                                                  const detail::Candidate& b) {
            if (a.logprob != b.logprob) return a.logprob > b.logprob;
            // Tie: compare resulting token sequences lexicographically.
            const auto& pa = live[a.parent].tokens;
            const auto& pb = live[b.parent].tokens;
            std::vector<int> sa = pa, sb = pb;
            if (!a.finish) sa.push_back(a.token);
            if (!b.finish) sb.push_back(b.token);
            if (sa != sb) return seq_less(sa, sb);
            return a.finish && !b.finish;
        });

        // Top-B candidates share the beam; EOS candidates retire into the
        // pool, the rest stay live. The hidden state computed during
        // expansion is already h_{t+1} and does not depend on the chosen
        // token, so children just copy it.
        const std::size_t take = std::min<std::size_t>(cands.size(), bc.beam_size);
        std::vector<detail::Hypothesis> next;
        for (std::size_t ci = 0; ci < take; ++ci) {
            const auto& c = cands[ci];
            if (c.finish) {
                pool.push_back({live[c.parent].tokens, c.logprob, true});
            } else {
                detail::Hypothesis h;
                h.tokens = live[c.parent].tokens;
                h.tokens.push_back(c.token);
                h.logprob = c.logprob;
                h.hidden = live[c.parent].hidden;
                next.push_back(std::move(h));
            }
        }
        live = std::move(next);
    }

    // Unfinished hypotheses at max_len pad the result.
    std::vector<GeneratedIdentifier> unfinished;
    for (auto& hyp : live)
        unfinished.push_back({std::move(hyp.tokens), hyp.logprob, false});

    auto order = [&](const GeneratedIdentifier& a, const GeneratedIdentifier& b) {
        if (a.logprob != b.logprob) return a.logprob > b.logprob;
        return seq_less(a.tokens, b.tokens);
    };
    std::sort(pool.begin(), pool.end(), order);
    std::sort(unfinished.begin(), unfinished.end(), order);

    std::vector<GeneratedIdentifier> out;
    for (auto& g : pool) {
        if (static_cast<int>(out.size()) >= bc.beam_size) break;
        out.push_back(std::move(g));
    }
    for (auto& g : unfinished) {
        if (static_cast<int>(out.size()) >= bc.beam_size) break;
        out.push_back(std::move(g));
    }
    return out;
}

// ---------------------------------------------------------------------------
// FLOPs accounting
// ---------------------------------------------------------------------------

struct FlopsReport {
    long long flops_per_query = 0;
    int beam_size = 0;
    int steps = 0;
    long long per_step = 0;
};

// Analytical decode cost: two FLOPs per multiply-accumulate across the
// recurrence and output matrices; biases and tanh excluded. Query encoding
// is not counted.
inline FlopsReport count_flops(const ModelConfig& cfg, const BeamConfig& bc, int steps) {
    cfg.validate();
    bc.validate();
    if (steps < 1) throw data_error("count_flops: steps must be >= 1");
    if (steps > cfg.max_len) throw data_error("count_flops: steps exceeds max_len");
    const long long d = cfg.hidden_dim, v = cfg.vocab_size;
    FlopsReport r;
    r.beam_size = bc.beam_size;
    r.steps = steps;
    r.per_step = 2 * (3 * d * d + d * v);
    r.flops_per_query = static_cast<long long>(bc.beam_size) * steps * r.per_step;
    return r;
}

// ---------------------------------------------------------------------------
// Document scoring
// ---------------------------------------------------------------------------

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::vector<ScoredDoc> docs;  // (score desc, doc_id asc)
};

// N-gram mode: every document containing a generated window accrues
// exp(logprob / length); code mode: a full sequence resolves to at most one
// document scored by exp(logprob).
inline RankedList score_documents(const std::vector<GeneratedIdentifier>& generated,
                                  const IdentifierIndex& index, const Vocab& vocab, int k,
                                  IdentifierMode mode, const std::string& query_id = "") {
    if (k < 1) throw config_error("score_documents: k must be positive");
    std::unordered_map<std::string, double> scores;
    for (const auto& g : generated) {
        if (g.tokens.empty()) continue;
        if (mode == IdentifierMode::ngram) {
            std::vector<std::string> toks;
            toks.reserve(g.tokens.size());
            for (int id : g.tokens) toks.push_back(vocab.token_of(id));
            const double w = std::exp(g.logprob / static_cast<double>(g.tokens.size()));
            for (const auto& doc : index.lookup_ngram(toks)) scores[doc] += w;
        } else {
            std::vector<int> codes;
            codes.reserve(g.tokens.size());
            bool ok = true;
            for (int id : g.tokens) {
                const std::string& t = vocab.token_of(id);
                if (t.size() < 4 || t[0] != '<' || t[1] != 'c') {
                    ok = false;
                    break;
                }
                codes.push_back(std::stoi(t.substr(2, t.size() - 3)));
            }
            if (!ok) continue;
            if (auto doc = index.resolve_codes(codes)) scores[*doc] += std::exp(g.logprob);
        }
    }
    RankedList out;
    out.query_id = query_id;
    out.docs.reserve(scores.size());
    for (auto& [doc, s] : scores) out.docs.push_back({doc, s});
    std::sort(out.docs.begin(), out.docs.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (static_cast<int>(out.docs.size()) > k) out.docs.resize(k);
    return out;
}

}  // namespace genret
