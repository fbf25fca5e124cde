#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "genret/common.hpp"
#include "genret/corpus.hpp"
#include "genret/identifier.hpp"

namespace genret {

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

class Vocab {
public:
    static constexpr int pad = 0;
    static constexpr int bos = 1;
    static constexpr int eos = 2;
    static constexpr int unk = 3;

    Vocab() = default;

    int size() const { return static_cast<int>(tokens_.size()); }
    int n_code_tokens() const { return n_code_; }

    int id_of(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? unk : it->second;
    }

    const std::string& token_of(int id) const { return tokens_.at(id); }

    // Code c -> id of token "<c>".
    int code_token_id(int code) const {
        if (code < 0 || code >= n_code_) throw data_error("code token out of range");
        return size() - n_code_ + code;
    }

    std::vector<int> encode(const std::vector<std::string>& tokens) const {
        std::vector<int> out;
        out.reserve(tokens.size());
        for (const auto& t : tokens) out.push_back(id_of(t));
        return out;
    }

    static Vocab from_tokens(std::vector<std::string> tokens, int n_code) {
        Vocab v;
        v.tokens_ = std::move(tokens);
        v.n_code_ = n_code;
        for (int i = 0; i < v.size(); ++i) v.ids_[v.tokens_[i]] = i;
        return v;
    }

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    int n_code_ = 0;
};

// Specials first, corpus tokens by (frequency desc, lexicographic), code
// tokens appended last.
inline Vocab build_vocab(const Corpus& corpus, int code_tokens = 0) {
    if (corpus.documents.empty()) throw data_error("build_vocab: empty corpus");
    std::map<std::string, long long> freq;
    for (const auto& d : corpus.documents)
        for (const auto& t : d.tokens) ++freq[t];
    for (const auto& q : corpus.queries)
        for (const auto& t : q.tokens) ++freq[t];

    std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> tokens = {"<pad>", "<bos>", "<eos>", "<unk>"};
    for (const auto& [tok, _] : items) tokens.push_back(tok);
    for (int c = 0; c < code_tokens; ++c) tokens.push_back("<c" + std::to_string(c) + ">");
    return Vocab::from_tokens(std::move(tokens), code_tokens);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelConfig {
    int hidden_dim = 32;  // d
    int vocab_size = 0;   // V
    int max_len = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_dim < 2) throw config_error("ModelConfig: hidden_dim must be >= 2");
        if (vocab_size < 5) throw config_error("ModelConfig: vocab_size must be >= 5");
        if (max_len < 1) throw config_error("ModelConfig: max_len must be >= 1");
    }
};

// Single-layer tanh recurrence conditioned on the mean query embedding:
//   h_t = tanh(W_h h_{t-1} + W_x E[y_{t-1}] + W_q qbar + b),  h_0 = 0
//   logits_t = W_o h_t + b_o
// y_0 is BOS. All matrices row-major; w_o is stored V x d so logits are
// row-dot-h.
struct SeqModel {
    ModelConfig cfg;
    std::vector<double> emb;  // V x d
    std::vector<double> w_h;  // d x d
    std::vector<double> w_x;  // d x d
    std::vector<double> w_q;  // d x d
    std::vector<double> b;    // d
    std::vector<double> w_o;  // V x d
    std::vector<double> b_o;  // V
};

inline long long non_embedding_param_count(const ModelConfig& cfg) {
    cfg.validate();
    const long long d = cfg.hidden_dim, v = cfg.vocab_size;
    return 3 * d * d + d + d * v + v;
}

inline SeqModel init_model(const ModelConfig& cfg) {
    cfg.validate();
    SeqModel m;
    m.cfg = cfg;
    const int d = cfg.hidden_dim, v = cfg.vocab_size;
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Rng rng(cfg.seed);
    auto fill = [&](std::vector<double>& w, std::size_t n) {
        w.resize(n);
        for (auto& x : w) x = rng.uniform(-bound, bound);
    };
    fill(m.emb, static_cast<std::size_t>(v) * d);
    fill(m.w_h, static_cast<std::size_t>(d) * d);
    fill(m.w_x, static_cast<std::size_t>(d) * d);
    fill(m.w_q, static_cast<std::size_t>(d) * d);
    m.b.assign(d, 0.0);
    fill(m.w_o, static_cast<std::size_t>(v) * d);
    m.b_o.assign(v, 0.0);
    return m;
}

namespace detail {

inline void matvec(const double* m, int rows, int cols, const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* row = m + static_cast<std::size_t>(r) * cols;
        double s = 0.0;
        for (int c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
}

// y += m^T x  (m is rows x cols, x has rows entries, y has cols entries)
inline void matvec_t_acc(const double* m, int rows, int cols, const double* x, double* y) {
    for (int r = 0; r < rows; ++r) {
        const double* row = m + static_cast<std::size_t>(r) * cols;
        const double xr = x[r];
        if (xr == 0.0) continue;
        for (int c = 0; c < cols; ++c) y[c] += xr * row[c];
    }
}

// m += scale * a b^T
inline void outer_acc(double* m, const double* a, const double* b, int rows, int cols,
                      double scale) {
    for (int r = 0; r < rows; ++r) {
        double* row = m + static_cast<std::size_t>(r) * cols;
        const double ar = scale * a[r];
        for (int c = 0; c < cols; ++c) row[c] += ar * b[c];
    }
}

inline void softmax(std::vector<double>& logits) {
    double mx = logits[0];
    for (double x : logits) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : logits) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : logits) x /= sum;
}

inline std::vector<double> query_mean_embedding(const SeqModel& m, std::span<const int> query_ids) {
    const int d = m.cfg.hidden_dim;
    std::vector<double> qbar(d, 0.0);
    if (query_ids.empty()) return qbar;
    for (int id : query_ids) {
        if (id < 0 || id >= m.cfg.vocab_size) throw data_error("query token id out of range");
        const double* e = m.emb.data() + static_cast<std::size_t>(id) * d;
        for (int j = 0; j < d; ++j) qbar[j] += e[j];
    }
    for (double& x : qbar) x /= static_cast<double>(query_ids.size());
    return qbar;
}

}  // namespace detail

// One recurrence step. `h` is updated in place; returns the next-token
// probability distribution.
inline std::vector<double> model_step(const SeqModel& m, std::vector<double>& h, int prev_token,
                                      const std::vector<double>& qbar_plus_b) {
    const int d = m.cfg.hidden_dim, v = m.cfg.vocab_size;
    if (prev_token < 0 || prev_token >= v) throw data_error("token id out of range");
    std::vector<double> a(qbar_plus_b);
    std::vector<double> tmp(d);
    detail::matvec(m.w_h.data(), d, d, h.data(), tmp.data());
    for (int j = 0; j < d; ++j) a[j] += tmp[j];
    detail::matvec(m.w_x.data(), d, d, m.emb.data() + static_cast<std::size_t>(prev_token) * d,
                   tmp.data());
    for (int j = 0; j < d; ++j) a[j] += tmp[j];
    for (int j = 0; j < d; ++j) h[j] = std::tanh(a[j]);
    std::vector<double> probs(v);
    detail::matvec(m.w_o.data(), v, d, h.data(), probs.data());
    for (int i = 0; i < v; ++i) probs[i] += m.b_o[i];
    detail::softmax(probs);
    return probs;
}

// Precomputed per-query constant W_q qbar + b.
inline std::vector<double> query_context(const SeqModel& m, std::span<const int> query_ids) {
    const int d = m.cfg.hidden_dim;
    auto qbar = detail::query_mean_embedding(m, query_ids);
    std::vector<double> ctx(d);
    detail::matvec(m.w_q.data(), d, d, qbar.data(), ctx.data());
    for (int j = 0; j < d; ++j) ctx[j] += m.b[j];
    return ctx;
}

// Teacher-forced sum of -log P(y_t | q, y_<t), including the EOS position.
// `target` excludes the implicit terminating EOS.
inline double sequence_loss(const SeqModel& m, std::span<const int> query_ids,
                            std::span<const int> target) {
    if (target.empty()) throw data_error("sequence_loss: empty target");
    for (int id : target)
        if (id < 0 || id >= m.cfg.vocab_size) throw data_error("target token id out of range");
    const int d = m.cfg.hidden_dim;
    auto ctx = query_context(m, query_ids);
    std::vector<double> h(d, 0.0);
    double loss = 0.0;
    int prev = Vocab::bos;
    for (std::size_t t = 0; t <= target.size(); ++t) {
        auto probs = model_step(m, h, prev, ctx);
        const int label = t < target.size() ? target[t] : Vocab::eos;
        loss -= std::log(std::max(probs[label], 1e-300));
        prev = label;
    }
    return loss;
}

struct TrainPair {
    std::vector<int> query_ids;
    std::vector<int> target;  // excludes the implicit terminating EOS
};

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 1;
    int batch_size = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (learning_rate <= 0.0 || learning_rate >= 1.0)
            throw config_error("TrainConfig: learning_rate must be in (0, 1)");
        if (epochs < 1) throw config_error("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw config_error("TrainConfig: batch_size must be >= 1");
    }
};

namespace detail {

struct Gradients {
    std::vector<double> emb, w_h, w_x, w_q, b, w_o, b_o;

    explicit Gradients(const ModelConfig& cfg) {
        const std::size_t d = cfg.hidden_dim, v = cfg.vocab_size;
        emb.assign(v * d, 0.0);
        w_h.assign(d * d, 0.0);
        w_x.assign(d * d, 0.0);
        w_q.assign(d * d, 0.0);
        b.assign(d, 0.0);
        w_o.assign(v * d, 0.0);
        b_o.assign(v, 0.0);
    }
};

// Exact BPTT for one pair; accumulates gradients of the summed CE loss
// scaled by `scale`. Returns the (unscaled) summed loss.
inline double backprop_pair(const SeqModel& m, const TrainPair& pair, double scale,
                            Gradients& g) {
    const int d = m.cfg.hidden_dim, v = m.cfg.vocab_size;
    const std::size_t steps = pair.target.size() + 1;  // + EOS

    auto qbar = query_mean_embedding(m, pair.query_ids);
    std::vector<double> ctx(d);
    matvec(m.w_q.data(), d, d, qbar.data(), ctx.data());
    for (int j = 0; j < d; ++j) ctx[j] += m.b[j];

    // Forward with caches.
    std::vector<std::vector<double>> hs(steps + 1, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> probs(steps);
    std::vector<int> inputs(steps), labels(steps);
    double loss = 0.0;
    int prev = Vocab::bos;
    for (std::size_t t = 0; t < steps; ++t) {
        inputs[t] = prev;
        labels[t] = t < pair.target.size() ? pair.target[t] : Vocab::eos;
        hs[t + 1] = hs[t];
        probs[t] = model_step(m, hs[t + 1], prev, ctx);
        loss -= std::log(std::max(probs[t][labels[t]], 1e-300));
        prev = labels[t];
    }

    // Backward.
    std::vector<double> dh(d, 0.0), da(d, 0.0), dqbar(d, 0.0);
    for (std::size_t t = steps; t-- > 0;) {
        std::vector<double> dlogits = probs[t];
        dlogits[labels[t]] -= 1.0;

        // dh = W_o^T dlogits + W_h^T da_{t+1}
        std::fill(dh.begin(), dh.end(), 0.0);
        matvec_t_acc(m.w_o.data(), v, d, dlogits.data(), dh.data());
        matvec_t_acc(m.w_h.data(), d, d, da.data(), dh.data());

        outer_acc(g.w_o.data(), dlogits.data(), hs[t + 1].data(), v, d, scale);
        for (int i = 0; i < v; ++i) g.b_o[i] += scale * dlogits[i];

        for (int j = 0; j < d; ++j) da[j] = dh[j] * (1.0 - hs[t + 1][j] * hs[t + 1][j]);

        const double* e_in = m.emb.data() + static_cast<std::size_t>(inputs[t]) * d;
        outer_acc(g.w_h.data(), da.data(), hs[t].data(), d, d, scale);
        outer_acc(g.w_x.data(), da.data(), e_in, d, d, scale);
        outer_acc(g.w_q.data(), da.data(), qbar.data(), d, d, scale);
        for (int j = 0; j < d; ++j) g.b[j] += scale * da[j];

        // Input embedding gradient: W_x^T da into row inputs[t].
        double* ge = g.emb.data() + static_cast<std::size_t>(inputs[t]) * d;
        std::vector<double> tmp(d, 0.0);
        matvec_t_acc(m.w_x.data(), d, d, da.data(), tmp.data());
        for (int j = 0; j < d; ++j) ge[j] += scale * tmp[j];

        // Query conditioning gradient flows through every step.
        std::fill(tmp.begin(), tmp.end(), 0.0);
        matvec_t_acc(m.w_q.data(), d, d, da.data(), tmp.data());
        for (int j = 0; j < d; ++j) dqbar[j] += tmp[j];
    }
    if (!pair.query_ids.empty()) {
        const double inv = scale / static_cast<double>(pair.query_ids.size());
        for (int id : pair.query_ids) {
            double* ge = g.emb.data() + static_cast<std::size_t>(id) * d;
            for (int j = 0; j < d; ++j) ge[j] += inv * dqbar[j];
        }
    }
    return loss;
}

}  // namespace detail

// Mini-batch gradient descent on the mean per-token cross-entropy. Pairs are
// reshuffled each epoch from the training seed; the whole procedure is a
// pure function of (model, pairs, tc).
inline SeqModel train(SeqModel model, const std::vector<TrainPair>& pairs, const TrainConfig& tc) {
    tc.validate();
    for (const auto& p : pairs) {
        if (p.target.empty()) throw data_error("train: empty target");
        if (static_cast<int>(p.target.size()) + 1 > model.cfg.max_len)
            throw data_error("train: target exceeds max_len");
        for (int id : p.target)
            if (id < 0 || id >= model.cfg.vocab_size) throw data_error("train: token id out of range");
    }

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        Rng rng(tc.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1));
        rng.shuffle(order);
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + tc.batch_size);
            std::size_t total_tokens = 0;
            for (std::size_t i = start; i < end; ++i)
                total_tokens += pairs[order[i]].target.size() + 1;

            detail::Gradients g(model.cfg);
            const double scale = 1.0 / static_cast<double>(total_tokens);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i)
                batch_loss += detail::backprop_pair(model, pairs[order[i]], scale, g);
            if (!std::isfinite(batch_loss))
                throw numeric_error("train: non-finite loss in batch " + std::to_string(batch_index));

            const double lr = tc.learning_rate;
            auto update = [lr](std::vector<double>& w, const std::vector<double>& grad) {
                for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grad[i];
            };
            update(model.emb, g.emb);
            update(model.w_h, g.w_h);
            update(model.w_x, g.w_x);
            update(model.w_q, g.w_q);
            update(model.b, g.b);
            update(model.w_o, g.w_o);
            update(model.b_o, g.b_o);
        }
    }
    return model;
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------

inline void save_checkpoint(const SeqModel& m, const Vocab& vocab, const std::string& path) {
    nlohmann::json j;
    j["config"] = {{"hidden_dim", m.cfg.hidden_dim},
                   {"vocab_size", m.cfg.vocab_size},
                   {"max_len", m.cfg.max_len},
                   {"seed", m.cfg.seed}};
    j["vocab"] = {{"tokens", vocab.tokens()}, {"code_tokens", vocab.n_code_tokens()}};
    j["params"] = {{"emb", m.emb}, {"w_h", m.w_h}, {"w_x", m.w_x}, {"w_q", m.w_q},
                   {"b", m.b},     {"w_o", m.w_o}, {"b_o", m.b_o}};
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    out << j.dump() << "\n";
}

inline std::pair<SeqModel, Vocab> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("checkpoint file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("checkpoint file " + path + ": " + e.what());
    }
    SeqModel m;
    const auto& cfg = j.at("config");
    m.cfg.hidden_dim = cfg.at("hidden_dim").get<int>();
    m.cfg.vocab_size = cfg.at("vocab_size").get<int>();
    m.cfg.max_len = cfg.at("max_len").get<int>();
    m.cfg.seed = cfg.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    m.emb = p.at("emb").get<std::vector<double>>();
    m.w_h = p.at("w_h").get<std::vector<double>>();
    m.w_x = p.at("w_x").get<std::vector<double>>();
    m.w_q = p.at("w_q").get<std::vector<double>>();
    m.b = p.at("b").get<std::vector<double>>();
    m.w_o = p.at("w_o").get<std::vector<double>>();
    m.b_o = p.at("b_o").get<std::vector<double>>();
    Vocab vocab = Vocab::from_tokens(j.at("vocab").at("tokens").get<std::vector<std::string>>(),
                                     j.at("vocab").at("code_tokens").get<int>());
    if (vocab.size() != m.cfg.vocab_size)
        throw data_error("checkpoint file " + path + ": vocab size mismatch");
    return {std::move(m), std::move(vocab)};
}

}  // namespace genret
