#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "genret/common.hpp"
#include "genret/corpus.hpp"
#include "genret/decode.hpp"
#include "genret/identifier.hpp"
#include "genret/metrics.hpp"
#include "genret/scalefit.hpp"
#include "genret/seqmodel.hpp"
#include "genret/svgplot.hpp"

namespace genret {

enum class SweepKind { model_size, data_size, beam };
enum class Method { ngram, codebook };

inline std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::model_size: return "model_size";
        case SweepKind::data_size: return "data_size";
        case SweepKind::beam: return "beam";
    }
    return "?";
}

inline std::string to_string(Method m) { return m == Method::ngram ? "ngram" : "codebook"; }

inline SweepKind sweep_kind_from_string(const std::string& s) {
    if (s == "model_size" || s == "model-size") return SweepKind::model_size;
    if (s == "data_size" || s == "data-size") return SweepKind::data_size;
    if (s == "beam") return SweepKind::beam;
    throw config_error("unknown sweep kind: " + s);
}

inline Method method_from_string(const std::string& s) {
    if (s == "ngram") return Method::ngram;
    if (s == "codebook") return Method::codebook;
    throw config_error("unknown method: " + s);
}

struct SweepConfig {
    SweepKind kind = SweepKind::model_size;
    Method method = Method::ngram;

    SynthConfig corpus;                         // used unless external paths given
    std::string docs_path, queries_path, qrels_path;

    std::vector<int> hidden_dims = {8, 16, 32, 64, 128};
    std::vector<long long> data_sizes;          // pair counts; empty = derived
    std::vector<int> beams = {1, 5, 10, 20, 50, 100};
    int fixed_hidden_dim = 32;

    int ngram_m = 10, ngram_n = 10;
    int code_dim = 64, code_n_codes = 256, code_n_levels = 32, code_iters = 10;

    int n_neg = 31;
    std::vector<int> k_set = {5, 20, 100};
    int retrieval_depth = 100;

    int epochs = 1;
    int batch_size = 16;
    double lr_small = 0.05;   // hidden_dim <= 32
    double lr_large = 0.01;   // hidden_dim >= 64
    double train_fraction = 0.9;

    std::uint64_t seed = 1;
    std::string out_dir;
    bool allow_short_sweep = false;  // beam sweeps may drop to 3 points

    void validate() const {
        corpus.validate();
        auto check_increasing = [](const auto& v, const char* name) {
            for (std::size_t i = 1; i < v.size(); ++i)
                if (v[i] <= v[i - 1])
                    throw config_error(std::string("SweepConfig: ") + name +
                                       " must be strictly increasing");
        };
        check_increasing(hidden_dims, "hidden_dims");
        check_increasing(data_sizes, "data_sizes");
        check_increasing(beams, "beams");
        std::size_t n_points = kind == SweepKind::model_size ? hidden_dims.size()
                               : kind == SweepKind::data_size ? data_sizes.size()
                                                              : beams.size();
        const std::size_t minimum = (kind == SweepKind::beam && allow_short_sweep) ? 3 : 4;
        if (kind == SweepKind::data_size && data_sizes.empty())
            n_points = 5;  // derived default grid
        if (n_points < minimum)
            throw config_error("SweepConfig: need at least " + std::to_string(minimum) +
                               " sweep points");
        if (n_neg < 1 || retrieval_depth < 1 || epochs < 1 || batch_size < 1)
            throw config_error("SweepConfig: counts must be positive");
        if (train_fraction <= 0.0 || train_fraction >= 1.0)
            throw config_error("SweepConfig: train_fraction must be in (0, 1)");
    }

    double lr_for(int hidden_dim) const { return hidden_dim <= 32 ? lr_small : lr_large; }
};

inline void to_json(nlohmann::json& j, const SweepConfig& c) {
    j = nlohmann::json{
        {"sweep_kind", to_string(c.kind)},
        {"method", to_string(c.method)},
        {"corpus",
         {{"n_topics", c.corpus.n_topics},
          {"docs_per_topic", c.corpus.docs_per_topic},
          {"doc_len", c.corpus.doc_len},
          {"topic_vocab", c.corpus.topic_vocab},
          {"shared_vocab", c.corpus.shared_vocab},
          {"query_len", c.corpus.query_len},
          {"queries_per_doc", c.corpus.queries_per_doc},
          {"seed", c.corpus.seed}}},
        {"docs_path", c.docs_path},
        {"queries_path", c.queries_path},
        {"qrels_path", c.qrels_path},
        {"hidden_dims", c.hidden_dims},
        {"data_sizes", c.data_sizes},
        {"beams", c.beams},
        {"fixed_hidden_dim", c.fixed_hidden_dim},
        {"ngram_m", c.ngram_m},
        {"ngram_n", c.ngram_n},
        {"code_dim", c.code_dim},
        {"code_n_codes", c.code_n_codes},
        {"code_n_levels", c.code_n_levels},
        {"code_iters", c.code_iters},
        {"n_neg", c.n_neg},
        {"k_set", c.k_set},
        {"retrieval_depth", c.retrieval_depth},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"lr_small", c.lr_small},
        {"lr_large", c.lr_large},
        {"train_fraction", c.train_fraction},
        {"seed", c.seed},
        {"allow_short_sweep", c.allow_short_sweep}};
}

inline void from_json(const nlohmann::json& j, SweepConfig& c) {
    static const std::set<std::string> known = {
        "sweep_kind",   "method",        "corpus",        "docs_path",
        "queries_path", "qrels_path",    "hidden_dims",   "data_sizes",
        "beams",        "fixed_hidden_dim", "ngram_m",    "ngram_n",
        "code_dim",     "code_n_codes",  "code_n_levels", "code_iters",
        "n_neg",        "k_set",         "retrieval_depth", "epochs",
        "batch_size",   "lr_small",      "lr_large",      "train_fraction",
        "seed",         "allow_short_sweep"};
    static const std::set<std::string> known_corpus = {
        "n_topics",   "docs_per_topic", "doc_len", "topic_vocab",
        "shared_vocab", "query_len",    "queries_per_doc", "seed"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw config_error("SweepConfig: unknown key '" + key + "'");
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    if (j.contains("sweep_kind")) c.kind = sweep_kind_from_string(j.at("sweep_kind"));
    if (j.contains("method")) c.method = method_from_string(j.at("method"));
    if (j.contains("corpus")) {
        const auto& jc = j.at("corpus");
        for (const auto& [key, value] : jc.items())
            if (!known_corpus.count(key))
                throw config_error("SweepConfig: unknown corpus key '" + key + "'");
        auto getc = [&](const char* key, auto& field) {
            if (jc.contains(key)) jc.at(key).get_to(field);
        };
        getc("n_topics", c.corpus.n_topics);
        getc("docs_per_topic", c.corpus.docs_per_topic);
        getc("doc_len", c.corpus.doc_len);
        getc("topic_vocab", c.corpus.topic_vocab);
        getc("shared_vocab", c.corpus.shared_vocab);
        getc("query_len", c.corpus.query_len);
        getc("queries_per_doc", c.corpus.queries_per_doc);
        getc("seed", c.corpus.seed);
    }
    get("docs_path", c.docs_path);
    get("queries_path", c.queries_path);
    get("qrels_path", c.qrels_path);
    get("hidden_dims", c.hidden_dims);
    get("data_sizes", c.data_sizes);
    get("beams", c.beams);
    get("fixed_hidden_dim", c.fixed_hidden_dim);
    get("ngram_m", c.ngram_m);
    get("ngram_n", c.ngram_n);
    get("code_dim", c.code_dim);
    get("code_n_codes", c.code_n_codes);
    get("code_n_levels", c.code_n_levels);
    get("code_iters", c.code_iters);
    get("n_neg", c.n_neg);
    get("k_set", c.k_set);
    get("retrieval_depth", c.retrieval_depth);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("lr_small", c.lr_small);
    get("lr_large", c.lr_large);
    get("train_fraction", c.train_fraction);
    get("seed", c.seed);
    get("allow_short_sweep", c.allow_short_sweep);
}

// ---------------------------------------------------------------------------
// Prepared pipeline state shared by all sweep points
// ---------------------------------------------------------------------------

struct Prepared {
    Corpus corpus;
    Vocab vocab;
    DocTargets targets;             // per-document eval identifiers
    std::vector<TrainPair> pairs;   // from the train split
    std::vector<Query> train_queries, test_queries;
    std::vector<CodeSequence> code_sequences;
    IdentifierIndex index;
    int max_target_len = 0;         // longest target, excluding EOS
};

// Assign identifiers, build the vocabulary, split queries 90/10, and turn
// train queries into training pairs. A document's eval identifier set is
// extracted against its first associated query (query-id order); training
// pairs use each query's own extraction.
inline Prepared prepare(const SweepConfig& cfg) {
    cfg.validate();
    Prepared prep;
    if (!cfg.docs_path.empty())
        prep.corpus = load_corpus(cfg.docs_path, cfg.queries_path, cfg.qrels_path);
    else
        prep.corpus = generate_synthetic(cfg.corpus);
    const Corpus& corpus = prep.corpus;

    // query lookup and doc -> associated queries
    std::map<std::string, const Query*> query_by_id;
    for (const auto& q : corpus.queries) query_by_id[q.id] = &q;
    std::map<std::string, std::vector<std::string>> doc_queries;
    for (const auto& j : corpus.judgments)
        if (j.relevance == 1) doc_queries[j.doc_id].push_back(j.query_id);
    for (auto& [_, qs] : doc_queries) std::sort(qs.begin(), qs.end());

    if (cfg.method == Method::ngram) {
        prep.vocab = build_vocab(corpus);
        std::vector<IdentifierSet> sets;
        const Query empty_query;
        for (const auto& doc : corpus.documents) {
            auto it = doc_queries.find(doc.id);
            const Query& q = (it != doc_queries.end() && !it->second.empty())
                                 ? *query_by_id.at(it->second.front())
                                 : empty_query;
            sets.push_back(extract_ngram_identifiers(doc, q, cfg.ngram_m, cfg.ngram_n));
        }
        prep.targets = DocTargets::from_ngrams(sets, prep.vocab);
        prep.index = IdentifierIndex::build_ngram(corpus, cfg.ngram_n);
        prep.max_target_len = cfg.ngram_n;
    } else {
        prep.vocab = build_vocab(corpus, cfg.code_n_codes);
        std::vector<std::vector<double>> vectors;
        vectors.reserve(corpus.documents.size());
        std::vector<const Document*> sorted_docs;
        for (const auto& d : corpus.documents) sorted_docs.push_back(&d);
        std::sort(sorted_docs.begin(), sorted_docs.end(),
                  [](const Document* a, const Document* b) { return a->id < b->id; });
        for (const Document* d : sorted_docs)
            vectors.push_back(embed_document(*d, cfg.code_dim, cfg.seed));
        auto cb = train_codebook(vectors, cfg.code_n_codes, cfg.code_n_levels, cfg.seed,
                                 cfg.code_iters);
        prep.code_sequences = assign_all_codes(corpus, cb);
        prep.targets = DocTargets::from_codes(prep.code_sequences, prep.vocab);
        prep.index = IdentifierIndex::build_code(prep.code_sequences);
        prep.max_target_len = cfg.code_n_levels;
    }

    // 90/10 split over queries that have a positive judgment
    std::vector<const Query*> evaluable;
    {
        std::set<std::string> with_pos;
        for (const auto& j : corpus.judgments)
            if (j.relevance == 1) with_pos.insert(j.query_id);
        for (const auto& q : corpus.queries)
            if (with_pos.count(q.id)) evaluable.push_back(&q);
    }
    if (evaluable.empty()) throw data_error("prepare: no queries with positive judgments");

    std::vector<std::size_t> order(evaluable.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(cfg.seed ^ 0x517cc1b727220a95ull);
    rng.shuffle(order);
    const std::size_t n_train =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.train_fraction *
                                                          static_cast<double>(order.size())));
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < n_train)
            prep.train_queries.push_back(*evaluable[order[i]]);
        else
            prep.test_queries.push_back(*evaluable[order[i]]);
    }
    if (prep.test_queries.empty()) prep.test_queries.push_back(prep.train_queries.back());

    // training pairs
    std::map<std::string, const Document*> doc_by_id;
    for (const auto& d : corpus.documents) doc_by_id[d.id] = &d;
    for (const auto& q : prep.train_queries) {
        std::vector<std::string> pos;
        for (const auto& j : corpus.judgments)
            if (j.relevance == 1 && j.query_id == q.id) pos.push_back(j.doc_id);
        std::sort(pos.begin(), pos.end());
        if (pos.empty()) continue;
        const std::string& doc_id = pos.front();
        const auto query_ids = prep.vocab.encode(q.tokens);
        if (cfg.method == Method::ngram) {
            auto set = extract_ngram_identifiers(*doc_by_id.at(doc_id), q, cfg.ngram_m, cfg.ngram_n);
            for (const auto& ng : set.identifiers)
                prep.pairs.push_back({query_ids, prep.vocab.encode(ng.tokens)});
        } else {
            auto it = std::find_if(prep.code_sequences.begin(), prep.code_sequences.end(),
                                   [&](const CodeSequence& cs) { return cs.doc_id == doc_id; });
            if (it == prep.code_sequences.end()) continue;
            std::vector<int> target;
            target.reserve(it->codes.size());
            for (int c : it->codes) target.push_back(prep.vocab.code_token_id(c));
            prep.pairs.push_back({query_ids, std::move(target)});
        }
    }
    return prep;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct SweepSeries {
    std::string name;                       // e.g. "cgl", "mr@5"
    std::vector<ScalingPoint> points;
    std::vector<std::string> labels;        // per point, e.g. "d=32", "B=10"
    FitResult fit;
    bool fitted = false;
};

struct RunManifest {
    std::string version = "1";
    SweepKind kind = SweepKind::model_size;
    Method method = Method::ngram;
    nlohmann::json config;
    std::uint64_t corpus_fingerprint = 0;
    std::vector<SweepSeries> series;
    std::string started_at, finished_at;
    bool failed = false;
    std::string failure;
};

inline nlohmann::json fit_to_json(const FitResult& f, const std::string& law, std::size_t n) {
    return nlohmann::json{{"law", law},
                          {"params",
                           {{"scale", f.derived_scale},
                            {"amplitude", f.amplitude},
                            {"exponent", f.exponent},
                            {"floor", f.floor}}},
                          {"r2", f.r2},
                          {"converged", f.converged},
                          {"iterations", f.iterations},
                          {"n_points", n}};
}

inline nlohmann::json manifest_to_json(const RunManifest& man) {
    nlohmann::json j;
    j["version"] = man.version;
    j["sweep_kind"] = to_string(man.kind);
    j["method"] = to_string(man.method);
    j["config"] = man.config;
    j["corpus_fingerprint"] = man.corpus_fingerprint;
    j["started_at"] = man.started_at;
    j["finished_at"] = man.finished_at;
    j["failed"] = man.failed;
    if (man.failed) j["failure"] = man.failure;
    nlohmann::json series = nlohmann::json::array();
    for (const auto& s : man.series) {
        nlohmann::json js;
        js["name"] = s.name;
        nlohmann::json pts = nlohmann::json::array();
        for (std::size_t i = 0; i < s.points.size(); ++i)
            pts.push_back({{"x", s.points[i].x},
                           {"y", s.points[i].y},
                           {"label", i < s.labels.size() ? s.labels[i] : ""}});
        js["points"] = pts;
        if (s.fitted) js["fit"] = fit_to_json(s.fit, "power_law", s.points.size());
        series.push_back(js);
    }
    j["series"] = series;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest man;
    man.version = j.value("version", "1");
    man.kind = sweep_kind_from_string(j.at("sweep_kind").get<std::string>());
    man.method = method_from_string(j.at("method").get<std::string>());
    if (j.contains("config")) man.config = j.at("config");
    man.corpus_fingerprint = j.value("corpus_fingerprint", 0ull);
    man.started_at = j.value("started_at", "");
    man.finished_at = j.value("finished_at", "");
    man.failed = j.value("failed", false);
    man.failure = j.value("failure", "");
    for (const auto& js : j.at("series")) {
        SweepSeries s;
        s.name = js.at("name").get<std::string>();
        for (const auto& p : js.at("points")) {
            s.points.push_back({p.at("x").get<double>(), p.at("y").get<double>()});
            s.labels.push_back(p.value("label", ""));
        }
        if (js.contains("fit")) {
            const auto& f = js.at("fit");
            s.fit.derived_scale = f.at("params").at("scale").get<double>();
            s.fit.amplitude = f.at("params").at("amplitude").get<double>();
            s.fit.exponent = f.at("params").at("exponent").get<double>();
            s.fit.floor = f.at("params").at("floor").get<double>();
            s.fit.r2 = f.at("r2").get<double>();
            s.fit.converged = f.at("converged").get<bool>();
            s.fitted = true;
        }
        man.series.push_back(std::move(s));
    }
    return man;
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("manifest file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw data_error("manifest file " + path + ": " + e.what());
    }
    return manifest_from_json(j);
}

namespace detail {

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// points.csv: one row per manifest point. Deterministic bytes for a
// deterministic manifest (timestamps stay out of this file).
inline std::string points_csv(const RunManifest& man) {
    std::string csv = "series,label,x,y\n";
    for (const auto& s : man.series)
        for (std::size_t i = 0; i < s.points.size(); ++i)
            csv += s.name + "," + (i < s.labels.size() ? s.labels[i] : "") + "," +
                   detail::csv_double(s.points[i].x) + "," + detail::csv_double(s.points[i].y) +
                   "\n";
    return csv;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline RunManifest run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    RunManifest man;
    man.kind = cfg.kind;
    man.method = cfg.method;
    man.config = cfg;
    man.started_at = detail::iso_timestamp();

    Prepared prep = prepare(cfg);
    man.corpus_fingerprint = prep.corpus.fingerprint();

    auto model_config = [&](int d) {
        ModelConfig mc;
        mc.hidden_dim = d;
        mc.vocab_size = prep.vocab.size();
        mc.max_len = prep.max_target_len + 2;
        mc.seed = cfg.seed + static_cast<std::uint64_t>(d) * 0x9e3779b9ull;
        return mc;
    };
    auto train_config = [&](int d) {
        TrainConfig tc;
        tc.learning_rate = cfg.lr_for(d);
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.seed = cfg.seed;
        return tc;
    };

    try {
        if (cfg.kind == SweepKind::model_size) {
            SweepSeries cgl_series;
            cgl_series.name = "cgl";
            for (int d : cfg.hidden_dims) {
                auto mc = model_config(d);
                auto model = train(init_model(mc), prep.pairs, train_config(d));
                auto eval = cgl_eval(model, prep.vocab, prep.corpus, prep.targets, cfg.n_neg,
                                     cfg.seed, &prep.test_queries);
                cgl_series.points.push_back(
                    {static_cast<double>(non_embedding_param_count(mc)), eval.mean_cgl});
                cgl_series.labels.push_back("d=" + std::to_string(d));
            }
            man.series.push_back(std::move(cgl_series));
        } else if (cfg.kind == SweepKind::data_size) {
            const int d = cfg.fixed_hidden_dim;
            std::vector<long long> sizes = cfg.data_sizes;
            if (sizes.empty()) {
                const long long total = static_cast<long long>(prep.pairs.size());
                sizes = {total / 16, total / 8, total / 4, total / 2, total};
                sizes.erase(std::remove_if(sizes.begin(), sizes.end(),
                                           [](long long s) { return s < 1; }),
                            sizes.end());
            }
            SweepSeries cgl_series;
            cgl_series.name = "cgl";
            for (long long size : sizes) {
                auto pairs = subsample(prep.pairs, static_cast<std::size_t>(size), cfg.seed);
                auto mc = model_config(d);
                auto model = train(init_model(mc), pairs, train_config(d));
                auto eval = cgl_eval(model, prep.vocab, prep.corpus, prep.targets, cfg.n_neg,
                                     cfg.seed, &prep.test_queries);
                cgl_series.points.push_back({static_cast<double>(size), eval.mean_cgl});
                cgl_series.labels.push_back("D=" + std::to_string(size));
            }
            man.series.push_back(std::move(cgl_series));
        } else {
            const int d = cfg.fixed_hidden_dim;
            auto mc = model_config(d);
            auto model = train(init_model(mc), prep.pairs, train_config(d));

            std::map<std::string, std::vector<std::string>> relevant;
            for (const auto& q : prep.test_queries)
                relevant[q.id] = relevant_docs(prep.corpus.judgments, q.id);

            std::vector<SweepSeries> mr_series(cfg.k_set.size());
            for (std::size_t ki = 0; ki < cfg.k_set.size(); ++ki)
                mr_series[ki].name = "mr@" + std::to_string(cfg.k_set[ki]);

            for (int beam : cfg.beams) {
                BeamConfig bc;
                bc.beam_size = beam;
                bc.max_len = prep.max_target_len + 1;  // room for the EOS step
                bc.constraint = cfg.method == Method::ngram ? ConstraintKind::ngram_trie
                                                            : ConstraintKind::code_trie;
                const auto flops = count_flops(mc, bc, prep.max_target_len);
                std::vector<double> mr_sum(cfg.k_set.size(), 0.0);
                for (const auto& q : prep.test_queries) {
                    auto generated =
                        beam_search(model, prep.vocab.encode(q.tokens), bc, &prep.vocab, &prep.index);
                    auto ranked = score_documents(generated, prep.index, prep.vocab,
                                                  cfg.retrieval_depth,
                                                  cfg.method == Method::ngram
                                                      ? IdentifierMode::ngram
                                                      : IdentifierMode::code,
                                                  q.id);
                    for (std::size_t ki = 0; ki < cfg.k_set.size(); ++ki)
                        mr_sum[ki] += mr_at_k(ranked, relevant.at(q.id), cfg.k_set[ki]);
                }
                for (std::size_t ki = 0; ki < cfg.k_set.size(); ++ki) {
                    mr_series[ki].points.push_back(
                        {static_cast<double>(flops.flops_per_query),
                         mr_sum[ki] / static_cast<double>(prep.test_queries.size())});
                    mr_series[ki].labels.push_back("B=" + std::to_string(beam));
                }
            }
            for (auto& s : mr_series) man.series.push_back(std::move(s));
        }

        // fit every series that has enough spread
        for (auto& s : man.series) {
            try {
                s.fit = fit_power_law(s.points);
                s.fitted = true;
            } catch (const data_error&) {
                s.fitted = false;  // flat or short series stays unfitted
            }
        }
    } catch (const std::exception& e) {
        man.failed = true;
        man.failure = e.what();
        man.finished_at = detail::iso_timestamp();
        if (!cfg.out_dir.empty()) {
            std::filesystem::create_directories(cfg.out_dir);
            detail::atomic_write(cfg.out_dir + "/manifest.json",
                                 manifest_to_json(man).dump(2) + "\n");
        }
        throw;
    }

    man.finished_at = detail::iso_timestamp();
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        detail::atomic_write(cfg.out_dir + "/manifest.json", manifest_to_json(man).dump(2) + "\n");
        detail::atomic_write(cfg.out_dir + "/points.csv", points_csv(man));
        nlohmann::json fits = nlohmann::json::array();
        for (const auto& s : man.series)
            if (s.fitted) {
                auto f = fit_to_json(s.fit, "power_law", s.points.size());
                f["series"] = s.name;
                fits.push_back(f);
            }
        detail::atomic_write(cfg.out_dir + "/fits.json", fits.dump(2) + "\n");
    }
    return man;
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

// Outer-joined per-point table plus fitted-parameter summary rows. All
// manifests must share a sweep kind.
inline std::string compare_report(const std::vector<RunManifest>& manifests) {
    if (manifests.size() < 2) throw data_error("compare_report: need at least 2 manifests");
    for (const auto& m : manifests)
        if (m.kind != manifests.front().kind)
            throw data_error("compare_report: sweep kinds differ");

    std::vector<std::string> run_names;
    for (std::size_t i = 0; i < manifests.size(); ++i)
        run_names.push_back("run" + std::to_string(i + 1) + "_" + to_string(manifests[i].method));

    // (series, x) -> per-run y
    std::map<std::pair<std::string, double>, std::vector<std::string>> rows;
    for (std::size_t mi = 0; mi < manifests.size(); ++mi)
        for (const auto& s : manifests[mi].series)
            for (const auto& p : s.points) {
                auto& row = rows[{s.name, p.x}];
                row.resize(manifests.size());
                row[mi] = detail::csv_double(p.y);
            }

    std::string csv = "series,x";
    for (const auto& n : run_names) csv += "," + n;
    csv += "\n";
    for (const auto& [key, row] : rows) {
        csv += key.first + "," + detail::csv_double(key.second);
        for (std::size_t mi = 0; mi < manifests.size(); ++mi)
            csv += "," + (mi < row.size() ? row[mi] : std::string());
        csv += "\n";
    }
    // fit summary
    std::set<std::string> series_names;
    for (const auto& m : manifests)
        for (const auto& s : m.series) series_names.insert(s.name);
    for (const auto& name : series_names) {
        for (const char* field : {"exponent", "floor", "r2"}) {
            csv += name + "/" + field + ",";
            for (std::size_t mi = 0; mi < manifests.size(); ++mi) {
                csv += ",";
                for (const auto& s : manifests[mi].series) {
                    if (s.name != name || !s.fitted) continue;
                    const double v = std::string(field) == "exponent" ? s.fit.exponent
                                     : std::string(field) == "floor"  ? s.fit.floor
                                                                      : s.fit.r2;
                    csv += detail::csv_double(v);
                }
            }
            csv += "\n";
        }
    }
    return csv;
}

// ---------------------------------------------------------------------------
// Per-query metrics CSV (CGL + ranking metrics)
// ---------------------------------------------------------------------------

struct QueryMetricsRow {
    std::string query_id;
    double cgl = 0.0;
    double recall5 = 0.0, recall20 = 0.0, recall100 = 0.0;
    double ndcg10 = 0.0, mrr10 = 0.0, map10 = 0.0;
};

inline std::string metrics_csv(const std::vector<QueryMetricsRow>& rows) {
    std::string csv =
        "query_id,cgl,recall@5,mr@5,recall@20,mr@20,recall@100,mr@100,ndcg@10,mrr@10,map@10\n";
    QueryMetricsRow mean;
    for (const auto& r : rows) {
        csv += r.query_id + "," + detail::csv_double(r.cgl) + "," +
               detail::csv_double(r.recall5) + "," + detail::csv_double(1.0 - r.recall5) + "," +
               detail::csv_double(r.recall20) + "," + detail::csv_double(1.0 - r.recall20) + "," +
               detail::csv_double(r.recall100) + "," + detail::csv_double(1.0 - r.recall100) +
               "," + detail::csv_double(r.ndcg10) + "," + detail::csv_double(r.mrr10) + "," +
               detail::csv_double(r.map10) + "\n";
        mean.cgl += r.cgl;
        mean.recall5 += r.recall5;
        mean.recall20 += r.recall20;
        mean.recall100 += r.recall100;
        mean.ndcg10 += r.ndcg10;
        mean.mrr10 += r.mrr10;
        mean.map10 += r.map10;
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        csv += "MEAN," + detail::csv_double(mean.cgl / n) + "," +
               detail::csv_double(mean.recall5 / n) + "," +
               detail::csv_double(1.0 - mean.recall5 / n) + "," +
               detail::csv_double(mean.recall20 / n) + "," +
               detail::csv_double(1.0 - mean.recall20 / n) + "," +
               detail::csv_double(mean.recall100 / n) + "," +
               detail::csv_double(1.0 - mean.recall100 / n) + "," +
               detail::csv_double(mean.ndcg10 / n) + "," + detail::csv_double(mean.mrr10 / n) +
               "," + detail::csv_double(mean.map10 / n) + "\n";
    }
    return csv;
}

}  // namespace genret
