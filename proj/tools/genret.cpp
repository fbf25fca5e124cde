// genret: command-line front end for the generative-retrieval scaling lab.
//
// Subcommands: corpus gen|load, assign ngram|codebook, train, eval cgl|rank,
// sweep model-size|data-size|beam, fit power-law|joint, plot, compare.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "genret/harness.hpp"

using nlohmann::json;

namespace {

genret::SweepConfig load_sweep_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw genret::config_error("config file not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw genret::config_error("config file " + path + ": " + e.what());
    }
    return j.get<genret::SweepConfig>();
}

// x,y or p,d,y rows; a leading non-numeric header line is skipped.
std::vector<std::vector<double>> load_csv_rows(const std::string& path, std::size_t columns) {
    std::ifstream in(path);
    if (!in) throw genret::data_error("points file not found: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) break;
        }
        if (!numeric) {
            if (lineno == 1) continue;  // header
            throw genret::data_error(path + ": non-numeric value on line " +
                                     std::to_string(lineno));
        }
        if (row.size() != columns)
            throw genret::data_error(path + ": expected " + std::to_string(columns) +
                                     " columns on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw genret::data_error(path + ": no data rows");
    return rows;
}

// x,y points from either a plain numeric CSV or a sweep points.csv
// (series,label,x,y); for the latter, `series` selects the series
// (defaults to the first one in the file).
std::vector<genret::ScalingPoint> load_xy_points(const std::string& path,
                                                 const std::string& series) {
    std::ifstream in(path);
    if (!in) throw genret::data_error("points file not found: " + path);
    std::string header;
    if (!std::getline(in, header)) throw genret::data_error(path + ": empty file");
    in.close();

    if (header.rfind("series,", 0) != 0) {
        if (!series.empty())
            throw genret::data_error(path + ": --series given but file has no series column");
        std::vector<genret::ScalingPoint> pts;
        for (const auto& r : load_csv_rows(path, 2)) pts.push_back({r[0], r[1]});
        return pts;
    }

    std::ifstream body(path);
    std::string line;
    std::getline(body, line);  // header
    std::vector<genret::ScalingPoint> pts;
    std::string want = series;
    std::size_t lineno = 1;
    while (std::getline(body, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string name, label, xs, ys;
        if (!std::getline(ss, name, ',') || !std::getline(ss, label, ',') ||
            !std::getline(ss, xs, ',') || !std::getline(ss, ys))
            throw genret::data_error(path + ": malformed row on line " + std::to_string(lineno));
        if (want.empty()) want = name;
        if (name != want) continue;
        try {
            pts.push_back({std::stod(xs), std::stod(ys)});
        } catch (const std::exception&) {
            throw genret::data_error(path + ": non-numeric value on line " +
                                     std::to_string(lineno));
        }
    }
    if (pts.empty())
        throw genret::data_error(path + ": no rows for series '" + want + "'");
    return pts;
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    genret::detail::atomic_write(out_path, content);
}

json fit_result_json(const genret::FitResult& f) {
    return json{{"law", "power_law"},
                {"params",
                 {{"scale", f.derived_scale},
                  {"amplitude", f.amplitude},
                  {"exponent", f.exponent},
                  {"floor", f.floor}}},
                {"r2", f.r2},
                {"iterations", f.iterations},
                {"converged", f.converged}};
}

struct CorpusPaths {
    std::string docs, queries, qrels;

    void add_options(CLI::App* cmd, bool required) {
        auto* d = cmd->add_option("--docs", docs, "documents JSONL (id,text per line)");
        auto* q = cmd->add_option("--queries", queries, "queries JSONL");
        auto* r = cmd->add_option("--qrels", qrels, "relevance judgments TSV");
        if (required) {
            d->required();
            q->required();
            r->required();
        }
    }
};

genret::Corpus load_from(const CorpusPaths& p) {
    return genret::load_corpus(p.docs, p.queries, p.qrels);
}

void add_synth_options(CLI::App* cmd, genret::SynthConfig& sc) {
    cmd->add_option("--topics", sc.n_topics, "number of topics");
    cmd->add_option("--docs-per-topic", sc.docs_per_topic, "documents per topic");
    cmd->add_option("--doc-len", sc.doc_len, "tokens per document");
    cmd->add_option("--topic-vocab", sc.topic_vocab, "topic-specific vocabulary size");
    cmd->add_option("--shared-vocab", sc.shared_vocab, "shared vocabulary size");
    cmd->add_option("--query-len", sc.query_len, "tokens per query");
    cmd->add_option("--queries-per-doc", sc.queries_per_doc, "queries generated per document");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale generative retrieval scaling laboratory"};
    app.require_subcommand(1);

    // ---- corpus ----------------------------------------------------------
    auto* corpus_cmd = app.add_subcommand("corpus", "generate or inspect corpora");
    corpus_cmd->require_subcommand(1);

    auto* corpus_gen = corpus_cmd->add_subcommand("gen", "generate a synthetic corpus");
    auto gen_cfg = std::make_shared<genret::SynthConfig>();
    auto gen_out = std::make_shared<std::string>();
    add_synth_options(corpus_gen, *gen_cfg);
    corpus_gen->add_option("--seed", gen_cfg->seed, "generation seed");
    corpus_gen->add_option("--out", *gen_out, "output directory")->required();
    corpus_gen->callback([gen_cfg, gen_out] {
        auto corpus = genret::generate_synthetic(*gen_cfg);
        std::filesystem::create_directories(*gen_out);
        genret::save_corpus(corpus, *gen_out + "/docs.jsonl", *gen_out + "/queries.jsonl",
                            *gen_out + "/qrels.tsv");
        std::printf("documents=%zu queries=%zu judgments=%zu fingerprint=%016llx\n",
                    corpus.documents.size(), corpus.queries.size(), corpus.judgments.size(),
                    static_cast<unsigned long long>(corpus.fingerprint()));
    });

    auto* corpus_load = corpus_cmd->add_subcommand("load", "load and validate a corpus");
    auto load_paths = std::make_shared<CorpusPaths>();
    load_paths->add_options(corpus_load, true);
    corpus_load->callback([load_paths] {
        auto corpus = load_from(*load_paths);
        std::printf("documents=%zu queries=%zu judgments=%zu fingerprint=%016llx\n",
                    corpus.documents.size(), corpus.queries.size(), corpus.judgments.size(),
                    static_cast<unsigned long long>(corpus.fingerprint()));
    });

    // ---- assign ----------------------------------------------------------
    auto* assign_cmd = app.add_subcommand("assign", "assign document identifiers");
    assign_cmd->require_subcommand(1);

    auto* assign_ngram = assign_cmd->add_subcommand("ngram", "extract n-gram identifiers");
    auto an_paths = std::make_shared<CorpusPaths>();
    auto an_m = std::make_shared<int>(10);
    auto an_n = std::make_shared<int>(10);
    auto an_out = std::make_shared<std::string>();
    an_paths->add_options(assign_ngram, true);
    assign_ngram->add_option("-m,--identifiers", *an_m, "identifiers per document");
    assign_ngram->add_option("-n,--ngram-len", *an_n, "tokens per identifier");
    assign_ngram->add_option("--out", *an_out, "output JSONL file")->required();
    assign_ngram->callback([an_paths, an_m, an_n, an_out] {
        auto corpus = load_from(*an_paths);
        std::map<std::string, std::vector<std::string>> doc_queries;
        for (const auto& j : corpus.judgments)
            if (j.relevance == 1) doc_queries[j.doc_id].push_back(j.query_id);
        for (auto& [_, qs] : doc_queries) std::sort(qs.begin(), qs.end());
        std::map<std::string, const genret::Query*> query_by_id;
        for (const auto& q : corpus.queries) query_by_id[q.id] = &q;

        std::vector<genret::IdentifierSet> sets;
        const genret::Query empty_query;
        for (const auto& doc : corpus.documents) {
            auto it = doc_queries.find(doc.id);
            const genret::Query& q = (it != doc_queries.end() && !it->second.empty())
                                         ? *query_by_id.at(it->second.front())
                                         : empty_query;
            sets.push_back(genret::extract_ngram_identifiers(doc, q, *an_m, *an_n));
        }
        genret::save_ngram_identifiers(sets, *an_out);
        std::printf("documents=%zu identifiers_per_doc<=%d out=%s\n", sets.size(), *an_m,
                    an_out->c_str());
    });

    auto* assign_code = assign_cmd->add_subcommand("codebook", "train a codebook and assign codes");
    auto ac_paths = std::make_shared<CorpusPaths>();
    auto ac_dim = std::make_shared<int>(64);
    auto ac_codes = std::make_shared<int>(256);
    auto ac_levels = std::make_shared<int>(32);
    auto ac_iters = std::make_shared<int>(10);
    auto ac_seed = std::make_shared<std::uint64_t>(1);
    auto ac_out = std::make_shared<std::string>();
    ac_paths->add_options(assign_code, true);
    assign_code->add_option("--dim", *ac_dim, "embedding dimension");
    assign_code->add_option("--codes", *ac_codes, "codes per level");
    assign_code->add_option("--levels", *ac_levels, "quantization levels");
    assign_code->add_option("--iters", *ac_iters, "k-means iterations");
    assign_code->add_option("--seed", *ac_seed, "embedding / clustering seed");
    assign_code->add_option("--out", *ac_out, "output directory")->required();
    assign_code->callback([ac_paths, ac_dim, ac_codes, ac_levels, ac_iters, ac_seed, ac_out] {
        auto corpus = load_from(*ac_paths);
        std::vector<const genret::Document*> sorted_docs;
        for (const auto& d : corpus.documents) sorted_docs.push_back(&d);
        std::sort(sorted_docs.begin(), sorted_docs.end(),
                  [](const genret::Document* a, const genret::Document* b) { return a->id < b->id; });
        std::vector<std::vector<double>> vectors;
        vectors.reserve(sorted_docs.size());
        for (const genret::Document* d : sorted_docs)
            vectors.push_back(genret::embed_document(*d, *ac_dim, *ac_seed));
        auto cb = genret::train_codebook(vectors, *ac_codes, *ac_levels, *ac_seed, *ac_iters);
        auto seqs = genret::assign_all_codes(corpus, cb);
        std::filesystem::create_directories(*ac_out);
        genret::save_codebook(cb, *ac_out + "/codebook.json");
        genret::save_code_sequences(seqs, *ac_out + "/codes.jsonl");
        std::printf("documents=%zu levels=%d reconstruction_mse=%.6g out=%s\n", seqs.size(),
                    *ac_levels, genret::reconstruction_error(vectors, cb, *ac_levels),
                    ac_out->c_str());
    });

    // Shared --config/--seed/--out plumbing for pipeline subcommands.
    struct PipelineArgs {
        std::string config_path;
        std::uint64_t seed = 0;
        bool seed_set = false;
        std::string out;

        genret::SweepConfig resolve() const {
            genret::SweepConfig cfg;
            if (!config_path.empty()) cfg = load_sweep_config(config_path);
            if (seed_set) cfg.seed = seed;
            if (!out.empty()) cfg.out_dir = out;
            return cfg;
        }
    };
    auto add_pipeline_options = [](CLI::App* cmd, const std::shared_ptr<PipelineArgs>& args) {
        cmd->add_option("--config", args->config_path, "sweep-style JSON config file");
        cmd->add_option("--seed", args->seed, "override the config seed")
            ->each([args](const std::string&) { args->seed_set = true; });
        cmd->add_option("--out", args->out, "override the output location");
    };

    // ---- train -----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train a sequence model on one configuration");
    auto tr_args = std::make_shared<PipelineArgs>();
    auto tr_hidden = std::make_shared<int>(32);
    add_pipeline_options(train_cmd, tr_args);
    train_cmd->add_option("--hidden-dim", *tr_hidden, "hidden dimension");
    train_cmd->callback([tr_args, tr_hidden] {
        auto cfg = tr_args->resolve();
        if (cfg.out_dir.empty()) throw genret::config_error("train: --out is required");
        auto prep = genret::prepare(cfg);
        genret::ModelConfig mc;
        mc.hidden_dim = *tr_hidden;
        mc.vocab_size = prep.vocab.size();
        mc.max_len = prep.max_target_len + 2;
        mc.seed = cfg.seed + static_cast<std::uint64_t>(*tr_hidden) * 0x9e3779b9ull;
        genret::TrainConfig tc;
        tc.learning_rate = cfg.lr_for(*tr_hidden);
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.seed = cfg.seed;
        auto model = genret::train(genret::init_model(mc), prep.pairs, tc);
        std::filesystem::create_directories(
            std::filesystem::path(cfg.out_dir).parent_path().empty()
                ? "."
                : std::filesystem::path(cfg.out_dir).parent_path().string());
        genret::save_checkpoint(model, prep.vocab, cfg.out_dir);
        std::printf("pairs=%zu params=%lld checkpoint=%s\n", prep.pairs.size(),
                    genret::non_embedding_param_count(mc), cfg.out_dir.c_str());
    });

    // ---- eval ------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
    eval_cmd->require_subcommand(1);

    auto* eval_cgl = eval_cmd->add_subcommand("cgl", "contrastive generation loss");
    auto ec_args = std::make_shared<PipelineArgs>();
    auto ec_ckpt = std::make_shared<std::string>();
    auto ec_all = std::make_shared<bool>(false);
    add_pipeline_options(eval_cgl, ec_args);
    eval_cgl->add_option("--checkpoint", *ec_ckpt, "model checkpoint")->required();
    eval_cgl->add_flag("--all-queries", *ec_all, "evaluate every query, not just the test split");
    eval_cgl->callback([ec_args, ec_ckpt, ec_all] {
        auto cfg = ec_args->resolve();
        cfg.out_dir.clear();
        auto prep = genret::prepare(cfg);
        auto [model, vocab] = genret::load_checkpoint(*ec_ckpt);
        auto result = genret::cgl_eval(model, vocab, prep.corpus, prep.targets, cfg.n_neg, cfg.seed,
                                       *ec_all ? nullptr : &prep.test_queries);
        json per_query = json::array();
        for (std::size_t i = 0; i < result.records.size(); ++i)
            per_query.push_back(
                {{"query_id", result.records[i].query_id}, {"cgl", result.per_query_cgl[i]}});
        json out{{"mean_cgl", result.mean_cgl},
                 {"baseline", std::log1p(1.0 / cfg.n_neg)},
                 {"n_neg", cfg.n_neg},
                 {"queries", per_query}};
        write_or_print(ec_args->out, out.dump(2) + "\n");
        if (!ec_args->out.empty()) std::printf("mean_cgl=%.6g out=%s\n", result.mean_cgl,
                                               ec_args->out.c_str());
    });

    auto* eval_rank = eval_cmd->add_subcommand("rank", "constrained decoding and ranking metrics");
    auto er_args = std::make_shared<PipelineArgs>();
    auto er_ckpt = std::make_shared<std::string>();
    auto er_beam = std::make_shared<int>(10);
    add_pipeline_options(eval_rank, er_args);
    eval_rank->add_option("--checkpoint", *er_ckpt, "model checkpoint")->required();
    eval_rank->add_option("--beam", *er_beam, "beam size");
    eval_rank->callback([er_args, er_ckpt, er_beam] {
        auto cfg = er_args->resolve();
        if (cfg.out_dir.empty()) throw genret::config_error("eval rank: --out is required");
        auto prep = genret::prepare(cfg);
        auto [model, vocab] = genret::load_checkpoint(*er_ckpt);
        auto cgl_result = genret::cgl_eval(model, vocab, prep.corpus, prep.targets, cfg.n_neg,
                                           cfg.seed, &prep.test_queries);

        genret::BeamConfig bc;
        bc.beam_size = *er_beam;
        bc.max_len = prep.max_target_len + 1;
        bc.constraint = cfg.method == genret::Method::ngram ? genret::ConstraintKind::ngram_trie
                                                            : genret::ConstraintKind::code_trie;
        const auto flops = genret::count_flops(model.cfg, bc, prep.max_target_len);
        const auto mode = cfg.method == genret::Method::ngram ? genret::IdentifierMode::ngram
                                                              : genret::IdentifierMode::code;

        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream run(cfg.out_dir + "/run.jsonl");
        if (!run) throw genret::data_error("cannot write " + cfg.out_dir + "/run.jsonl");

        std::vector<genret::QueryMetricsRow> rows;
        for (std::size_t qi = 0; qi < prep.test_queries.size(); ++qi) {
            const auto& q = prep.test_queries[qi];
            auto generated =
                genret::beam_search(model, vocab.encode(q.tokens), bc, &vocab, &prep.index);
            auto ranked = genret::score_documents(generated, prep.index, vocab,
                                                  cfg.retrieval_depth, mode, q.id);
            auto relevant = genret::relevant_docs(prep.corpus.judgments, q.id);

            json jg = json::array();
            for (const auto& g : generated) {
                json tokens = json::array();
                for (int id : g.tokens) tokens.push_back(vocab.token_of(id));
                jg.push_back({{"tokens", tokens}, {"logprob", g.logprob}});
            }
            json jr = json::array();
            for (const auto& d : ranked.docs) jr.push_back({{"doc_id", d.doc_id}, {"score", d.score}});
            run << json{{"query_id", q.id},
                        {"beam", *er_beam},
                        {"flops", flops.flops_per_query},
                        {"generated", jg},
                        {"ranked", jr}}
                       .dump()
                << "\n";

            genret::QueryMetricsRow row;
            row.query_id = q.id;
            row.cgl = cgl_result.per_query_cgl[qi];
            row.recall5 = genret::recall_at_k(ranked, relevant, 5);
            row.recall20 = genret::recall_at_k(ranked, relevant, 20);
            row.recall100 = genret::recall_at_k(ranked, relevant, 100);
            auto rm = genret::ndcg_mrr_map(ranked, relevant, 10);
            row.ndcg10 = rm.ndcg;
            row.mrr10 = rm.mrr;
            row.map10 = rm.map;
            rows.push_back(std::move(row));
        }
        genret::detail::atomic_write(cfg.out_dir + "/metrics.csv", genret::metrics_csv(rows));
        std::printf("queries=%zu flops_per_query=%lld out=%s\n", rows.size(),
                    flops.flops_per_query, cfg.out_dir.c_str());
    });

    // ---- sweep -----------------------------------------------------------
    auto* sweep_cmd = app.add_subcommand("sweep", "run a scaling sweep");
    sweep_cmd->require_subcommand(1);
    for (const auto& [name, kind] :
         std::initializer_list<std::pair<const char*, genret::SweepKind>>{
             {"model-size", genret::SweepKind::model_size},
             {"data-size", genret::SweepKind::data_size},
             {"beam", genret::SweepKind::beam}}) {
        auto* sub = sweep_cmd->add_subcommand(name, std::string(name) + " sweep");
        auto args = std::make_shared<PipelineArgs>();
        add_pipeline_options(sub, args);
        const auto sweep_kind = kind;
        sub->callback([args, sweep_kind] {
            auto cfg = args->resolve();
            cfg.kind = sweep_kind;
            auto man = genret::run_sweep(cfg);
            for (const auto& s : man.series) {
                std::printf("series=%s points=%zu", s.name.c_str(), s.points.size());
                if (s.fitted)
                    std::printf(" exponent=%.6g floor=%.6g r2=%.6g", s.fit.exponent, s.fit.floor,
                                s.fit.r2);
                std::printf("\n");
            }
            if (!cfg.out_dir.empty()) std::printf("out=%s\n", cfg.out_dir.c_str());
        });
    }

    // ---- fit -------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "fit scaling laws to points");
    fit_cmd->require_subcommand(1);

    auto* fit_power = fit_cmd->add_subcommand("power-law", "y = (scale/x)^exponent + floor");
    auto fp_points = std::make_shared<std::string>();
    auto fp_series = std::make_shared<std::string>();
    auto fp_out = std::make_shared<std::string>();
    fit_power->add_option("--points", *fp_points, "CSV with x,y rows or a sweep points.csv")
        ->required();
    fit_power->add_option("--series", *fp_series, "series name when reading a sweep points.csv");
    fit_power->add_option("--out", *fp_out, "output JSON (stdout if omitted)");
    fit_power->callback([fp_points, fp_series, fp_out] {
        auto pts = load_xy_points(*fp_points, *fp_series);
        auto fit = genret::fit_power_law(pts);
        if (!fit.converged) throw genret::numeric_error("power-law fit did not converge");
        write_or_print(*fp_out, fit_result_json(fit).dump(2) + "\n");
    });

    auto* fit_joint = fit_cmd->add_subcommand("joint", "joint model-data law");
    auto fj_points = std::make_shared<std::string>();
    auto fj_out = std::make_shared<std::string>();
    fit_joint->add_option("--points", *fj_points, "CSV with p,d,y rows")->required();
    fit_joint->add_option("--out", *fj_out, "output JSON (stdout if omitted)");
    fit_joint->callback([fj_points, fj_out] {
        auto rows = load_csv_rows(*fj_points, 3);
        std::vector<genret::JointPoint> pts;
        for (const auto& r : rows) pts.push_back({r[0], r[1], r[2]});
        auto fit = genret::fit_joint(pts);
        if (!fit.converged) throw genret::numeric_error("joint fit did not converge");
        json out{{"law", "joint"},
                 {"params",
                  {{"gamma", fit.gamma},
                   {"alpha", fit.alpha},
                   {"beta", fit.beta},
                   {"eta", fit.eta},
                   {"delta", fit.delta}}},
                 {"r2", fit.r2},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged}};
        write_or_print(*fj_out, out.dump(2) + "\n");
    });

    // ---- plot ------------------------------------------------------------
    auto* plot_cmd = app.add_subcommand("plot", "render a manifest series as SVG");
    auto pl_manifest = std::make_shared<std::string>();
    auto pl_series = std::make_shared<std::string>();
    auto pl_out = std::make_shared<std::string>();
    auto pl_logy = std::make_shared<bool>(false);
    auto pl_title = std::make_shared<std::string>();
    plot_cmd->add_option("--manifest", *pl_manifest, "manifest.json from a sweep")->required();
    plot_cmd->add_option("--series", *pl_series, "series name (defaults to the first)");
    plot_cmd->add_option("--out", *pl_out, "output SVG path")->required();
    plot_cmd->add_flag("--log-y", *pl_logy, "log-scale y axis");
    plot_cmd->add_option("--title", *pl_title, "plot title");
    plot_cmd->callback([pl_manifest, pl_series, pl_out, pl_logy, pl_title] {
        auto man = genret::load_manifest(*pl_manifest);
        const genret::SweepSeries* series = nullptr;
        for (const auto& s : man.series)
            if (pl_series->empty() || s.name == *pl_series) {
                series = &s;
                break;
            }
        if (!series) throw genret::data_error("series not found: " + *pl_series);
        genret::PlotOptions opt;
        opt.axes = *pl_logy ? genret::PlotAxes::log_x_log_y : genret::PlotAxes::log_x_linear_y;
        opt.title = pl_title->empty() ? series->name : *pl_title;
        opt.x_label = man.kind == genret::SweepKind::beam ? "FLOPs per query"
                      : man.kind == genret::SweepKind::data_size ? "training pairs"
                                                                 : "non-embedding parameters";
        opt.y_label = series->name;
        genret::emit_plot(series->points, series->fitted ? &series->fit : nullptr, opt, *pl_out);
        std::printf("series=%s points=%zu fitted=%s out=%s\n", series->name.c_str(),
                    series->points.size(), series->fitted ? "yes" : "no", pl_out->c_str());
    });

    // ---- compare ---------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "align manifests into one table");
    auto cm_paths = std::make_shared<std::vector<std::string>>();
    auto cm_out = std::make_shared<std::string>();
    compare_cmd->add_option("manifests", *cm_paths, "manifest.json files")
        ->required()
        ->expected(2, -1);
    compare_cmd->add_option("--out", *cm_out, "output CSV (stdout if omitted)");
    compare_cmd->callback([cm_paths, cm_out] {
        std::vector<genret::RunManifest> manifests;
        for (const auto& p : *cm_paths) manifests.push_back(genret::load_manifest(p));
        write_or_print(*cm_out, genret::compare_report(manifests));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const genret::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const genret::data_error& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const genret::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
