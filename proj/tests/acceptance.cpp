// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria mix fit-recovery oracles (noise-free curves refitted
// from published-style coefficients), exact identities, decode/model
// oracles, and desk-scale end-to-end scaling runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "genret/harness.hpp"

using namespace genret;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    if (!pass) ++g_failures;
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> xs;
    for (int i = 0; i < n; ++i)
        xs.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return xs;
}

std::vector<ScalingPoint> power_curve(double scale, double exponent, double floor,
                                      const std::vector<double>& xs) {
    std::vector<ScalingPoint> pts;
    for (double x : xs)
        pts.push_back({x, std::exp(exponent * std::log(scale / x)) + floor});
    return pts;
}

struct Law {
    const char* name;
    double scale, exponent, floor;
    double grid_lo, grid_hi;
};

bool check_recovery(const Law& law, int n_points, std::string& detail) {
    auto pts = power_curve(law.scale, law.exponent, law.floor, log_grid(law.grid_lo, law.grid_hi, n_points));
    auto fit = fit_power_law(pts);
    const double exp_err = std::fabs(fit.exponent - law.exponent) / law.exponent;
    const double floor_err = std::fabs(fit.floor - law.floor) / law.floor;
    const bool ok = exp_err <= 0.01 && floor_err <= 0.05 && fit.r2 >= 0.9999;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s exp_err=%.2e floor_err=%.2e r2=%.6f", law.name, exp_err,
                  floor_err, fit.r2);
    detail += std::string(detail.empty() ? "" : "; ") + buf;
    return ok;
}

// --------------------------------------------------------------------------
// criteria 1-2: single-variable fit recovery
// --------------------------------------------------------------------------

// grid chosen where the power term dominates the floor, so a 1% noise level
// (criterion 4) leaves the exponent identifiable
const Law kParamLawA{"params-A", 2.26e-2, 0.40, 0.00356, 1e3, 1e7};
const Law kParamLawB{"params-B", 1.24e8, 2.40, 0.00328, 1e8, 1e12};

void criterion_1() {
    bool ok = true;
    std::string detail;
    for (const Law& law : {kParamLawA, kParamLawB}) {
        const auto t0 = std::chrono::steady_clock::now();
        ok = check_recovery(law, 5, detail) && ok;
        const double dt = seconds_since(t0);
        if (dt >= 1.0) {
            ok = false;
            detail += " (too slow: " + std::to_string(dt) + "s)";
        }
    }
    report(1, ok, "parameter-scaling fit recovery — " + detail);
}

void criterion_2() {
    bool ok = true;
    std::string detail;
    const Law data_law{"data", 1.05e4, 3.99, 0.00335, 1e4, 6e5};
    ok = check_recovery(data_law, 5, detail) && ok;
    const Law flops_rows[] = {
        {"mr5-A", 1.60e-4, 0.0620, 0.3834, 1e8, 1e13},
        {"mr20-A", 3.85e-4, 0.0508, 0.1276, 1e8, 1e13},
        {"mr100-A", 1.71e-2, 0.0755, 0.0665, 1e8, 1e13},
        {"mr5-B", 2.71e9, 0.3479, 0.2779, 1e8, 1e13},
        {"mr20-B", 4.16e9, 0.4233, 0.1859, 1e8, 1e13},
        {"mr100-B", 4.90e9, 0.4862, 0.1141, 1e8, 1e13},
    };
    for (const Law& law : flops_rows) ok = check_recovery(law, 6, detail) && ok;
    report(2, ok, "data- and compute-scaling fit recovery — " + detail);
}

// --------------------------------------------------------------------------
// criterion 3: joint-law surface recovery
// --------------------------------------------------------------------------

void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    const double gamma = 6.32e3, alpha = 3.27, beta = 0.95, eta = 3.37e5, delta = 3.26e-3;
    std::vector<JointPoint> pts;
    for (double p : log_grid(1e3, 1e7, 5))
        for (double d : log_grid(1e4, 1e8, 5)) {
            const double inner = std::exp((alpha / beta) * std::log(gamma / p)) + eta / d;
            pts.push_back({p, d, std::exp(beta * std::log(inner)) + delta});
        }
    FitConfig fc;
    fc.max_iters = 20000;
    fc.tol = 1e-16;
    auto fit = fit_joint(pts, fc);
    double sq = 0.0;
    for (const auto& pt : pts) {
        const double rel = (predict(fit, pt.p, pt.d) - pt.y) / pt.y;
        sq += rel * rel;
    }
    const double rmse = std::sqrt(sq / static_cast<double>(pts.size()));
    const double dt = seconds_since(t0);
    const bool ok = rmse <= 1e-6 && fit.r2 >= 0.9999 && dt < 5.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "joint surface recovery — rel_rmse=%.2e r2=%.6f time=%.2fs",
                  rmse, fit.r2, dt);
    report(3, ok, buf);
}

// --------------------------------------------------------------------------
// criterion 4: noise robustness
// --------------------------------------------------------------------------

void criterion_4() {
    bool ok = true;
    std::string detail;
    for (const Law& law : {kParamLawA, kParamLawB}) {
        auto clean = power_curve(law.scale, law.exponent, law.floor,
                                 log_grid(law.grid_lo, law.grid_hi, 5));
        std::vector<double> exp_errs, r2s;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed * 7919 + 13);
            auto noisy = clean;
            for (auto& p : noisy) p.y *= 1.0 + 0.01 * rng.gaussian();
            try {
                auto fit = fit_power_law(noisy);
                exp_errs.push_back(std::fabs(fit.exponent - law.exponent) / law.exponent);
                r2s.push_back(fit.r2);
            } catch (const std::exception&) {
                exp_errs.push_back(1.0);
                r2s.push_back(0.0);
            }
        }
        std::sort(exp_errs.begin(), exp_errs.end());
        std::sort(r2s.begin(), r2s.end());
        const double med_err = (exp_errs[9] + exp_errs[10]) / 2.0;
        const double med_r2 = (r2s[9] + r2s[10]) / 2.0;
        ok = ok && med_err <= 0.10 && med_r2 >= 0.98;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s med_exp_err=%.3f med_r2=%.4f", law.name, med_err,
                      med_r2);
        detail += std::string(detail.empty() ? "" : "; ") + buf;
    }
    report(4, ok, "1% multiplicative noise robustness — " + detail);
}

// --------------------------------------------------------------------------
// criterion 5: CGL identities
// --------------------------------------------------------------------------

void criterion_5() {
    bool ok = true;
    std::string detail;

    // equal-loss baseline
    for (int n : {1, 7, 31}) {
        EvalRecord rec{"q", 3.0, std::vector<double>(n, 3.0)};
        if (std::fabs(cgl(rec) - std::log1p(1.0 / n)) > 1e-12) {
            ok = false;
            detail += " baseline@" + std::to_string(n);
        }
    }

    // MR@k + Recall@k = 1 exactly per query
    RankedList ranked{"q", {{"d1", 0.9}, {"d2", 0.8}, {"d3", 0.7}, {"d4", 0.6}}};
    for (int k : {1, 2, 3, 10})
        for (const auto& rel :
             {std::vector<std::string>{"d1"}, {"d2", "d4"}, {"d1", "d2", "d3"}, {"dx"}})
            if (mr_at_k(ranked, rel, k) + recall_at_k(ranked, rel, k) != 1.0) {
                ok = false;
                detail += " mr+recall";
            }

    // scale invariance
    EvalRecord rec{"q", 0.7, {1.3, 0.2, 2.9, 0.6}};
    EvalRecord scaled{"q", 0.7 * 1e3, {1.3e3, 0.2e3, 2.9e3, 0.6e3}};
    if (std::fabs(cgl(rec) - cgl(scaled)) > 1e-12) {
        ok = false;
        detail += " scale-invariance";
    }

    // uniform model end-to-end
    SynthConfig c;
    c.n_topics = 2;
    c.docs_per_topic = 25;
    c.doc_len = 14;
    c.topic_vocab = 10;
    c.shared_vocab = 6;
    c.query_len = 3;
    c.queries_per_doc = 1;
    c.seed = 5;
    auto corpus = generate_synthetic(c);
    auto vocab = build_vocab(corpus);
    std::vector<IdentifierSet> sets;
    for (const auto& d : corpus.documents)
        sets.push_back(extract_ngram_identifiers(d, Query{"", {d.tokens[0]}}, 4, 5));
    auto targets = DocTargets::from_ngrams(sets, vocab);
    ModelConfig mc;
    mc.hidden_dim = 6;
    mc.vocab_size = vocab.size();
    mc.max_len = 7;
    mc.seed = 2;
    auto model = init_model(mc);
    std::fill(model.w_o.begin(), model.w_o.end(), 0.0);
    std::fill(model.b_o.begin(), model.b_o.end(), 0.0);
    auto result = cgl_eval(model, vocab, corpus, targets, 31, 9);
    const double gap = std::fabs(result.mean_cgl - std::log(32.0 / 31.0));
    if (gap > 1e-9) {
        ok = false;
        detail += " end-to-end gap=" + std::to_string(gap);
    }

    report(5, ok, "contrastive-loss identities" + (detail.empty() ? "" : " —" + detail));
}

// --------------------------------------------------------------------------
// criteria 6-8: desk-scale end-to-end scaling
// --------------------------------------------------------------------------

struct CapacityPoint {
    int d = 0;
    double params = 0.0;
    double mean_cgl = 0.0;
    double mean_recall100 = 0.0;
};

double mean_recall_at_100(const SeqModel& model, const Prepared& prep, const SweepConfig& cfg,
                          int beam) {
    BeamConfig bc;
    bc.beam_size = beam;
    bc.max_len = prep.max_target_len + 1;
    bc.constraint = ConstraintKind::ngram_trie;
    double sum = 0.0;
    for (const auto& q : prep.test_queries) {
        auto generated = beam_search(model, prep.vocab.encode(q.tokens), bc, &prep.vocab,
                                     &prep.index);
        auto ranked = score_documents(generated, prep.index, prep.vocab, cfg.retrieval_depth,
                                      IdentifierMode::ngram, q.id);
        sum += recall_at_k(ranked, relevant_docs(prep.corpus.judgments, q.id), 100);
    }
    return sum / static_cast<double>(prep.test_queries.size());
}

void criteria_6_7_8() {
    const auto t0 = std::chrono::steady_clock::now();
    SweepConfig cfg;  // default desk-scale recipe: 4 topics x 250 docs, ngram m=n=10
    cfg.seed = 1;
    // the 1-epoch default leaves every capacity at the equal-loss baseline; a
    // hotter rate plus three passes separates the capacities while keeping the
    // whole sweep under the runtime budget
    cfg.epochs = 3;
    cfg.lr_small = 0.4;
    cfg.lr_large = 0.4;

    Prepared prep = prepare(cfg);
    std::vector<CapacityPoint> capacities;
    SeqModel model32;
    ModelConfig mc32;
    for (int d : cfg.hidden_dims) {
        ModelConfig mc;
        mc.hidden_dim = d;
        mc.vocab_size = prep.vocab.size();
        mc.max_len = prep.max_target_len + 2;
        mc.seed = cfg.seed + static_cast<std::uint64_t>(d) * 0x9e3779b9ull;
        TrainConfig tc;
        tc.learning_rate = cfg.lr_for(d);
        tc.epochs = cfg.epochs;
        tc.batch_size = cfg.batch_size;
        tc.seed = cfg.seed;
        auto model = train(init_model(mc), prep.pairs, tc);
        CapacityPoint pt;
        pt.d = d;
        pt.params = static_cast<double>(non_embedding_param_count(mc));
        pt.mean_cgl = cgl_eval(model, prep.vocab, prep.corpus, prep.targets, cfg.n_neg, cfg.seed,
                               &prep.test_queries)
                          .mean_cgl;
        // beam 100 so the ranked list can actually hold 100 candidates;
        // narrower beams cap Recall@100 near zero and drown it in noise
        pt.mean_recall100 = mean_recall_at_100(model, prep, cfg, 100);
        capacities.push_back(pt);
        if (d == 32) {
            model32 = model;
            mc32 = mc;
        }
        std::printf("  [sweep] d=%d P=%.0f cgl=%.5f recall@100=%.4f (%.0fs)\n", d, pt.params,
                    pt.mean_cgl, pt.mean_recall100, seconds_since(t0));
        std::fflush(stdout);
    }

    // criterion 6: capacity-wise CGL against Recall@100
    {
        std::vector<double> cgls, recalls;
        for (const auto& pt : capacities) {
            cgls.push_back(pt.mean_cgl);
            recalls.push_back(pt.mean_recall100);
        }
        double r = 0.0;
        bool ok = false;
        std::string note;
        const double dt = seconds_since(t0);
        try {
            r = pearson(cgls, recalls);
            ok = r <= -0.8 && dt < 600.0;
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "loss-recall correlation across %zu capacities — pearson=%.4f time=%.0fs",
                      capacities.size(), r, dt);
        report(6, ok, buf + note);
    }

    // criterion 7: (P, CGL) power-law fit quality and monotonicity
    {
        std::vector<ScalingPoint> pts;
        for (const auto& pt : capacities) pts.push_back({pt.params, pt.mean_cgl});
        int inversions = 0;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i].y > pts[i - 1].y) ++inversions;
        bool ok = false;
        double r2 = 0.0;
        std::string note;
        try {
            auto fit = fit_power_law(pts);
            r2 = fit.r2;
            ok = r2 >= 0.9 && inversions <= 1;
        } catch (const std::exception& e) {
            note = std::string(" (") + e.what() + ")";
        }
        char buf[128];
        std::snprintf(buf, sizeof(buf), "training scaling fit — r2=%.4f inversions=%d", r2,
                      inversions);
        report(7, ok, buf + note);
    }

    // criterion 8: beam sweep on the d=32 model
    {
        const std::vector<int> beams = {1, 5, 10, 20, 50, 100};
        const std::vector<int> ks = {5, 20, 100};
        std::vector<std::vector<ScalingPoint>> series(ks.size());
        std::vector<long long> flops_list;
        bool flops_ok = true;
        for (int beam : beams) {
            BeamConfig bc;
            bc.beam_size = beam;
            bc.max_len = prep.max_target_len + 1;
            bc.constraint = ConstraintKind::ngram_trie;
            const auto flops = count_flops(mc32, bc, prep.max_target_len);
            flops_list.push_back(flops.flops_per_query);
            std::vector<double> mr_sum(ks.size(), 0.0);
            for (const auto& q : prep.test_queries) {
                auto generated = beam_search(model32, prep.vocab.encode(q.tokens), bc, &prep.vocab,
                                             &prep.index);
                auto ranked = score_documents(generated, prep.index, prep.vocab,
                                              cfg.retrieval_depth, IdentifierMode::ngram, q.id);
                auto rel = relevant_docs(prep.corpus.judgments, q.id);
                for (std::size_t ki = 0; ki < ks.size(); ++ki)
                    mr_sum[ki] += mr_at_k(ranked, rel, ks[ki]);
            }
            for (std::size_t ki = 0; ki < ks.size(); ++ki)
                series[ki].push_back({static_cast<double>(flops.flops_per_query),
                                      mr_sum[ki] / static_cast<double>(prep.test_queries.size())});
        }
        // FLOPs strictly increasing and exactly B-proportional
        for (std::size_t i = 0; i < beams.size(); ++i) {
            if (flops_list[i] != flops_list[0] * beams[i]) flops_ok = false;
            if (i > 0 && flops_list[i] <= flops_list[i - 1]) flops_ok = false;
        }
        double worst_inversion = 0.0;
        for (const auto& s : series)
            for (std::size_t i = 1; i < s.size(); ++i)
                worst_inversion = std::max(worst_inversion, s[i].y - s[i - 1].y);
        double best_r2 = -1e300;
        for (const auto& s : series) {
            try {
                best_r2 = std::max(best_r2, fit_power_law(s).r2);
            } catch (const std::exception&) {
            }
        }
        // the bound is a count identity (k/200 queries); absorb the fp error of
        // differencing two such ratios so exactly-at-the-bound still passes
        const bool ok = flops_ok && worst_inversion <= 0.01 + 1e-9 && best_r2 >= 0.85;
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "inference scaling — flops_proportional=%s worst_inversion=%.4f "
                      "best_mr_fit_r2=%.4f mr@100: B=1 %.4f -> B=100 %.4f",
                      flops_ok ? "yes" : "no", worst_inversion, best_r2, series[2].front().y,
                      series[2].back().y);
        report(8, ok, buf);
    }
}

// --------------------------------------------------------------------------
// criterion 9: decode oracle
// --------------------------------------------------------------------------

double path_logprob(const SeqModel& m, const std::vector<int>& q, const std::vector<int>& tokens,
                    bool finished) {
    auto ctx = query_context(m, q);
    std::vector<double> h(m.cfg.hidden_dim, 0.0);
    double lp = 0.0;
    int prev = Vocab::bos;
    for (int tok : tokens) {
        auto probs = model_step(m, h, prev, ctx);
        lp += std::log(probs[tok]);
        prev = tok;
    }
    if (finished) {
        auto probs = model_step(m, h, prev, ctx);
        lp += std::log(probs[Vocab::eos]);
    }
    return lp;
}

void criterion_9() {
    int failures = 0;
    std::string first_failure;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng pick(seed ^ 0xabcdef12345ull);
        ModelConfig mc;
        mc.vocab_size = 6 + static_cast<int>(pick.index(15));  // 6..20
        mc.hidden_dim = 3 + static_cast<int>(pick.index(4));
        const int max_len = 2 + static_cast<int>(pick.index(3));  // 2..4
        mc.max_len = max_len + 1;
        mc.seed = seed * 101 + 7;
        auto m = init_model(mc);
        std::vector<int> q = {4, 5};

        // exhaustive enumeration: all EOS-terminated sequences shorter than
        // max_len plus all unfinished length-max_len sequences, ordered the
        // way beam_search reports results
        std::vector<GeneratedIdentifier> all;
        std::vector<int> seq;
        std::function<void(int)> rec = [&](int depth) {
            if (depth < max_len) all.push_back({seq, path_logprob(m, q, seq, true), true});
            if (depth == max_len) {
                all.push_back({seq, path_logprob(m, q, seq, false), false});
                return;
            }
            for (int tok = 0; tok < mc.vocab_size; ++tok) {
                if (tok == Vocab::eos) continue;
                seq.push_back(tok);
                rec(depth + 1);
                seq.pop_back();
            }
        };
        rec(0);
        std::stable_sort(all.begin(), all.end(),
                         [](const GeneratedIdentifier& a, const GeneratedIdentifier& b) {
                             if (a.finished != b.finished) return a.finished;
                             if (a.logprob != b.logprob) return a.logprob > b.logprob;
                             return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(),
                                                                 b.tokens.begin(), b.tokens.end());
                         });

        // enumeration lookup table for logprob verification at every B
        std::map<std::vector<int>, std::pair<double, bool>> table;
        for (const auto& g : all) table[g.tokens] = {g.logprob, g.finished};

        // For every beam width: each returned sequence must exist in the
        // enumeration with a matching logprob (<= 1e-9) and finished flag,
        // and the output must be correctly ordered. At full width no pruning
        // is possible, so the result must equal the enumeration exactly,
        // sequence by sequence.
        std::vector<int> bs;
        for (int b = 1; b <= std::min<int>(32, static_cast<int>(all.size())); ++b) bs.push_back(b);
        bs.push_back(static_cast<int>(all.size()));
        for (int b : bs) {
            BeamConfig bc;
            bc.beam_size = b;
            bc.max_len = max_len;
            auto got = beam_search(m, q, bc);
            bool ok = !got.empty() && got.size() <= static_cast<std::size_t>(b);
            for (std::size_t i = 0; ok && i < got.size(); ++i) {
                auto it = table.find(got[i].tokens);
                ok = it != table.end() && got[i].finished == it->second.second &&
                     std::fabs(got[i].logprob - it->second.first) <= 1e-9;
                if (ok && i > 0) {
                    if (got[i - 1].finished && !got[i].finished) {
                        // finished block precedes unfinished: fine
                    } else if (!got[i - 1].finished && got[i].finished) {
                        ok = false;  // finished after unfinished
                    } else {
                        ok = got[i - 1].logprob >= got[i].logprob - 1e-12;
                    }
                }
            }
            if (ok && b == static_cast<int>(all.size())) {
                ok = got.size() == all.size();
                for (std::size_t i = 0; ok && i < all.size(); ++i)
                    ok = got[i].tokens == all[i].tokens && got[i].finished == all[i].finished &&
                         std::fabs(got[i].logprob - all[i].logprob) <= 1e-9;
            }
            if (!ok) {
                ++failures;
                if (first_failure.empty())
                    first_failure = " first at seed=" + std::to_string(seed) +
                                    " V=" + std::to_string(mc.vocab_size) +
                                    " L=" + std::to_string(max_len) + " B=" + std::to_string(b);
                break;
            }
        }
    }
    report(9, failures == 0,
           "beam vs exhaustive enumeration, 50 seeded models (exact equality at full width; "
           "membership, logprobs, ordering at all B) — mismatching models=" +
               std::to_string(failures) + first_failure);
}

// --------------------------------------------------------------------------
// criterion 10: model correctness
// --------------------------------------------------------------------------

void criterion_10() {
    bool ok = true;
    std::string note;

    // gradient check d=4, V=8
    {
        ModelConfig mc;
        mc.hidden_dim = 4;
        mc.vocab_size = 8;
        mc.max_len = 8;
        mc.seed = 41;
        auto m = init_model(mc);
        TrainPair pair{{4, 6}, {5, 7, 4}};
        genret::detail::Gradients g(mc);
        genret::detail::backprop_pair(m, pair, 1.0, g);
        double worst = 0.0;
        auto check_block = [&](std::vector<double> SeqModel::* field,
                               const std::vector<double>& grad) {
            const double h = 1e-4;
            for (std::size_t i = 0; i < (m.*field).size(); ++i) {
                SeqModel hi = m, lo = m;
                (hi.*field)[i] += h;
                (lo.*field)[i] -= h;
                const double fd = (sequence_loss(hi, pair.query_ids, pair.target) -
                                   sequence_loss(lo, pair.query_ids, pair.target)) /
                                  (2.0 * h);
                const double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
                worst = std::max(worst, std::fabs(fd - grad[i]) / denom);
            }
        };
        check_block(&SeqModel::w_h, g.w_h);
        check_block(&SeqModel::w_x, g.w_x);
        check_block(&SeqModel::w_q, g.w_q);
        check_block(&SeqModel::b, g.b);
        check_block(&SeqModel::w_o, g.w_o);
        check_block(&SeqModel::b_o, g.b_o);
        check_block(&SeqModel::emb, g.emb);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "grad_rel_err=%.2e", worst);
        note += buf;
        if (worst > 1e-3) ok = false;
    }

    // parameter count vs structural traversal
    {
        for (int d : {2, 16, 64})
            for (int v : {5, 100, 1000}) {
                ModelConfig mc;
                mc.hidden_dim = d;
                mc.vocab_size = v;
                auto m = init_model(mc);
                const long long traversal =
                    static_cast<long long>(m.w_h.size() + m.w_x.size() + m.w_q.size() +
                                           m.b.size() + m.w_o.size() + m.b_o.size());
                if (traversal != non_embedding_param_count(mc)) {
                    ok = false;
                    note += " param-count(d=" + std::to_string(d) + ")";
                }
            }
    }

    // bit-deterministic training
    {
        ModelConfig mc;
        mc.hidden_dim = 8;
        mc.vocab_size = 12;
        mc.max_len = 6;
        mc.seed = 5;
        std::vector<TrainPair> pairs = {{{4}, {5, 6}}, {{5}, {7, 8}}, {{6}, {9}}, {{7}, {10, 11}}};
        TrainConfig tc;
        tc.learning_rate = 0.05;
        tc.epochs = 4;
        tc.batch_size = 2;
        tc.seed = 3;
        auto a = train(init_model(mc), pairs, tc);
        auto b = train(init_model(mc), pairs, tc);
        const bool same = a.emb == b.emb && a.w_h == b.w_h && a.w_x == b.w_x && a.w_q == b.w_q &&
                          a.b == b.b && a.w_o == b.w_o && a.b_o == b.b_o;
        if (!same) {
            ok = false;
            note += " nondeterministic-training";
        }
    }
    report(10, ok, "model correctness — " + note);
}

// --------------------------------------------------------------------------
// criterion 11: identifier properties
// --------------------------------------------------------------------------

void criterion_11() {
    bool ok = true;
    std::string detail;

    SynthConfig c;
    c.n_topics = 3;
    c.docs_per_topic = 40;
    c.doc_len = 20;
    c.topic_vocab = 12;
    c.shared_vocab = 8;
    c.query_len = 3;
    c.queries_per_doc = 1;
    c.seed = 21;
    auto corpus = generate_synthetic(c);

    // n-gram identifiers are verbatim substrings
    for (const auto& q : corpus.queries) {
        const Document* doc = corpus.find_document(corpus.positives(q.id).front());
        auto set = extract_ngram_identifiers(*doc, q, 5, 6);
        for (const auto& ng : set.identifiers) {
            if (ng.source_pos + ng.tokens.size() > doc->tokens.size()) ok = false;
            for (std::size_t i = 0; i < ng.tokens.size(); ++i)
                if (ng.tokens[i] != doc->tokens[ng.source_pos + i]) ok = false;
        }
    }
    if (!ok) detail += " ngram-substring";

    // injectivity (pigeonhole) and reconstruction monotonicity
    std::vector<std::vector<double>> vectors;
    std::vector<const Document*> sorted_docs;
    for (const auto& d : corpus.documents) sorted_docs.push_back(&d);
    std::sort(sorted_docs.begin(), sorted_docs.end(),
              [](const Document* a, const Document* b) { return a->id < b->id; });
    for (const Document* d : sorted_docs) vectors.push_back(embed_document(*d, 32, 3));
    auto cb = train_codebook(vectors, 16, 6, 3, 8);

    auto seqs = assign_all_codes(corpus, cb);
    std::set<std::vector<int>> unique_codes;
    for (const auto& s : seqs) unique_codes.insert(s.codes);
    if (unique_codes.size() != corpus.documents.size()) {
        ok = false;
        detail += " code-injectivity";
    }

    double prev = reconstruction_error(vectors, cb, 0);
    for (int levels = 1; levels <= cb.n_levels(); ++levels) {
        const double err = reconstruction_error(vectors, cb, levels);
        if (err > prev + 1e-12) {
            ok = false;
            detail += " reconstruction-monotone@" + std::to_string(levels);
        }
        prev = err;
    }
    report(11, ok,
           "identifier properties (substring, injectivity, monotone reconstruction)" +
               (detail.empty() ? "" : " —" + detail));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criteria_6_7_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
