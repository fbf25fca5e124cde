#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "genret/common.hpp"

namespace genret {

struct ScalingPoint {
    double x = 0.0;
    double y = 0.0;
};

struct JointPoint {
    double p = 0.0;
    double d = 0.0;
    double y = 0.0;
};

struct FitConfig {
    int max_iters = 2000;
    double tol = 1e-12;      // relative SSE change
    double damping = 1e-3;   // initial Levenberg lambda
    int restarts = 8;        // multi-start count over the floor grid
};

// y(x) = amplitude * x^(-exponent) + floor. derived_scale = amplitude^(1/exponent)
// recovers the scale-inside-the-power form: (derived_scale / x)^exponent.
struct FitResult {
    double amplitude = 0.0;
    double exponent = 0.0;
    double floor = 0.0;
    double derived_scale = 0.0;
    double r2 = 0.0;
    std::vector<double> residuals;
    int iterations = 0;
    bool converged = false;
};

// y(p, d) = ((gamma/p)^(alpha/beta) + eta/d)^beta + delta
struct JointFitResult {
    double gamma = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    double r2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double r_squared(const std::vector<double>& observed, const std::vector<double>& predicted) {
    if (observed.size() != predicted.size() || observed.size() < 2)
        throw data_error("r_squared: need equal-length series of at least 2 points");
    double mean = 0.0;
    for (double o : observed) mean += o;
    mean /= static_cast<double>(observed.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
        ss_tot += (observed[i] - mean) * (observed[i] - mean);
    }
    if (ss_tot == 0.0) throw data_error("r_squared: observed values have zero variance");
    return 1.0 - ss_res / ss_tot;
}

namespace detail {

inline double softplus(double w) { return w > 30.0 ? w : std::log1p(std::exp(w)); }

inline double inv_softplus(double f) {
    if (f <= 0.0) return -745.0;  // softplus(-745) underflows to exactly 0
    if (f > 30.0) return f;
    return std::log(std::expm1(f));
}

inline double sigmoid(double w) {
    if (w >= 0.0) return 1.0 / (1.0 + std::exp(-w));
    const double e = std::exp(w);
    return e / (1.0 + e);
}

// Solve A x = b in place, n small. Returns false if the pivot collapses.
inline bool solve_linear(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(a[r * n + col]) > std::fabs(a[pivot * n + col])) pivot = r;
        if (std::fabs(a[pivot * n + col]) < 1e-300) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
            std::swap(b[col], b[pivot]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        double s = b[col];
        for (int c = col + 1; c < n; ++c) s -= a[col * n + c] * b[c];
        b[col] = s / a[col * n + col];
    }
    return true;
}

// Residual callback: fill r (size m); if jac != nullptr, fill the m x n
// row-major Jacobian of the residuals.
using ResidualFn =
    std::function<void(const std::vector<double>&, std::vector<double>&, std::vector<double>*)>;

struct LmOutcome {
    std::vector<double> params;
    double sse = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> sse_trace;  // accepted steps only
};

// Damped Gauss-Newton: (J'J + lambda diag(J'J)) step = J'r. Accepted steps
// shrink lambda, rejected ones grow it; SSE is non-increasing over accepted
// iterations by construction.
inline LmOutcome levenberg(const ResidualFn& fn, std::vector<double> params, std::size_t m,
                           const FitConfig& fc) {
    const int n = static_cast<int>(params.size());
    std::vector<double> r(m), jac(m * n);
    fn(params, r, &jac);
    double sse = 0.0;
    for (double ri : r) sse += ri * ri;

    LmOutcome out;
    out.sse_trace.push_back(sse);
    double lambda = fc.damping;
    bool converged = false;

    for (int iter = 0; iter < fc.max_iters; ++iter) {
        out.iterations = iter + 1;
        // Normal equations.
        std::vector<double> jtj(static_cast<std::size_t>(n) * n, 0.0), jtr(n, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = jac.data() + i * n;
            for (int a = 0; a < n; ++a) {
                jtr[a] += row[a] * r[i];
                for (int b = a; b < n; ++b) jtj[a * n + b] += row[a] * row[b];
            }
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < a; ++b) jtj[a * n + b] = jtj[b * n + a];

        std::vector<double> aug = jtj, rhs(n);
        for (int a = 0; a < n; ++a) {
            aug[a * n + a] += lambda * (jtj[a * n + a] > 0.0 ? jtj[a * n + a] : 1.0);
            rhs[a] = -jtr[a];  // minimize ||r||; dr/dp step solves J'J delta = -J'r
        }
        if (!solve_linear(aug, rhs, n)) {
            lambda *= 10.0;
            if (lambda > 1e15) break;
            continue;
        }

        std::vector<double> trial = params;
        for (int a = 0; a < n; ++a) trial[a] += rhs[a];
        std::vector<double> r_trial(m);
        fn(trial, r_trial, nullptr);
        double sse_trial = 0.0;
        for (double ri : r_trial) sse_trial += ri * ri;

        if (std::isfinite(sse_trial) && sse_trial <= sse) {
            const double rel = (sse - sse_trial) / std::max(sse, 1e-300);
            params = std::move(trial);
            sse = sse_trial;
            out.sse_trace.push_back(sse);
            fn(params, r, &jac);
            lambda = std::max(lambda * 0.1, 1e-15);
            if (rel < fc.tol) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e15) {
                converged = true;  // stuck at a (local) minimum
                break;
            }
        }
    }
    out.params = std::move(params);
    out.sse = sse;
    out.converged = converged;
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single-variable power law: y = A x^(-e) + floor
// ---------------------------------------------------------------------------

inline FitResult fit_power_law(const std::vector<ScalingPoint>& points, const FitConfig& fc = {}) {
    if (points.size() < 4) throw data_error("fit_power_law: need at least 4 points");
    std::set<double> xs;
    double min_y = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        if (!(p.x > 0.0) || !std::isfinite(p.x) || !std::isfinite(p.y))
            throw data_error("fit_power_law: x must be positive and values finite");
        xs.insert(p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    if (xs.size() < 2) throw data_error("fit_power_law: x values must be distinct");
    if (min_y == max_y) throw data_error("fit_power_law: all y values equal; degenerate data");

    const std::size_t m = points.size();
    // Internal parameters: u = log A, v = log exponent, w with floor = softplus(w).
    detail::ResidualFn fn = [&](const std::vector<double>& p, std::vector<double>& r,
                                std::vector<double>* jac) {
        const double amp = std::exp(p[0]);
        const double expnt = std::exp(p[1]);
        const double floor = detail::softplus(p[2]);
        for (std::size_t i = 0; i < m; ++i) {
            const double lx = std::log(points[i].x);
            const double pow_term = amp * std::exp(-expnt * lx);
            r[i] = points[i].y - (pow_term + floor);
            if (jac) {
                double* row = jac->data() + i * 3;
                row[0] = -pow_term;                       // d r / d u
                row[1] = pow_term * expnt * lx;           // d r / d v
                row[2] = -detail::sigmoid(p[2]);          // d r / d w
            }
        }
    };

    // Multi-start over the floor initialization; amplitude/exponent start
    // from a log-log regression of (y - floor0) and, as a second candidate,
    // from the slope of the two smallest-x points where the power term
    // dominates any floor.
    std::vector<double> floor_starts = {0.9 * std::max(min_y, 0.0),
                                        0.999 * std::max(min_y, 0.0)};
    const int extra = std::max(0, fc.restarts - 1);
    for (int k = 0; k < extra; ++k)
        floor_starts.push_back(std::max(min_y, 0.0) * static_cast<double>(k) /
                               static_cast<double>(extra));

    auto by_x = points;
    std::sort(by_x.begin(), by_x.end(),
              [](const ScalingPoint& a, const ScalingPoint& b) { return a.x < b.x; });

    detail::LmOutcome best;
    auto try_start = [&](const std::vector<double>& p0) {
        auto outcome = detail::levenberg(fn, p0, m, fc);
        if (outcome.sse < best.sse) best = std::move(outcome);
    };
    for (double f0 : floor_starts) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (const auto& p : points) {
            const double lx = std::log(p.x);
            const double ly = std::log(std::max(p.y - f0, 1e-12));
            sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
        }
        const double nn = static_cast<double>(m);
        const double denom = nn * sxx - sx * sx;
        double slope = denom != 0.0 ? (nn * sxy - sx * sy) / denom : -1.0;
        double intercept = (sy - slope * sx) / nn;
        const double e0 = std::max(-slope, 1e-3);
        try_start({intercept, std::log(e0), detail::inv_softplus(f0)});

        const double y0 = by_x.front().y - f0, y1 = by_x[1].y - f0;
        if (y0 > 0.0 && y1 > 0.0 && y0 != y1) {
            const double pair_slope =
                std::log(y0 / y1) / std::log(by_x[1].x / by_x.front().x);
            if (pair_slope > 0.0 && std::isfinite(pair_slope)) {
                const double u0 = std::log(y0) + pair_slope * std::log(by_x.front().x);
                try_start({u0, std::log(pair_slope), detail::inv_softplus(f0)});
            }
        }
    }

    FitResult result;
    result.amplitude = std::exp(best.params[0]);
    result.exponent = std::exp(best.params[1]);
    result.floor = detail::softplus(best.params[2]);
    result.derived_scale = std::exp(best.params[0] / result.exponent);
    result.iterations = best.iterations;
    result.converged = best.converged;
    std::vector<double> obs, pred;
    result.residuals.resize(m);
    std::vector<double> r(m);
    fn(best.params, r, nullptr);
    for (std::size_t i = 0; i < m; ++i) {
        result.residuals[i] = r[i];
        obs.push_back(points[i].y);
        pred.push_back(points[i].y - r[i]);
    }
    result.r2 = r_squared(obs, pred);
    return result;
}

inline double predict(const FitResult& fit, double x) {
    if (!(x > 0.0)) throw data_error("predict: x must be positive");
    return fit.amplitude * std::pow(x, -fit.exponent) + fit.floor;
}

// ---------------------------------------------------------------------------
// Joint model-data law: y = ((gamma/p)^(alpha/beta) + eta/d)^beta + delta
// ---------------------------------------------------------------------------

inline double predict(const JointFitResult& fit, double p, double d) {
    if (!(p > 0.0) || !(d > 0.0)) throw data_error("predict: p and d must be positive");
    const double inner = std::exp((fit.alpha / fit.beta) * std::log(fit.gamma / p)) + fit.eta / d;
    return std::exp(fit.beta * std::log(inner)) + fit.delta;
}

inline JointFitResult fit_joint(const std::vector<JointPoint>& points, const FitConfig& fc = {}) {
    if (points.size() < 9) throw data_error("fit_joint: need at least 9 points");
    std::set<double> ps, ds;
    double min_y = std::numeric_limits<double>::infinity();
    for (const auto& pt : points) {
        if (!(pt.p > 0.0) || !(pt.d > 0.0) || !(pt.y > 0.0) || !std::isfinite(pt.y))
            throw data_error("fit_joint: all coordinates must be positive and finite");
        ps.insert(pt.p);
        ds.insert(pt.d);
        min_y = std::min(min_y, pt.y);
    }

    // Marginal initialization: P margin at the largest D, D margin at the
    // largest P; heuristic fallbacks when a margin is too thin to fit.
    double gamma0 = 1.0, alpha0 = 1.0, beta0 = 1.0, eta0 = 1.0, delta0 = 0.5 * min_y;
    {
        double lg = 0.0;
        for (double p : ps) lg += std::log(p);
        gamma0 = std::exp(lg / static_cast<double>(ps.size()));
        lg = 0.0;
        for (double d : ds) lg += std::log(d);
        eta0 = std::exp(lg / static_cast<double>(ds.size()));
    }
    const double d_max = *ds.rbegin();
    const double p_max = *ps.rbegin();
    std::vector<ScalingPoint> p_margin, d_margin;
    for (const auto& pt : points) {
        if (pt.d == d_max) p_margin.push_back({pt.p, pt.y});
        if (pt.p == p_max) d_margin.push_back({pt.d, pt.y});
    }
    try {
        if (p_margin.size() >= 4) {
            auto f = fit_power_law(p_margin, fc);
            gamma0 = f.derived_scale;
            alpha0 = f.exponent;
            delta0 = std::max(f.floor, 1e-12);
        }
        if (d_margin.size() >= 4) {
            auto f = fit_power_law(d_margin, fc);
            beta0 = f.exponent;
            eta0 = f.derived_scale;
        }
    } catch (const data_error&) {
        // keep heuristic defaults
    }

    JointFitResult result;
    if (ps.size() < 2 || ds.size() < 2) {
        // Rank-deficient grid: the law cannot be constrained in one variable.
        result.gamma = gamma0;
        result.alpha = alpha0;
        result.beta = beta0;
        result.eta = eta0;
        result.delta = delta0;
        result.converged = false;
        return result;
    }

    const std::size_t m = points.size();
    const int n = 5;
    auto eval_model = [&](const std::vector<double>& p, std::size_t i) {
        const double gamma = std::exp(p[0]), alpha = std::exp(p[1]), beta = std::exp(p[2]);
        const double eta = std::exp(p[3]), delta = detail::softplus(p[4]);
        const double inner =
            std::exp((alpha / beta) * std::log(gamma / points[i].p)) + eta / points[i].d;
        return std::exp(beta * std::log(inner)) + delta;
    };
    detail::ResidualFn fn = [&](const std::vector<double>& p, std::vector<double>& r,
                                std::vector<double>* jac) {
        for (std::size_t i = 0; i < m; ++i) r[i] = points[i].y - eval_model(p, i);
        if (!jac) return;
        // Central differences in the internal (log / softplus) parameters.
        std::vector<double> pp = p;
        for (int j = 0; j < n; ++j) {
            const double h = 1e-6 * std::max(1.0, std::fabs(p[j]));
            pp[j] = p[j] + h;
            std::vector<double> hi(m), lo(m);
            for (std::size_t i = 0; i < m; ++i) hi[i] = eval_model(pp, i);
            pp[j] = p[j] - h;
            for (std::size_t i = 0; i < m; ++i) lo[i] = eval_model(pp, i);
            pp[j] = p[j];
            for (std::size_t i = 0; i < m; ++i)
                (*jac)[i * n + j] = -(hi[i] - lo[i]) / (2.0 * h);
        }
    };

    std::vector<double> p0 = {std::log(gamma0), std::log(std::max(alpha0, 1e-3)),
                              std::log(std::max(beta0, 1e-3)), std::log(eta0),
                              detail::inv_softplus(delta0)};
    auto outcome = detail::levenberg(fn, p0, m, fc);

    result.gamma = std::exp(outcome.params[0]);
    result.alpha = std::exp(outcome.params[1]);
    result.beta = std::exp(outcome.params[2]);
    result.eta = std::exp(outcome.params[3]);
    result.delta = detail::softplus(outcome.params[4]);
    result.iterations = outcome.iterations;
    result.converged = outcome.converged;
    std::vector<double> obs, pred;
    for (std::size_t i = 0; i < m; ++i) {
        obs.push_back(points[i].y);
        pred.push_back(eval_model(outcome.params, i));
    }
    result.r2 = r_squared(obs, pred);
    return result;
}

}  // namespace genret
