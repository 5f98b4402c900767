#include "vlstm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "vlstm/linalg.hpp"
#include "vlstm/tensor.hpp"

namespace vlstm::kernels {

namespace {

// Log-spaced evaluation grid with at least 64 points per decade.
std::vector<double> log_grid(double x_lo, double x_hi) {
    const double decades = std::log10(x_hi / x_lo);
    const int points = std::max(2, static_cast<int>(std::ceil(64.0 * decades)) + 1);
    std::vector<double> xs(points);
    for (int j = 0; j < points; ++j) {
        double t = static_cast<double>(j) / (points - 1);
        xs[j] = x_lo * std::pow(x_hi / x_lo, t);
    }
    return xs;
}

double kernel_raw(const std::vector<double>& w, const std::vector<double>& tau, double x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::exp(-x / tau[i]);
    return acc;
}

// Sup relative error of the kernel rescaled to match the target at x_lo.
double sup_rel_error(const std::vector<double>& w, const std::vector<double>& tau, double alpha,
                     double x_lo, const std::vector<double>& xs) {
    const double k0 = kernel_raw(w, tau, x_lo);
    if (!(k0 > 0.0)) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double x : xs) {
        double target = std::pow(x / x_lo, -alpha);
        double rel = std::abs(kernel_raw(w, tau, x) / k0 - target) / target;
        worst = std::max(worst, rel);
    }
    return worst;
}

// Weights from NNLS in relative-error metric: rows are grid points of
// Khat(x)/T(x) ~ 1. A few Lawson reweighting rounds push the least-
// squares solution toward the minimax one; the best sup error seen wins.
std::vector<double> fit_weights(const std::vector<double>& tau, double alpha, double x_lo,
                                const std::vector<double>& xs) {
    const int m = static_cast<int>(xs.size());
    const int n = static_cast<int>(tau.size());
    nd::Tensor a(m, n);
    for (int j = 0; j < m; ++j) {
        const double target = std::pow(xs[j] / x_lo, -alpha);
        for (int i = 0; i < n; ++i) a.at(j, i) = std::exp(-xs[j] / tau[i]) / target;
    }

    std::vector<double> row_w(m, 1.0);
    std::vector<double> best;
    double best_err = std::numeric_limits<double>::infinity();
    nd::Tensor aw(m, n);
    std::vector<double> bw(m);
    for (int round = 0; round < 24; ++round) {
        for (int j = 0; j < m; ++j) {
            const double s = std::sqrt(row_w[j]);
            bw[j] = s;
            for (int i = 0; i < n; ++i) aw.at(j, i) = s * a.at(j, i);
        }
        std::vector<double> w = linalg::nnls(aw, bw);
        const double err = sup_rel_error(w, tau, alpha, x_lo, xs);
        if (err < best_err) {
            best_err = err;
            best = w;
        }
        // Lawson: emphasize the rows with the largest residuals
        double total = 0.0;
        for (int j = 0; j < m; ++j) {
            double fit = 0.0;
            for (int i = 0; i < n; ++i) fit += a.at(j, i) * w[i];
            row_w[j] *= 1e-6 + std::abs(fit - 1.0);
            total += row_w[j];
        }
        if (!(total > 0.0)) break;
        for (double& v : row_w) v *= m / total;
    }
    return best;
}

ExpSumKernel finalize(std::vector<double> w, std::vector<double> tau, double alpha, double x_lo,
                      double x_hi) {
    // drop zero-weight components only if that keeps at least one scale
    double total = 0.0;
    for (double wi : w) total += wi;
    if (!(total > 0.0)) throw std::runtime_error("fit_exp_sum: all weights vanished");
    for (double& wi : w) wi /= total;
    ExpSumKernel k;
    k.weights = std::move(w);
    k.timescales = std::move(tau);
    k.alpha = alpha;
    k.x_lo = x_lo;
    k.x_hi = x_hi;
    return k;
}

struct Candidate {
    std::vector<double> w;
    std::vector<double> tau;
    double err = std::numeric_limits<double>::infinity();
};

Candidate fit_for_taus(std::vector<double> tau, double alpha, double x_lo,
                       const std::vector<double>& xs) {
    Candidate c;
    c.tau = std::move(tau);
    c.w = fit_weights(c.tau, alpha, x_lo, xs);
    c.err = sup_rel_error(c.w, c.tau, alpha, x_lo, xs);
    return c;
}

// One round of coordinate refinement on log-timescales: probe each tau
// up and down by shrinking factors, re-fit weights, keep improvements.
Candidate refine(Candidate best, double alpha, double x_lo, const std::vector<double>& xs) {
    const int n = static_cast<int>(best.tau.size());
    for (double step : {0.5, 0.25, 0.1, 0.04, 0.015}) {
        for (int pass = 0; pass < 8; ++pass) {
            bool improved = false;
            for (int i = 0; i < n; ++i) {
                for (double dir : {+1.0, -1.0}) {
                    std::vector<double> probe = best.tau;
                    probe[i] *= std::exp(dir * step);
                    std::sort(probe.begin(), probe.end());
                    bool distinct = true;
                    for (int k = 1; k < n; ++k)
                        if (probe[k] <= probe[k - 1] * (1.0 + 1e-9)) distinct = false;
                    if (!distinct) continue;
                    Candidate c = fit_for_taus(std::move(probe), alpha, x_lo, xs);
                    if (c.err < best.err) {
                        best = std::move(c);
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
    }
    return best;
}

}  // namespace

std::vector<double> ema(const std::vector<double>& series, double lambda, double init) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("ema: lambda must lie in [0,1]");
    std::vector<double> out(series.size());
    double state = init;
    for (std::size_t t = 0; t < series.size(); ++t) {
        state = state * (1.0 - lambda) + lambda * series[t];
        out[t] = state;
    }
    return out;
}

ExpSumKernel geometric_timescales(double c, int n, double alpha) {
    if (!(c > 1.0)) throw std::invalid_argument("geometric_timescales: c must exceed 1");
    if (n < 1) throw std::invalid_argument("geometric_timescales: n must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("geometric_timescales: alpha must be > 0");
    ExpSumKernel k;
    k.alpha = alpha;
    k.timescales.resize(n);
    k.weights.resize(n);
    double sum = 0.0;
    for (int i = 1; i <= n; ++i) {
        k.timescales[i - 1] = std::pow(c, i);
        k.weights[i - 1] = std::pow(c, -alpha * i);
        sum += k.weights[i - 1];
    }
    for (double& w : k.weights) w /= sum;
    k.x_lo = 1.0;
    k.x_hi = k.timescales.back();
    return k;
}

double eval_kernel(const ExpSumKernel& k, double x) {
    if (x < 0.0) throw std::invalid_argument("eval_kernel: x must be >= 0");
    return kernel_raw(k.weights, k.timescales, x);
}

ExpSumKernel fit_exp_sum(double alpha, double x_lo, double x_hi, int n) {
    if (!(alpha > 0.0 && alpha < 2.0))
        throw std::invalid_argument("fit_exp_sum: alpha must lie in (0,2)");
    if (!(x_lo > 0.0 && x_lo < x_hi))
        throw std::invalid_argument("fit_exp_sum: need 0 < x_lo < x_hi");
    if (n < 1) throw std::invalid_argument("fit_exp_sum: n must be >= 1");

    const std::vector<double> xs = log_grid(x_lo, x_hi);

    // Build up n incrementally. For each size the candidates are a fresh
    // geometric ladder and the previous best extended by one scale, so
    // the achieved error is non-increasing in n.
    Candidate best;
    for (int size = 1; size <= n; ++size) {
        // fresh geometric ladders spanning the target range at a few
        // extensions (exponentials need support past both edges, and the
        // best span depends on alpha), plus the previous best extended by
        // one scale; every candidate gets its own refinement round
        std::vector<Candidate> candidates;
        for (auto [lo_s, hi_s] : {std::pair{0.5, 1.5}, {0.25, 3.0}, {1.0, 1.0}}) {
            std::vector<double> tau(size);
            const double lo = lo_s * x_lo, hi = hi_s * x_hi;
            if (size == 1) {
                tau[0] = std::sqrt(lo * hi);
            } else {
                for (int i = 0; i < size; ++i)
                    tau[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (size - 1));
            }
            candidates.push_back(fit_for_taus(std::move(tau), alpha, x_lo, xs));
        }
        if (size > 1 && !best.tau.empty()) {
            std::vector<double> tau = best.tau;
            tau.push_back(tau.back() * 4.0);
            candidates.push_back(fit_for_taus(std::move(tau), alpha, x_lo, xs));
        }
        Candidate round_best;
        for (Candidate& c : candidates) {
            Candidate refined = refine(std::move(c), alpha, x_lo, xs);
            if (refined.err < round_best.err) round_best = std::move(refined);
        }
        if (round_best.err <= best.err || best.tau.empty()) best = std::move(round_best);
        // else: keep the smaller fit; pad below so the scale count is honored
        if (static_cast<int>(best.tau.size()) < size) {
            std::vector<double> tau = best.tau;
            std::vector<double> w = best.w;
            while (static_cast<int>(tau.size()) < size) {
                tau.push_back(tau.back() * 4.0);
                w.push_back(0.0);
            }
            best.tau = std::move(tau);
            best.w = std::move(w);
        }
    }

    if (!std::isfinite(best.err))
        throw std::runtime_error("fit_exp_sum: optimizer failed to produce a finite fit");

    // NNLS can zero out weights; keep the scales (zero weight is valid)
    // but enforce strict ordering.
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < best.tau.size(); ++i) pairs.emplace_back(best.tau[i], best.w[i]);
    std::sort(pairs.begin(), pairs.end());
    std::vector<double> tau, w;
    for (auto& [t, wi] : pairs) {
        if (!tau.empty() && t <= tau.back() * (1.0 + 1e-12)) t = tau.back() * (1.0 + 1e-9);
        tau.push_back(t);
        w.push_back(wi);
    }
    return finalize(std::move(w), std::move(tau), alpha, x_lo, x_hi);
}

double approx_error(const ExpSumKernel& k, double x_lo, double x_hi) {
    if (!(x_lo > 0.0 && x_lo < x_hi)) throw std::invalid_argument("approx_error: bad range");
    const std::vector<double> xs = log_grid(x_lo, x_hi);
    return sup_rel_error(k.weights, k.timescales, k.alpha, x_lo, xs);
}

double approx_error(const ExpSumKernel& k) {
    return approx_error(k, k.x_lo, k.x_hi);
}

}  // namespace vlstm::kernels
