#pragma once

#include <vector>

namespace vlstm::kernels {

// Sum-of-exponentials approximation of a power-law kernel x^(-alpha).
// Weights are nonnegative and sum to one; the overall amplitude is a
// separate scalar owned by consumers. Timescales are strictly increasing.
struct ExpSumKernel {
    std::vector<double> weights;
    std::vector<double> timescales;
    double alpha = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
};

// out[t] = (1 - lambda) * out[t-1] + lambda * series[t], seeded with init.
std::vector<double> ema(const std::vector<double>& series, double lambda, double init);

// tau_i = c^i, w_i proportional to (1/c^alpha)^i, normalized.
ExpSumKernel geometric_timescales(double c, int n, double alpha);

// sum_i w_i * exp(-x / tau_i)
double eval_kernel(const ExpSumKernel& k, double x);

// Fit n exponentials to x^(-alpha) over [x_lo, x_hi], minimizing the sup
// of |Khat(x) - T(x)| / T(x) on a log grid (>= 64 points per decade),
// where T(x) = (x / x_lo)^(-alpha) and Khat is scaled to match at x_lo.
// Deterministic. Timescales start on a geometric grid; weights come from
// nonnegative least squares on the grid; a round of coordinate
// refinement then adjusts log-timescales.
ExpSumKernel fit_exp_sum(double alpha, double x_lo, double x_hi, int n);

// Sup relative error of the (rescaled) kernel against its own target
// power law, over the same grid construction fit_exp_sum uses.
double approx_error(const ExpSumKernel& k);
double approx_error(const ExpSumKernel& k, double x_lo, double x_hi);

}  // namespace vlstm::kernels
