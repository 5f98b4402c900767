#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vlstm::synthetic {

// Self-exciting EMA-mixture process: the conditional mean of the next
// value is a fixed mixture of EMAs of the series itself, so the
// irreducible one-step MSE equals noise_std^2 exactly.
//
//   y[t+1] = mean_level * (1 - sum w) + sum_k w_k * EMA_{tau_k}(y)[t] + noise
//
// With sum w < 1 the process is mean reverting; the EMA bank gives it
// memory across all the listed timescales.
struct EmaMixtureSpec {
    std::vector<double> timescales;
    std::vector<double> weights;   // need not sum to 1; sum < 1 keeps it stationary
    double mean_level = 0.0;
    double noise_std = 1.0;
    int burn_in = 1000;

    void validate() const;
};

std::vector<double> generate_ema_mixture(const EmaMixtureSpec& spec, int length, uint64_t seed);

// Synthetic multi-symbol realized-variance panel in the CSV schema the
// data module ingests (date,symbol,rv). Weekday calendar; symbols share
// a common shock component so the panel is cross-correlated and the
// date-based splits matter. Start dates are staggered so series lengths
// are heterogeneous.
struct PanelSpec {
    int n_symbols = 31;
    std::string start_date = "2000-01-04";
    std::string end_date = "2021-02-17";
    // log-volatility dynamics; tau = 1 is the immediate lag, matching the
    // strong short-horizon autocorrelation of realized volatility
    std::vector<double> timescales = {1.0, 5.0, 25.0, 125.0, 625.0};
    double memory_weight = 0.97;    // total EMA weight (< 1)
    double kernel_alpha = 0.8;      // power-law exponent shaping the per-scale weights
    double noise_std = 0.35;        // innovation std of log volatility
    double common_fraction = 0.5;   // variance share of the cross-sectional shock
    double base_log_vol = -4.6;     // roughly 1% daily volatility
    double base_spread = 0.25;      // per-symbol offset std
    double stagger_fraction = 0.6;  // latest start as a fraction of the calendar
    uint64_t seed = 0;

    void validate() const;
};

void write_panel_csv(const std::filesystem::path& path, const PanelSpec& spec);

}  // namespace vlstm::synthetic
