#pragma once

#include <optional>
#include <vector>

#include "vlstm/data.hpp"

namespace vlstm::baselines {

// Last value of the window.
double persistence_forecast(const std::vector<double>& window);

// Ordinary least squares on EMA features of the window (one per
// timescale, evaluated at the window end) plus the last value and an
// intercept. Stands in for the rough-volatility benchmark: a power-law
// kernel is well approximated by a bank of EMAs.
struct LinearKernelForecaster {
    std::vector<double> timescales;
    std::vector<double> coefficients;  // per EMA feature, then last value, then intercept
    bool fitted = false;
};

LinearKernelForecaster fit_linear_kernel(const data::WindowedDataset& ds,
                                         const std::vector<double>& timescales);
double predict(const LinearKernelForecaster& f, const std::vector<double>& window);
double mse_on_split(const LinearKernelForecaster& f, const data::WindowedDataset& ds,
                    data::Split split);

// Configured external benchmark MSE (paper-reported rough-volatility
// value by default). Imported, not computed.
double reference_mse(std::optional<double> override_value = std::nullopt);

// Default EMA feature timescales: geometric, c=5, n=4 (about 1 to 625 days).
std::vector<double> default_baseline_timescales();

}  // namespace vlstm::baselines
