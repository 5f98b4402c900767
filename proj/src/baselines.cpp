#include "vlstm/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "vlstm/kernels.hpp"
#include "vlstm/linalg.hpp"
#include "vlstm/tensor.hpp"

namespace vlstm::baselines {

using data::Split;
using data::WindowedDataset;

double persistence_forecast(const std::vector<double>& window) {
    if (window.empty()) throw std::invalid_argument("persistence_forecast: empty window");
    return window.back();
}

namespace {

// EMA of the window at each timescale, evaluated at the window end;
// seeded with the first observation to avoid a cold start.
void ema_features(const std::vector<double>& window, const std::vector<double>& timescales,
                  std::vector<double>& out) {
    out.clear();
    for (double tau : timescales) {
        const double lambda = 1.0 / tau;
        double state = window.front();
        for (double v : window) state = state * (1.0 - lambda) + lambda * v;
        out.push_back(state);
    }
    out.push_back(window.back());
}

}  // namespace

LinearKernelForecaster fit_linear_kernel(const WindowedDataset& ds,
                                         const std::vector<double>& timescales) {
    for (double tau : timescales)
        if (!(tau >= 1.0)) throw std::invalid_argument("fit_linear_kernel: timescales must be >= 1");
    const std::vector<int>& train = ds.split(Split::Train);
    const int n_features = static_cast<int>(timescales.size()) + 2;  // EMAs + last + intercept
    if (static_cast<int>(train.size()) < 10 * n_features)
        throw std::invalid_argument("fit_linear_kernel: need at least 10x more samples than features");

    nd::Tensor a(static_cast<int>(train.size()), n_features);
    std::vector<double> b(train.size());
    std::vector<double> feats;
    for (std::size_t r = 0; r < train.size(); ++r) {
        const data::Sample& s = ds.samples[train[r]];
        ema_features(s.window, timescales, feats);
        for (int j = 0; j < n_features - 1; ++j) a.at(static_cast<int>(r), j) = feats[j];
        a.at(static_cast<int>(r), n_features - 1) = 1.0;
        b[r] = s.target;
    }

    LinearKernelForecaster f;
    f.timescales = timescales;
    f.coefficients = linalg::solve_least_squares(a, b);
    f.fitted = true;
    return f;
}

double predict(const LinearKernelForecaster& f, const std::vector<double>& window) {
    if (!f.fitted) throw std::runtime_error("LinearKernelForecaster used before fitting");
    if (window.empty()) throw std::invalid_argument("predict: empty window");
    std::vector<double> feats;
    ema_features(window, f.timescales, feats);
    double acc = f.coefficients.back();  // intercept
    for (std::size_t j = 0; j < feats.size(); ++j) acc += f.coefficients[j] * feats[j];
    return acc;
}

double mse_on_split(const LinearKernelForecaster& f, const WindowedDataset& ds, Split split) {
    const std::vector<int>& idx = ds.split(split);
    if (idx.empty()) throw std::invalid_argument("mse_on_split: empty split");
    double acc = 0.0;
    for (int i : idx) {
        const data::Sample& s = ds.samples[i];
        const double d = predict(f, s.window) - s.target;
        acc += d * d;
    }
    return acc / static_cast<double>(idx.size());
}

double reference_mse(std::optional<double> override_value) {
    return override_value.value_or(0.288);
}

std::vector<double> default_baseline_timescales() {
    const kernels::ExpSumKernel k = kernels::geometric_timescales(5.0, 4, 0.5);
    return k.timescales;  // {5, 25, 125, 625}
}

}  // namespace vlstm::baselines
