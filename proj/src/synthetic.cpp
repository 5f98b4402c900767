#include "vlstm/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "vlstm/data.hpp"
#include "vlstm/rng.hpp"

namespace vlstm::synthetic {

void EmaMixtureSpec::validate() const {
    if (timescales.empty() || timescales.size() != weights.size())
        throw std::invalid_argument("EmaMixtureSpec: timescales/weights mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < timescales.size(); ++i) {
        if (!(timescales[i] >= 1.0)) throw std::invalid_argument("EmaMixtureSpec: timescale < 1");
        if (!(weights[i] >= 0.0)) throw std::invalid_argument("EmaMixtureSpec: negative weight");
        total += weights[i];
    }
    if (!(total < 1.0)) throw std::invalid_argument("EmaMixtureSpec: weights must sum below 1");
    if (!(noise_std > 0.0)) throw std::invalid_argument("EmaMixtureSpec: noise_std must be > 0");
    if (burn_in < 0) throw std::invalid_argument("EmaMixtureSpec: negative burn_in");
}

std::vector<double> generate_ema_mixture(const EmaMixtureSpec& spec, int length, uint64_t seed) {
    spec.validate();
    if (length < 1) throw std::invalid_argument("generate_ema_mixture: length must be >= 1");
    rng::Stream stream(seed);

    const std::size_t n = spec.timescales.size();
    double w_total = 0.0;
    for (double w : spec.weights) w_total += w;

    std::vector<double> emas(n, spec.mean_level);
    double y = spec.mean_level;
    std::vector<double> out;
    out.reserve(length);
    for (int t = -spec.burn_in; t < length; ++t) {
        for (std::size_t k = 0; k < n; ++k) {
            const double lambda = 1.0 / spec.timescales[k];
            emas[k] = emas[k] * (1.0 - lambda) + lambda * y;
        }
        double mean = spec.mean_level * (1.0 - w_total);
        for (std::size_t k = 0; k < n; ++k) mean += spec.weights[k] * emas[k];
        y = mean + spec.noise_std * stream.gaussian();
        if (t >= 0) out.push_back(y);
    }
    return out;
}

void PanelSpec::validate() const {
    if (n_symbols < 1) throw std::invalid_argument("PanelSpec: need at least one symbol");
    if (!data::is_valid_iso_date(start_date) || !data::is_valid_iso_date(end_date) ||
        !(start_date < end_date))
        throw std::invalid_argument("PanelSpec: bad date range");
    if (!(memory_weight > 0.0 && memory_weight < 1.0))
        throw std::invalid_argument("PanelSpec: memory_weight must lie in (0,1)");
    if (!(noise_std > 0.0)) throw std::invalid_argument("PanelSpec: noise_std must be > 0");
    if (!(common_fraction >= 0.0 && common_fraction <= 1.0))
        throw std::invalid_argument("PanelSpec: common_fraction must lie in [0,1]");
    if (!(stagger_fraction >= 0.0 && stagger_fraction < 1.0))
        throw std::invalid_argument("PanelSpec: stagger_fraction must lie in [0,1)");
}

void write_panel_csv(const std::filesystem::path& path, const PanelSpec& spec) {
    spec.validate();

    // weekday calendar
    std::vector<long> calendar;
    for (long d = data::parse_date_serial(spec.start_date);
         d <= data::parse_date_serial(spec.end_date); ++d) {
        const int wd = data::weekday_of_serial(d);
        if (wd != 0 && wd != 6) calendar.push_back(d);
    }
    const int n_days = static_cast<int>(calendar.size());
    if (n_days < 10) throw std::invalid_argument("PanelSpec: calendar too short");

    // per-scale weights shaped like a power-law kernel, scaled to the
    // requested total memory weight
    const std::size_t n_scales = spec.timescales.size();
    std::vector<double> weights(n_scales);
    {
        double total = 0.0;
        for (std::size_t k = 0; k < n_scales; ++k) {
            weights[k] = std::pow(spec.timescales[k], -spec.kernel_alpha);
            total += weights[k];
        }
        for (double& w : weights) w *= spec.memory_weight / total;
    }

    // common shock stream shared by all symbols
    rng::Stream common_stream(rng::derive(spec.seed, "common"));
    const int burn_in = 1000;
    std::vector<double> common(static_cast<std::size_t>(n_days + burn_in));
    for (double& v : common) v = common_stream.gaussian();

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "date,symbol,rv\n";
    out.precision(12);

    const double w_common = std::sqrt(spec.common_fraction);
    const double w_idio = std::sqrt(1.0 - spec.common_fraction);

    for (int s = 0; s < spec.n_symbols; ++s) {
        char name[16];
        std::snprintf(name, sizeof(name), "SYM%02d", s);
        rng::Stream idio(rng::derive(spec.seed, std::string("idio.") + name));

        // staggered start: symbol 0 spans the whole calendar, later ones start later
        const int start_idx =
            spec.n_symbols == 1
                ? 0
                : static_cast<int>(spec.stagger_fraction * n_days * s / (spec.n_symbols - 1.0));
        const double m_s = spec.base_log_vol + spec.base_spread * idio.gaussian();

        std::vector<double> emas(n_scales, m_s);
        double y = m_s;
        for (int t = -burn_in; t < n_days - start_idx; ++t) {
            for (std::size_t k = 0; k < n_scales; ++k) {
                const double lambda = 1.0 / spec.timescales[k];
                emas[k] = emas[k] * (1.0 - lambda) + lambda * y;
            }
            double mean = m_s * (1.0 - spec.memory_weight);
            for (std::size_t k = 0; k < n_scales; ++k) mean += weights[k] * emas[k];
            // common shocks are indexed by calendar position so the
            // panel is cross-correlated day by day
            const double shock =
                w_common * common[static_cast<std::size_t>(start_idx + t + burn_in)] +
                w_idio * idio.gaussian();
            y = mean + spec.noise_std * shock;
            if (t >= 0) {
                const double rv = std::exp(2.0 * y);
                out << data::date_from_serial(calendar[start_idx + t]) << ',' << name << ',' << rv
                    << "\n";
            }
        }
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace vlstm::synthetic
