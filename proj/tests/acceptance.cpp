// Acceptance suite: one criterion per section, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "vlstm/cli.hpp"
#include "vlstm/kernels.hpp"
#include "vlstm/model.hpp"
#include "vlstm/rng.hpp"
#include "vlstm/sweep.hpp"
#include "vlstm/synthetic.hpp"
#include "vlstm/train.hpp"

using namespace vlstm;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string summary;
    bool pass = false;
};

std::vector<Criterion> g_results;

void report(int id, bool pass, const std::string& summary) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, summary.c_str());
    std::fflush(stdout);
    g_results.push_back({id, summary, pass});
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// criterion 1: full-model gradients vs central differences
// ---------------------------------------------------------------------------
void criterion_1() {
    struct Variant {
        cells::Arch arch;
        cells::GateCoupling coupling;
        const char* name;
    };
    const Variant variants[] = {
        {cells::Arch::Lstm, cells::GateCoupling::Independent, "lstm"},
        {cells::Arch::Vlstm, cells::GateCoupling::Independent, "vlstm-independent"},
        {cells::Arch::Vlstm, cells::GateCoupling::Tied, "vlstm-tied"},
        {cells::Arch::MsGru, cells::GateCoupling::Independent, "msgru"},
    };

    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_at = "-";
    int instances = 0;
    for (const Variant& v : variants) {
        for (cells::BiasMode bias : {cells::BiasMode::On, cells::BiasMode::Off}) {
            for (int i = 0; i < 20; ++i) {
                model::ModelConfig mc;
                mc.cell.arch = v.arch;
                mc.cell.n_x = 1;
                mc.cell.n_h = (i % 2 == 0) ? 1 : 3;
                mc.cell.n_scales = v.arch == cells::Arch::Lstm ? 1 : 2;
                mc.cell.bias = bias;
                mc.cell.coupling = v.coupling;
                mc.t_seq = (i % 4 < 2) ? 5 : 20;

                const uint64_t seed = rng::derive(1000 + i, v.name) + (bias == cells::BiasMode::On);
                model::ForecastModel m = model::make_model(mc, seed);
                // random nonzero parameters, not just the init distribution
                rng::Stream param_stream(rng::derive(seed, "params"));
                for (auto& [name, t] : m.params)
                    for (std::size_t k = 0; k < t.numel(); ++k)
                        t[k] = 0.7 * param_stream.gaussian();

                auto g = model::build_graph(mc, true);
                nd::NamedTensors bind = m.params;
                rng::Stream data_stream(rng::derive(seed, "data"));
                const int batch = 2;
                std::vector<std::vector<double>> windows(batch, std::vector<double>(mc.t_seq));
                std::vector<const double*> ptrs;
                std::vector<nd::Tensor> window_tensors;
                for (auto& w : windows) {
                    for (double& x : w) x = data_stream.gaussian();
                    ptrs.push_back(w.data());
                    nd::Tensor wt(mc.t_seq, 1);
                    for (int t = 0; t < mc.t_seq; ++t) wt.at(t, 0) = w[t];
                    window_tensors.push_back(std::move(wt));
                }
                model::bind_batch(mc, ptrs, bind);
                // keep the loss scale small: the finite-difference noise is
                // u*|loss|/(2 eps), so targets sit near the predictions
                // (this leaves d pred / d theta untouched)
                std::vector<double> preds = model::predict_batch(m, window_tensors);
                nd::Tensor targets(batch, 1);
                for (int r = 0; r < batch; ++r)
                    targets.at(r, 0) = preds[r] + 0.03 * data_stream.gaussian();
                bind["target"] = targets;

                // eps = 1e-4 balances difference truncation against
                // roundoff for T_seq-deep chains
                const double err = nd::grad_check(*g, bind, "loss", 1e-4);
                ++instances;
                if (err > worst) {
                    worst = err;
                    worst_at = std::string(v.name) + "/bias-" + cells::to_string(bias);
                }
            }
        }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream msg;
    msg << "gradient check over " << instances << " instances: max rel error " << worst << " at "
        << worst_at << " (tolerance 1e-5), " << secs << "s (limit 60s)";
    report(1, worst <= 1e-5 && secs < 60.0, msg.str());
}

// ---------------------------------------------------------------------------
// criterion 2: VLSTM(n=1) reduces to the LSTM, forward and in training
// ---------------------------------------------------------------------------
void criterion_2() {
    bool pass = true;
    std::ostringstream detail;
    for (int trial = 0; trial < 5; ++trial) {
        const int n_h = 1 + trial % 3;
        const int t_seq = 6 + 5 * trial;
        const cells::BiasMode bias = trial % 2 == 0 ? cells::BiasMode::On : cells::BiasMode::Off;
        const uint64_t seed = rng::derive(2000, static_cast<uint64_t>(trial));

        model::ModelConfig lstm_cfg;
        lstm_cfg.cell.arch = cells::Arch::Lstm;
        lstm_cfg.cell.n_h = n_h;
        lstm_cfg.cell.bias = bias;
        lstm_cfg.t_seq = t_seq;
        model::ModelConfig vlstm_cfg = lstm_cfg;
        vlstm_cfg.cell.arch = cells::Arch::Vlstm;
        vlstm_cfg.cell.n_scales = 1;

        model::ForecastModel lstm = model::make_model(lstm_cfg, seed);
        model::ForecastModel vlstm = model::make_model(vlstm_cfg, seed);

        // forward agreement on random windows
        rng::Stream stream(rng::derive(seed, "windows"));
        double max_diff = 0.0;
        for (int w = 0; w < 20; ++w) {
            nd::Tensor window(t_seq, 1);
            for (std::size_t i = 0; i < window.numel(); ++i) window[i] = stream.gaussian();
            max_diff = std::max(max_diff, std::abs(model::predict(lstm, window) -
                                                   model::predict(vlstm, window)));
        }
        if (max_diff > 1e-12) {
            pass = false;
            detail << " forward diff " << max_diff << " at trial " << trial << ";";
        }

        // identical training trajectories on a synthetic series
        synthetic::EmaMixtureSpec spec;
        spec.timescales = {8.0};
        spec.weights = {0.85};
        spec.noise_std = 0.3;
        std::vector<double> values =
            synthetic::generate_ema_mixture(spec, 500, rng::derive(seed, "series"));
        data::WindowedDataset ds;
        ds.t_seq = t_seq;
        long serial = data::parse_date_serial("2000-01-03");
        for (int t = t_seq; t < static_cast<int>(values.size()); ++t) {
            data::Sample s;
            s.symbol = "GEN";
            s.end_date = data::date_from_serial(serial + t);
            s.window.assign(values.begin() + (t - t_seq), values.begin() + t);
            s.target = values[t];
            ds.split_indices[t <= 300 ? 0 : (t <= 400 ? 1 : 2)].push_back(
                static_cast<int>(ds.samples.size()));
            ds.samples.push_back(std::move(s));
        }

        train::TrainConfig tc;
        tc.max_epochs = 15;
        tc.patience = 5;
        tc.seed = seed;
        train::TrainResult r_lstm = train::train_model(lstm, ds, tc);
        train::TrainResult r_vlstm = train::train_model(vlstm, ds, tc);

        bool same = r_lstm.epochs_run == r_vlstm.epochs_run &&
                    r_lstm.val_curve.size() == r_vlstm.val_curve.size();
        if (same)
            for (std::size_t i = 0; i < r_lstm.val_curve.size(); ++i)
                if (r_lstm.val_curve[i] != r_vlstm.val_curve[i] ||
                    r_lstm.train_curve[i] != r_vlstm.train_curve[i])
                    same = false;
        if (!same) {
            pass = false;
            detail << " trajectory mismatch at trial " << trial << ";";
        }
    }
    std::ostringstream msg;
    msg << "VLSTM(n=1) vs LSTM over 5 configurations: forward outputs within 1e-12 and "
           "bit-identical training curves"
        << (pass ? "" : " --" + detail.str());
    report(2, pass, msg.str());
}

// ---------------------------------------------------------------------------
// criterion 3: four exponentials approximate three decades within 0.10
// ---------------------------------------------------------------------------
void criterion_3() {
    const auto t0 = std::chrono::steady_clock::now();
    bool pass = true;
    std::ostringstream detail;
    for (double alpha : {0.3, 0.5, 0.8}) {
        kernels::ExpSumKernel k = kernels::fit_exp_sum(alpha, 1.0, 1000.0, 4);
        // independent dense-grid oracle (finer than the fit grid)
        const int points = 4000;
        double k0 = 0.0;
        for (std::size_t i = 0; i < k.weights.size(); ++i)
            k0 += k.weights[i] * std::exp(-1.0 / k.timescales[i]);
        double sup = 0.0;
        for (int j = 0; j < points; ++j) {
            const double x = std::pow(1000.0, j / static_cast<double>(points - 1));
            double val = 0.0;
            for (std::size_t i = 0; i < k.weights.size(); ++i)
                val += k.weights[i] * std::exp(-x / k.timescales[i]);
            const double target = std::pow(x, -alpha);
            sup = std::max(sup, std::abs(val / k0 - target) / target);
        }
        detail << " alpha=" << alpha << ": " << sup << ";";
        if (sup > 0.10) pass = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream msg;
    msg << "fit_exp_sum n=4 on [1,1000], sup relative error vs dense oracle:" << detail.str()
        << " tolerance 0.10, " << secs << "s";
    report(3, pass, msg.str());
}

// ---------------------------------------------------------------------------
// criterion 4: two-timescale EMA mixture recovery, VLSTM vs LSTM
// ---------------------------------------------------------------------------
void criterion_4() {
    synthetic::EmaMixtureSpec spec;
    spec.timescales = {5.0, 100.0};
    spec.weights = {0.57, 0.40};
    spec.mean_level = 0.0;
    spec.noise_std = 0.25;
    const double v = spec.noise_std * spec.noise_std;

    std::vector<double> values = synthetic::generate_ema_mixture(spec, 3600, 41);
    const int t_seq = 100;
    data::WindowedDataset ds;
    ds.t_seq = t_seq;
    long serial = data::parse_date_serial("2000-01-03");
    const int n = static_cast<int>(values.size());
    for (int t = t_seq; t < n; ++t) {
        data::Sample s;
        s.symbol = "GEN";
        s.end_date = data::date_from_serial(serial + t);
        s.window.assign(values.begin() + (t - t_seq), values.begin() + t);
        s.target = values[t];
        ds.split_indices[t <= static_cast<int>(0.6 * n) ? 0
                                                        : (t <= static_cast<int>(0.8 * n) ? 1 : 2)]
            .push_back(static_cast<int>(ds.samples.size()));
        ds.samples.push_back(std::move(s));
    }
    data::standardize(ds);
    const double var_scale = ds.stdev * ds.stdev;

    auto run_arch = [&](cells::Arch arch, uint64_t seed) {
        model::ModelConfig mc;
        mc.cell.arch = arch;
        mc.cell.n_h = 2;
        mc.cell.n_scales = arch == cells::Arch::Vlstm ? 2 : 1;
        mc.cell.bias = cells::BiasMode::Off;
        mc.t_seq = t_seq;
        model::ForecastModel m = model::make_model(mc, seed);
        train::TrainConfig tc;
        tc.seed = seed;
        tc.max_epochs = 1000;
        train::TrainResult res = train::train_model(m, ds, tc);
        return std::pair<double, int>{train::evaluate(m, ds, data::Split::Test), res.epochs_run};
    };

    std::vector<double> vlstm_mse, vlstm_epochs, lstm_epochs;
    for (int s = 0; s < 10; ++s) {
        const uint64_t seed = rng::derive(4000, static_cast<uint64_t>(s));
        auto [vl_mse, vl_epochs] = run_arch(cells::Arch::Vlstm, seed);
        auto [ls_mse, ls_epochs] = run_arch(cells::Arch::Lstm, seed);
        vlstm_mse.push_back(vl_mse * var_scale);  // back to generator units
        vlstm_epochs.push_back(vl_epochs);
        lstm_epochs.push_back(ls_epochs);
        std::printf("  c4 seed %d: vlstm mse/v=%.3f epochs=%d | lstm mse/v=%.3f epochs=%d\n", s,
                    vlstm_mse.back() / v, vl_epochs, ls_mse * var_scale / v, ls_epochs);
        std::fflush(stdout);
    }

    const double med_mse = median(vlstm_mse);
    const double med_vlstm_epochs = median(vlstm_epochs);
    const double med_lstm_epochs = median(lstm_epochs);
    const bool pass = med_mse <= 1.15 * v && med_vlstm_epochs < med_lstm_epochs;
    std::ostringstream msg;
    msg << "two-timescale recovery (tau 5/100, v=" << v << "): median VLSTM test MSE " << med_mse
        << " (ratio " << med_mse / v << ", limit 1.15); median epochs VLSTM " << med_vlstm_epochs
        << " vs LSTM " << med_lstm_epochs;
    report(4, pass, msg.str());
}

// ---------------------------------------------------------------------------
// criteria 5 and 6: desk-scale paper shape on the synthetic panel
// ---------------------------------------------------------------------------
void criteria_5_and_6(const fs::path& work) {
    // stand-in for the realized-volatility CSV: the documented generator
    // produces the same schema with matched long-memory structure
    const fs::path csv = work / "panel.csv";
    synthetic::PanelSpec spec;
    spec.n_symbols = 4;
    spec.seed = 2024;
    spec.stagger_fraction = 0.3;
    synthetic::write_panel_csv(csv, spec);

    sweep::DatasetCache cache(data::load_csv(csv), data::SplitDates{});

    sweep::GridSpec grid;
    grid.archs = {{cells::Arch::Lstm, 1, cells::GateCoupling::Independent},
                  {cells::Arch::Vlstm, 2, cells::GateCoupling::Independent}};
    grid.biases = {cells::BiasMode::Off};
    grid.n_h = {3};
    grid.t_seq = {40};
    grid.n_seeds = 10;

    train::TrainConfig tc;  // paper protocol: batch 128, patience 5, cap 1000
    sweep::RunGridOptions options;
    options.log_path = work / "runs.jsonl";
    options.base_seed = 7;
    options.progress = &std::cout;

    std::vector<sweep::RunRecord> records = sweep::run_grid(grid, cache, tc, options);

    std::vector<double> pooled_val;
    std::vector<const sweep::RunRecord*> usable;
    for (const sweep::RunRecord& r : records)
        if (!std::isnan(r.val_loss)) {
            pooled_val.push_back(r.val_loss);
            usable.push_back(&r);
        }

    // (a) selection keeps a non-empty low mode
    sweep::SelectionResult sel = sweep::quantile_gap_select(pooled_val);
    const bool a_pass = !sel.selected.empty();

    // (b) mean selected test MSE: VLSTM <= LSTM
    std::vector<double> sel_lstm, sel_vlstm;
    for (int i : sel.selected) {
        const sweep::RunRecord& r = *usable[i];
        (r.arch == "lstm" ? sel_lstm : sel_vlstm).push_back(r.test_loss);
    }
    const bool b_pass =
        !sel_vlstm.empty() && !sel_lstm.empty() && mean(sel_vlstm) <= mean(sel_lstm);

    // (c) best-by-validation VLSTM test MSE vs the rough-vol reference
    std::vector<sweep::RunRecord> usable_records;
    for (const sweep::RunRecord* r : usable) usable_records.push_back(*r);
    double best_vlstm_test = std::numeric_limits<double>::quiet_NaN();
    for (const sweep::RunRecord& r : sweep::best_by_validation(usable_records))
        if (r.arch == "vlstm") best_vlstm_test = r.test_loss;
    const bool c_pass = best_vlstm_test < 0.288;

    std::ostringstream msg5;
    msg5 << "desk-scale panel (4 symbols, paper splits, N_h=3, T_seq=40, bias off, 10 seeds): "
         << "(a) selection keeps " << sel.selected.size() << "/" << pooled_val.size()
         << " runs at threshold " << sel.threshold << "; (b) mean selected test MSE vlstm "
         << (sel_vlstm.empty() ? 0.0 : mean(sel_vlstm)) << " vs lstm "
         << (sel_lstm.empty() ? 0.0 : mean(sel_lstm)) << "; (c) best-by-validation vlstm test "
         << best_vlstm_test << " vs reference 0.288 (the paper band 0.230-0.245 is a target "
         << "corridor, not a gate)";
    report(5, a_pass && b_pass && c_pass, msg5.str());

    // criterion 6: convergence fractions by 400 epochs
    int lstm_total = 0, lstm_by400 = 0, vlstm_total = 0, vlstm_by400 = 0;
    for (const sweep::RunRecord& r : records) {
        const bool by400 = r.converged && r.epochs_run <= 400;
        if (r.arch == "lstm") {
            ++lstm_total;
            lstm_by400 += by400;
        } else {
            ++vlstm_total;
            vlstm_by400 += by400;
        }
    }
    const double lstm_frac = static_cast<double>(lstm_by400) / lstm_total;
    const double vlstm_frac = static_cast<double>(vlstm_by400) / vlstm_total;

    // report the two ECDFs
    std::ofstream ecdf_out(work / "acceptance_ecdf.csv");
    ecdf_out << "arch,bias,epochs,fraction\n";
    for (const sweep::EcdfCurve& c : sweep::convergence_ecdf(records, tc.max_epochs))
        for (const sweep::EcdfPoint& p : c.points)
            ecdf_out << c.arch << ',' << c.bias << ',' << p.epochs << ',' << p.fraction << "\n";

    std::ostringstream msg6;
    msg6 << "fraction converged by 400 epochs: vlstm " << vlstm_frac << " (" << vlstm_by400 << "/"
         << vlstm_total << ") vs lstm " << lstm_frac << " (" << lstm_by400 << "/" << lstm_total
         << "); ECDF data in " << (work / "acceptance_ecdf.csv").string();
    report(6, vlstm_frac >= lstm_frac, msg6.str());
}

// ---------------------------------------------------------------------------
// criterion 7: selection equals a brute-force oracle on random samples
// ---------------------------------------------------------------------------
std::vector<int> selection_oracle(const std::vector<double>& losses) {
    std::vector<double> sorted = losses;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    auto q = [&](double p) {
        const double pos = 1.0 + (n - 1.0) * p;
        const std::size_t i = static_cast<std::size_t>(std::floor(pos)) - 1;
        if (i + 1 >= sorted.size()) return sorted.back();
        return sorted[i] + (pos - std::floor(pos)) * (sorted[i + 1] - sorted[i]);
    };
    double qs[9];
    for (int j = 0; j < 9; ++j) qs[j] = q(0.1 * (j + 1));
    int best = 0;
    double best_gap = -1.0;
    for (int j = 0; j < 8; ++j) {
        const double gap = qs[j + 1] - qs[j];
        const double tol = 1e-9 * std::max(std::abs(gap), std::abs(best_gap));
        if (gap >= best_gap - tol) {
            best_gap = std::max(gap, best_gap);
            best = j;
        }
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] <= qs[best]) out.push_back(static_cast<int>(i));
    return out;
}

void criterion_7() {
    rng::Stream stream(7777);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 10 + static_cast<int>(stream.bounded(191));  // sizes 10..200
        const bool bimodal = trial % 2 == 0;
        std::vector<double> losses;
        losses.reserve(n);
        for (int i = 0; i < n; ++i) {
            if (bimodal && stream.uniform01() < 0.35)
                losses.push_back(0.9 + 0.4 * stream.uniform01());
            else
                losses.push_back(0.15 + 0.2 * stream.uniform01());
        }
        if (sweep::quantile_gap_select(losses).selected != selection_oracle(losses)) ++mismatches;
    }
    std::ostringstream msg;
    msg << "quantile_gap_select vs brute-force oracle on 1000 random samples (sizes 10-200, "
           "unimodal and bimodal): "
        << mismatches << " mismatching selected sets";
    report(7, mismatches == 0, msg.str());
}

// ---------------------------------------------------------------------------
// criterion 8: cmd_train determinism at the record level
// ---------------------------------------------------------------------------
std::string strip_wall_time(const std::string& line) {
    static const std::regex wall_re("\"wall_time_s\":[^,}]*");
    return std::regex_replace(line, wall_re, "\"wall_time_s\":0");
}

void criterion_8(const fs::path& work) {
    const fs::path csv = work / "panel8.csv";
    synthetic::PanelSpec spec;
    spec.n_symbols = 2;
    spec.start_date = "2008-01-01";
    spec.end_date = "2016-12-31";
    spec.stagger_fraction = 0.0;
    spec.seed = 88;
    synthetic::write_panel_csv(csv, spec);

    auto run_once = [&](const fs::path& out_dir) {
        cli::ExperimentConfig cfg;
        cfg.data_path = csv.string();
        cfg.out_dir = out_dir.string();
        cfg.splits.train_end = "2012-12-31";
        cfg.splits.val_end = "2014-12-31";
        cfg.splits.test_end = "2016-12-31";
        cfg.max_epochs = 8;
        cfg.biases = {"off"};
        std::ostringstream sink;
        cli::cmd_train(cfg, "lstm", 2, 10, 0, sink);
        std::ifstream in(fs::path(out_dir) / "runs.jsonl");
        std::string line;
        std::getline(in, line);
        return line;
    };

    const std::string first = run_once(work / "det_a");
    const std::string second = run_once(work / "det_b");
    const bool pass = !first.empty() && strip_wall_time(first) == strip_wall_time(second);
    std::ostringstream msg;
    msg << "cmd_train run twice: run records byte-identical after masking wall_time_s"
        << (pass ? "" : " -- MISMATCH:\n  " + first + "\n  " + second);
    report(8, pass, msg.str());
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "vlstm_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criteria_5_and_6(work);
    criterion_7();
    criterion_8(work);

    const double total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    int failures = 0;
    std::printf("\n==== acceptance summary (%.0fs) ====\n", total);
    for (const Criterion& c : g_results) {
        std::printf("[%s] criterion %d\n", c.pass ? "PASS" : "FAIL", c.id);
        if (!c.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
