#include "vlstm/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vlstm/baselines.hpp"
#include "vlstm/kernels.hpp"
#include "vlstm/model.hpp"
#include "vlstm/rng.hpp"

namespace vlstm::cli {

using json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
    splits.validate();
    train_config().validate();
    if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
    if (archs.empty()) throw std::invalid_argument("need at least one architecture");
    for (const std::string& a : archs) cells::arch_from_string(a);
    for (const std::string& b : biases) cells::bias_from_string(b);
    cells::coupling_from_string(coupling);
    if (n_scales < 1) throw std::invalid_argument("n_scales must be >= 1");
    for (int h : n_h)
        if (h < 1) throw std::invalid_argument("n_h must be >= 1");
    for (int t : t_seq)
        if (t < 1) throw std::invalid_argument("t_seq must be >= 1");
    if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
    if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
    if (selection != "quantile-gap" && selection != "below-mean")
        throw std::invalid_argument("selection must be quantile-gap or below-mean");
}

train::TrainConfig ExperimentConfig::train_config() const {
    train::TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.batch_size = batch_size;
    tc.max_epochs = max_epochs;
    tc.patience = patience;
    tc.clip_norm = clip_norm;
    tc.seed = seed;
    return tc;
}

sweep::GridSpec ExperimentConfig::grid_spec() const {
    sweep::GridSpec grid;
    grid.archs.clear();
    for (const std::string& a : archs) {
        sweep::ArchVariant v;
        v.arch = cells::arch_from_string(a);
        v.n_scales = v.arch == cells::Arch::Lstm ? 1 : n_scales;
        v.coupling = cells::coupling_from_string(coupling);
        grid.archs.push_back(v);
    }
    grid.biases.clear();
    for (const std::string& b : biases) grid.biases.push_back(cells::bias_from_string(b));
    grid.n_h = n_h;
    grid.t_seq = t_seq;
    grid.n_seeds = n_seeds;
    return grid;
}

std::filesystem::path ExperimentConfig::run_log_path() const {
    return std::filesystem::path(out_dir) / "runs.jsonl";
}

void ExperimentConfig::echo_to(const std::filesystem::path& path) const {
    json j;
    j["data"] = data_path;
    j["out_dir"] = out_dir;
    j["train_end"] = splits.train_end;
    j["val_end"] = splits.val_end;
    j["test_end"] = splits.test_end;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["max_epochs"] = max_epochs;
    j["patience"] = patience;
    j["clip_norm"] = clip_norm;
    j["seed"] = seed;
    j["archs"] = archs;
    j["n_scales"] = n_scales;
    j["coupling"] = coupling;
    j["biases"] = biases;
    j["n_h"] = n_h;
    j["t_seq"] = t_seq;
    j["n_seeds"] = n_seeds;
    j["parallelism"] = parallelism;
    j["selection"] = selection;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config echo to " + path.string());
    out << j.dump(2) << "\n";
}

namespace {

void ensure_out_dir(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    cfg.echo_to(std::filesystem::path(cfg.out_dir) / "config.json");
}

sweep::DatasetCache open_dataset(const ExperimentConfig& cfg, std::ostream& log) {
    data::LoadReport report;
    std::vector<data::VolSeries> series = data::load_csv(cfg.data_path, &report);
    log << "loaded " << series.size() << " symbols from " << cfg.data_path << " ("
        << report.rows_total << " rows, " << report.rows_dropped << " dropped)\n";
    return sweep::DatasetCache(std::move(series), cfg.splits);
}

std::vector<sweep::RunRecord> finished_records(const std::vector<sweep::RunRecord>& records) {
    std::vector<sweep::RunRecord> out;
    for (const sweep::RunRecord& r : records)
        if (!std::isnan(r.val_loss) && !std::isnan(r.test_loss)) out.push_back(r);
    return out;
}

sweep::SelectionResult select_records(const ExperimentConfig& cfg,
                                      const std::vector<sweep::RunRecord>& records) {
    std::vector<double> losses;
    losses.reserve(records.size());
    for (const sweep::RunRecord& r : records) losses.push_back(r.val_loss);
    return cfg.selection == "below-mean" ? sweep::below_mean_select(losses)
                                         : sweep::quantile_gap_select(losses);
}

void write_selection(const std::filesystem::path& path, const sweep::SelectionResult& sel,
                     const std::vector<sweep::RunRecord>& records) {
    json j;
    j["threshold"] = sel.threshold;
    j["max_gap_index"] = sel.max_gap_index;
    j["quantiles"] = sel.quantiles;
    json keys = json::array();
    for (int i : sel.selected) keys.push_back(records.at(i).key());
    j["selected"] = keys;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace

void cmd_fit_kernel(double alpha, double x_lo, double x_hi, int n,
                    const std::filesystem::path& out_csv, std::ostream& log) {
    kernels::ExpSumKernel k = kernels::fit_exp_sum(alpha, x_lo, x_hi, n);
    const double err = kernels::approx_error(k);
    if (!out_csv.empty()) {
        std::ofstream out(out_csv);
        if (!out) throw std::runtime_error("cannot write " + out_csv.string());
        out.precision(17);
        out << "tau,weight\n";
        for (std::size_t i = 0; i < k.timescales.size(); ++i)
            out << k.timescales[i] << ',' << k.weights[i] << "\n";
    }
    log << "fit " << n << " exponentials to x^-" << alpha << " on [" << x_lo << ", " << x_hi
        << "]: sup relative error " << err << "\n";
}

void cmd_gen_data(const synthetic::PanelSpec& spec, const std::filesystem::path& out_csv,
                  std::ostream& log) {
    synthetic::write_panel_csv(out_csv, spec);
    log << "wrote synthetic panel (" << spec.n_symbols << " symbols, " << spec.start_date << ".."
        << spec.end_date << ") to " << out_csv.string() << "\n";
}

sweep::RunRecord cmd_train(const ExperimentConfig& cfg, const std::string& arch, int n_h, int t_seq,
                           int seed, std::ostream& log) {
    cfg.validate();
    if (seed < 0) throw std::invalid_argument("seed must be >= 0");
    ensure_out_dir(cfg);

    model::ModelConfig mc;
    mc.cell.arch = cells::arch_from_string(arch);
    mc.cell.n_x = 1;
    mc.cell.n_h = n_h;
    mc.cell.n_scales = mc.cell.arch == cells::Arch::Lstm ? 1 : cfg.n_scales;
    mc.cell.bias = cells::bias_from_string(cfg.biases.at(0));
    mc.cell.coupling = cells::coupling_from_string(cfg.coupling);
    mc.t_seq = t_seq;

    sweep::RunRecord r;
    r.arch = arch;
    r.bias = cfg.biases.at(0);
    r.coupling = cfg.coupling;
    r.n_scales = mc.cell.n_scales;
    r.n_h = n_h;
    r.t_seq = t_seq;
    r.seed = seed;

    for (const sweep::RunRecord& existing : sweep::load_run_log(cfg.run_log_path()))
        if (existing.key() == r.key()) {
            log << "run " << r.key() << " already recorded; skipping\n";
            return existing;
        }

    sweep::DatasetCache datasets = open_dataset(cfg, log);
    const data::WindowedDataset& ds = datasets.get(t_seq);

    const uint64_t model_seed = rng::derive(cfg.seed, static_cast<uint64_t>(seed));
    train::TrainConfig tc = cfg.train_config();
    tc.seed = model_seed;

    const std::string stem = r.arch + "_" + r.bias + "_" + r.coupling + "_s" +
                             std::to_string(r.n_scales) + "_nh" + std::to_string(r.n_h) + "_t" +
                             std::to_string(r.t_seq) + "_seed" + std::to_string(r.seed);
    std::ofstream epoch_log(std::filesystem::path(cfg.out_dir) / (stem + "_epochs.csv"));
    epoch_log << "epoch,train_loss,val_loss,wall_time_s\n";
    epoch_log.precision(17);

    const auto t0 = std::chrono::steady_clock::now();
    model::ForecastModel m = model::make_model(mc, model_seed);
    train::TrainResult tr = train::train_model(m, ds, tc, [&](const train::EpochStats& s) {
        epoch_log << s.epoch << ',' << s.train_loss << ',' << s.val_loss << ',' << s.wall_time_s
                  << "\n";
    });

    r.epochs_run = tr.epochs_run;
    r.converged = tr.converged;
    r.diverged = tr.diverged;
    if (tr.diverged || tr.val_curve.empty()) {
        r.val_loss = std::numeric_limits<double>::quiet_NaN();
        r.test_loss = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.val_loss = tr.best_val_loss;
        r.test_loss = train::evaluate(m, ds, data::Split::Test);
        std::filesystem::create_directories(std::filesystem::path(cfg.out_dir) / "models");
        model::save_model(std::filesystem::path(cfg.out_dir) / "models" / (stem + ".ntar"), m);
        r.archive = stem + ".ntar";
    }
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::ofstream log_out(cfg.run_log_path(), std::ios::app);
    if (!log_out) throw std::runtime_error("cannot append to " + cfg.run_log_path().string());
    log_out << sweep::to_json_line(r) << "\n";

    log << "trained " << r.key() << ": val " << r.val_loss << ", test " << r.test_loss << ", "
        << r.epochs_run << " epochs" << (r.converged ? "" : " (no convergence)") << "\n";
    if (tr.diverged) throw std::runtime_error("training diverged: " + tr.diagnostic);
    return r;
}

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    sweep::DatasetCache datasets = open_dataset(cfg, log);

    sweep::RunGridOptions options;
    options.log_path = cfg.run_log_path();
    options.archive_dir = std::filesystem::path(cfg.out_dir) / "models";
    options.parallelism = cfg.parallelism;
    options.base_seed = cfg.seed;
    options.quiet = true;
    options.progress = &log;

    int executed = 0;
    std::vector<sweep::RunRecord> records =
        sweep::run_grid(cfg.grid_spec(), datasets, cfg.train_config(), options, &executed);
    log << "sweep complete: " << records.size() << " records (" << executed << " new)\n";
}

sweep::SelectionResult cmd_select(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    std::vector<sweep::RunRecord> records = sweep::load_run_log(cfg.run_log_path());
    if (records.empty())
        throw std::runtime_error("no run records in " + cfg.run_log_path().string());
    std::vector<sweep::RunRecord> usable = finished_records(records);
    if (usable.empty()) throw std::runtime_error("no finished runs to select from");

    sweep::SelectionResult sel = select_records(cfg, usable);
    write_selection(std::filesystem::path(cfg.out_dir) / "selection.json", sel, usable);
    log << "selection threshold " << sel.threshold << " keeps " << sel.selected.size() << " of "
        << usable.size() << " runs\n";
    return sel;
}

void cmd_report(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    std::vector<sweep::RunRecord> records = sweep::load_run_log(cfg.run_log_path());
    if (records.empty())
        throw std::runtime_error("no run records in " + cfg.run_log_path().string());
    std::vector<sweep::RunRecord> usable = finished_records(records);
    if (usable.empty()) throw std::runtime_error("no finished runs to report on");

    sweep::SelectionResult sel = select_records(cfg, usable);
    write_selection(std::filesystem::path(cfg.out_dir) / "selection.json", sel, usable);
    sweep::SummaryTables tables = sweep::summarize(usable, sel.selected);

    const std::filesystem::path out_dir(cfg.out_dir);

    {
        std::ofstream out(out_dir / "summary_table.csv");
        out.precision(17);
        out << "arch,bias,count,test_loss_mean,test_loss_std\n";
        for (const sweep::SummaryCell& c : tables.by_arch_bias) {
            out << c.arch << ',' << c.bias << ',' << c.count << ',';
            if (c.missing)
                out << "missing,missing\n";
            else
                out << c.mean << ',' << c.stdev << "\n";
        }
        // baseline rows for context
        out << "rough_vol_reference,-,0," << baselines::reference_mse() << ",\n";
    }
    {
        std::ofstream out(out_dir / "loss_vs_nh.csv");
        out.precision(17);
        out << "arch,bias,n_h,test_loss_mean,count\n";
        for (const auto& [arch, bias, nh, mean, count] : tables.loss_vs_nh)
            out << arch << ',' << bias << ',' << nh << ',' << mean << ',' << count << "\n";
    }
    {
        std::ofstream out(out_dir / "loss_vs_tseq.csv");
        out.precision(17);
        out << "arch,bias,t_seq,test_loss_mean,count\n";
        for (const auto& [arch, bias, ts, mean, count] : tables.loss_vs_tseq)
            out << arch << ',' << bias << ',' << ts << ',' << mean << ',' << count << "\n";
    }
    {
        std::ofstream out(out_dir / "ecdf.csv");
        out.precision(17);
        out << "arch,bias,epochs,fraction\n";
        for (const sweep::EcdfCurve& c : sweep::convergence_ecdf(usable, cfg.max_epochs))
            for (const sweep::EcdfPoint& p : c.points)
                out << c.arch << ',' << c.bias << ',' << p.epochs << ',' << p.fraction << "\n";
    }
    {
        std::ofstream out(out_dir / "best_by_validation.csv");
        out.precision(17);
        out << "arch,bias,n_h,t_seq,seed,val_loss,test_loss\n";
        for (const sweep::RunRecord& r : sweep::best_by_validation(usable))
            out << r.arch << ',' << r.bias << ',' << r.n_h << ',' << r.t_seq << ',' << r.seed << ','
                << r.val_loss << ',' << r.test_loss << "\n";
    }

    log << "report written to " << cfg.out_dir << " (summary_table.csv, loss_vs_nh.csv, "
           "loss_vs_tseq.csv, ecdf.csv, best_by_validation.csv)\n";
}

void cmd_baseline(const ExperimentConfig& cfg, int t_seq, std::ostream& log) {
    cfg.validate();
    ensure_out_dir(cfg);
    sweep::DatasetCache datasets = open_dataset(cfg, log);
    const data::WindowedDataset& ds = datasets.get(t_seq);

    const std::vector<double> taus = baselines::default_baseline_timescales();
    baselines::LinearKernelForecaster lin = baselines::fit_linear_kernel(ds, taus);

    double persistence_mse = 0.0;
    {
        const std::vector<int>& idx = ds.split(data::Split::Test);
        if (idx.empty()) throw std::runtime_error("baseline: empty test split");
        for (int i : idx) {
            const double d =
                baselines::persistence_forecast(ds.samples[i].window) - ds.samples[i].target;
            persistence_mse += d * d;
        }
        persistence_mse /= static_cast<double>(idx.size());
    }
    const double linear_mse = baselines::mse_on_split(lin, ds, data::Split::Test);

    const std::filesystem::path out_dir(cfg.out_dir);
    {
        std::ofstream out(out_dir / "baseline_predictions.csv");
        out.precision(17);
        out << "model,symbol,date,prediction,target\n";
        for (int i : ds.split(data::Split::Test)) {
            const data::Sample& s = ds.samples[i];
            out << "persistence," << s.symbol << ',' << s.end_date << ','
                << baselines::persistence_forecast(s.window) << ',' << s.target << "\n";
            out << "linear_kernel," << s.symbol << ',' << s.end_date << ','
                << baselines::predict(lin, s.window) << ',' << s.target << "\n";
        }
    }
    {
        std::ofstream out(out_dir / "baselines.csv");
        out.precision(17);
        out << "model,t_seq,test_mse\n";
        out << "persistence," << t_seq << ',' << persistence_mse << "\n";
        out << "linear_kernel," << t_seq << ',' << linear_mse << "\n";
        out << "rough_vol_reference,-," << baselines::reference_mse() << "\n";
    }
    log << "baselines at t_seq " << t_seq << ": persistence " << persistence_mse
        << ", linear kernel " << linear_mse << ", rough vol reference "
        << baselines::reference_mse() << "\n";
}

}  // namespace vlstm::cli
