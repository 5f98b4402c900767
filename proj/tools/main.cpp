// Command-line driver: kernel fits, single trainings, grid sweeps, model
// selection, reports, baselines, and synthetic data generation.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlstm/cli.hpp"

namespace {

using vlstm::cli::ExperimentConfig;

void add_experiment_options(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--data", cfg.data_path, "input CSV (date,symbol,rv)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--train-end", cfg.splits.train_end, "last train date");
    cmd->add_option("--val-end", cfg.splits.val_end, "last validation date");
    cmd->add_option("--test-end", cfg.splits.test_end, "last test date");
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", cfg.batch_size, "mini-batch size");
    cmd->add_option("--max-epochs", cfg.max_epochs, "epoch cap");
    cmd->add_option("--patience", cfg.patience, "early-stopping patience");
    cmd->add_option("--clip-norm", cfg.clip_norm, "global gradient-norm clip (<=0 disables)");
    cmd->add_option("--seed", cfg.seed, "base seed; per-run streams derive from it");
    cmd->add_option("--arch", cfg.archs, "architectures (lstm, vlstm, msgru)");
    cmd->add_option("--n-scales", cfg.n_scales, "timescales per dimension (vlstm/msgru)");
    cmd->add_option("--coupling", cfg.coupling, "vlstm gate coupling (independent|tied)");
    cmd->add_option("--bias", cfg.biases, "bias modes (on, off)");
    cmd->add_option("--n-h", cfg.n_h, "hidden sizes");
    cmd->add_option("--t-seq", cfg.t_seq, "sequence lengths");
    cmd->add_option("--n-seeds", cfg.n_seeds, "seeds per grid cell");
    cmd->add_option("--parallelism", cfg.parallelism, "worker pool size");
    cmd->add_option("--selection", cfg.selection, "model filter (quantile-gap|below-mean)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-timescale recurrent networks for long-memory time series"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    ExperimentConfig cfg;

    // fit-kernel
    double alpha = 0.5, x_lo = 1.0, x_hi = 1000.0;
    int n_exp = 4;
    std::string kernel_csv = "kernel.csv";
    CLI::App* fit = app.add_subcommand("fit-kernel", "approximate x^-alpha by a sum of exponentials");
    fit->add_option("--alpha", alpha, "power-law exponent (0,2)")->required();
    fit->add_option("--lo", x_lo, "range start");
    fit->add_option("--hi", x_hi, "range end");
    fit->add_option("--n", n_exp, "number of exponentials");
    fit->add_option("--out", kernel_csv, "output CSV (tau,weight)");

    // gen-data
    vlstm::synthetic::PanelSpec panel;
    std::string panel_csv = "synthetic_rv.csv";
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic realized-variance panel");
    gen->add_option("--out", panel_csv, "output CSV path");
    gen->add_option("--symbols", panel.n_symbols, "number of symbols");
    gen->add_option("--start", panel.start_date, "first calendar date");
    gen->add_option("--end", panel.end_date, "last calendar date");
    gen->add_option("--noise-std", panel.noise_std, "innovation std of log volatility");
    gen->add_option("--memory-weight", panel.memory_weight, "total EMA memory weight (<1)");
    gen->add_option("--common-fraction", panel.common_fraction, "cross-sectional shock share");
    gen->add_option("--stagger", panel.stagger_fraction, "start-date stagger fraction [0,1)");
    gen->add_option("--gen-seed", panel.seed, "generator seed");

    // train
    std::string train_arch = "lstm";
    int train_nh = 3, train_tseq = 40, train_seed = 0;
    CLI::App* tr = app.add_subcommand("train", "train one model and record the run");
    add_experiment_options(tr, cfg);
    tr->add_option("--train-arch", train_arch, "architecture for this run")->required();
    tr->add_option("--train-n-h", train_nh, "hidden size")->required();
    tr->add_option("--train-t-seq", train_tseq, "sequence length")->required();
    tr->add_option("--train-seed", train_seed, "seed index");

    // sweep / select / report
    CLI::App* sw = app.add_subcommand("sweep", "run the hyperparameter grid");
    add_experiment_options(sw, cfg);
    CLI::App* sel = app.add_subcommand("select", "quantile-gap selection over the run log");
    add_experiment_options(sel, cfg);
    CLI::App* rep = app.add_subcommand("report", "summary tables, slices, and ECDF data");
    add_experiment_options(rep, cfg);

    // baseline
    int baseline_tseq = 40;
    CLI::App* base = app.add_subcommand("baseline", "persistence and EMA-bank linear baselines");
    add_experiment_options(base, cfg);
    base->add_option("--baseline-t-seq", baseline_tseq, "window length for baseline features");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) {
            vlstm::cli::cmd_fit_kernel(alpha, x_lo, x_hi, n_exp, kernel_csv, std::cout);
        } else if (gen->parsed()) {
            vlstm::cli::cmd_gen_data(panel, panel_csv, std::cout);
        } else if (tr->parsed()) {
            vlstm::cli::cmd_train(cfg, train_arch, train_nh, train_tseq, train_seed, std::cout);
        } else if (sw->parsed()) {
            vlstm::cli::cmd_sweep(cfg, std::cout);
        } else if (sel->parsed()) {
            vlstm::cli::cmd_select(cfg, std::cout);
        } else if (rep->parsed()) {
            vlstm::cli::cmd_report(cfg, std::cout);
        } else if (base->parsed()) {
            vlstm::cli::cmd_baseline(cfg, baseline_tseq, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
