#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vlstm/sweep.hpp"
#include "vlstm/synthetic.hpp"

namespace vlstm::cli {

// Everything a run needs; validated up front and echoed into the output
// directory for provenance.
struct ExperimentConfig {
    std::string data_path;
    std::string out_dir = "out";
    data::SplitDates splits;

    // training
    double learning_rate = 1e-3;
    int batch_size = 128;
    int max_epochs = 1000;
    int patience = 5;
    double clip_norm = 10.0;
    uint64_t seed = 0;

    // grid
    std::vector<std::string> archs = {"lstm", "vlstm"};
    int n_scales = 2;
    std::string coupling = "independent";
    std::vector<std::string> biases = {"on", "off"};
    std::vector<int> n_h = {1, 2, 3, 4, 5};
    std::vector<int> t_seq = {10, 25, 40, 55, 70, 85, 100};
    int n_seeds = 20;
    int parallelism = 1;

    std::string selection = "quantile-gap";  // or "below-mean"

    void validate() const;
    train::TrainConfig train_config() const;
    sweep::GridSpec grid_spec() const;
    std::filesystem::path run_log_path() const;
    void echo_to(const std::filesystem::path& path) const;
};

// Command implementations. Each throws on a violated contract; the
// binary maps exceptions to a nonzero exit status. Progress and results
// go to `log`.

void cmd_fit_kernel(double alpha, double x_lo, double x_hi, int n,
                    const std::filesystem::path& out_csv, std::ostream& log);

void cmd_gen_data(const synthetic::PanelSpec& spec, const std::filesystem::path& out_csv,
                  std::ostream& log);

// One full training run: epoch log, run-record line, model archive.
// Completed runs (already present in the run log) are skipped.
sweep::RunRecord cmd_train(const ExperimentConfig& cfg, const std::string& arch, int n_h, int t_seq,
                           int seed, std::ostream& log);

void cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

sweep::SelectionResult cmd_select(const ExperimentConfig& cfg, std::ostream& log);

void cmd_report(const ExperimentConfig& cfg, std::ostream& log);

void cmd_baseline(const ExperimentConfig& cfg, int t_seq, std::ostream& log);

}  // namespace vlstm::cli
