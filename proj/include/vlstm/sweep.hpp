#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vlstm/cells.hpp"
#include "vlstm/data.hpp"
#include "vlstm/train.hpp"

namespace vlstm::sweep {

// One trained model's full provenance; one JSON line per record.
struct RunRecord {
    int schema = 1;
    std::string arch;       // lstm | vlstm | msgru
    std::string bias;       // on | off
    std::string coupling;   // independent | tied
    int n_scales = 1;
    int n_h = 1;
    int t_seq = 1;
    int seed = 0;
    double val_loss = 0.0;
    double test_loss = 0.0;
    int epochs_run = 0;
    bool converged = false;
    bool diverged = false;
    double wall_time_s = 0.0;
    std::string archive;    // model archive path, relative to the run log

    std::string key() const;  // identity for resume checks (everything but results)
};

std::string to_json_line(const RunRecord& r);
RunRecord record_from_json(const std::string& line);

std::vector<RunRecord> load_run_log(const std::filesystem::path& path);

// Architecture variant in the grid.
struct ArchVariant {
    cells::Arch arch = cells::Arch::Lstm;
    int n_scales = 1;
    cells::GateCoupling coupling = cells::GateCoupling::Independent;
};

struct GridSpec {
    std::vector<ArchVariant> archs;
    std::vector<cells::BiasMode> biases = {cells::BiasMode::On, cells::BiasMode::Off};
    std::vector<int> n_h = {1, 2, 3, 4, 5};
    std::vector<int> t_seq = {10, 25, 40, 55, 70, 85, 100};
    int n_seeds = 20;

    // hyperparameter variations per architecture (seeds excluded)
    int variations_per_arch() const {
        return static_cast<int>(biases.size() * n_h.size() * t_seq.size());
    }
    int total_runs() const {
        return static_cast<int>(archs.size()) * variations_per_arch() * n_seeds;
    }
};

struct RunGridOptions {
    std::filesystem::path log_path;
    std::filesystem::path archive_dir;  // empty = no model archives
    int parallelism = 1;
    uint64_t base_seed = 0;
    bool quiet = false;
    std::ostream* progress = nullptr;  // defaults to std::cout unless quiet
};

// Windows and standardizes the raw series per sequence length, lazily,
// so one grid can span several t_seq values. Thread safe.
class DatasetCache {
public:
    DatasetCache(std::vector<data::VolSeries> series, data::SplitDates splits);
    const data::WindowedDataset& get(int t_seq);

private:
    std::vector<data::VolSeries> series_;
    data::SplitDates splits_;
    std::mutex mutex_;
    std::map<int, std::unique_ptr<data::WindowedDataset>> cache_;
};

// Runs every grid cell, appending records durably as runs finish.
// Records already present in the log are not recomputed. Returns all
// records (existing + new) in canonical grid order. `jobs_executed`,
// when given, reports how many trainings actually ran.
std::vector<RunRecord> run_grid(const GridSpec& grid, DatasetCache& datasets,
                                const train::TrainConfig& cfg, const RunGridOptions& options,
                                int* jobs_executed = nullptr);
// Single-dataset variant; every t_seq in the grid must equal ds.t_seq.
std::vector<RunRecord> run_grid(const GridSpec& grid, const data::WindowedDataset& ds,
                                const train::TrainConfig& cfg, const RunGridOptions& options,
                                int* jobs_executed = nullptr);

// Quantile-gap model selection over validation losses. Empirical
// quantiles q(p), p = 0.1..0.9, linear interpolation between order
// statistics; the threshold sits at the lower edge of the largest gap
// between consecutive quantiles (ties resolved toward larger p).
struct SelectionResult {
    double threshold = 0.0;
    std::vector<int> selected;       // indices into the input loss vector
    std::vector<double> quantiles;   // q(0.1) .. q(0.9)
    int max_gap_index = 0;           // j such that the gap is q[j+1] - q[j]
};

SelectionResult quantile_gap_select(const std::vector<double>& val_losses);

// Alternative filter kept for comparison: below-average validation loss.
SelectionResult below_mean_select(const std::vector<double>& val_losses);

// argmin val_loss per (arch, bias, n_h, t_seq) group, ties to lower seed.
std::vector<RunRecord> best_by_validation(const std::vector<RunRecord>& records);

struct SummaryCell {
    std::string arch;
    std::string bias;
    int count = 0;
    double mean = 0.0;    // of test losses
    double stdev = 0.0;   // population
    bool missing = false;
};

struct SummaryTables {
    std::vector<SummaryCell> by_arch_bias;                 // Table-1 style
    // mean test loss slices of the selected runs
    std::vector<std::tuple<std::string, std::string, int, double, int>> loss_vs_nh;    // arch,bias,n_h,mean,count
    std::vector<std::tuple<std::string, std::string, int, double, int>> loss_vs_tseq;  // arch,bias,t_seq,mean,count
};

// Summaries over the selected ("better") runs.
SummaryTables summarize(const std::vector<RunRecord>& records, const std::vector<int>& selected);

struct EcdfPoint {
    int epochs = 0;
    double fraction = 0.0;
};
struct EcdfCurve {
    std::string arch;
    std::string bias;
    std::vector<EcdfPoint> points;
};

// Convergence-time ECDF per (arch, bias); non-converged runs are counted
// at max_epochs.
std::vector<EcdfCurve> convergence_ecdf(const std::vector<RunRecord>& records, int max_epochs);

}  // namespace vlstm::sweep
