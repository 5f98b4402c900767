#include "vlstm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "vlstm/model.hpp"
#include "vlstm/rng.hpp"

namespace vlstm::sweep {

using json = nlohmann::ordered_json;

std::string RunRecord::key() const {
    return arch + "|" + bias + "|" + coupling + "|" + std::to_string(n_scales) + "|" +
           std::to_string(n_h) + "|" + std::to_string(t_seq) + "|" + std::to_string(seed);
}

std::string to_json_line(const RunRecord& r) {
    json j;
    j["schema"] = r.schema;
    j["arch"] = r.arch;
    j["bias"] = r.bias;
    j["coupling"] = r.coupling;
    j["n_scales"] = r.n_scales;
    j["n_h"] = r.n_h;
    j["t_seq"] = r.t_seq;
    j["seed"] = r.seed;
    j["val_loss"] = r.val_loss;
    j["test_loss"] = r.test_loss;
    j["epochs_run"] = r.epochs_run;
    j["converged"] = r.converged;
    j["diverged"] = r.diverged;
    j["wall_time_s"] = r.wall_time_s;
    j["archive"] = r.archive;
    return j.dump();
}

RunRecord record_from_json(const std::string& line) {
    json j = json::parse(line);
    RunRecord r;
    r.schema = j.at("schema").get<int>();
    if (r.schema != 1)
        throw std::runtime_error("run record schema " + std::to_string(r.schema) + " not supported");
    r.arch = j.at("arch").get<std::string>();
    r.bias = j.at("bias").get<std::string>();
    r.coupling = j.at("coupling").get<std::string>();
    r.n_scales = j.at("n_scales").get<int>();
    r.n_h = j.at("n_h").get<int>();
    r.t_seq = j.at("t_seq").get<int>();
    r.seed = j.at("seed").get<int>();
    r.val_loss = j.at("val_loss").get<double>();
    r.test_loss = j.at("test_loss").get<double>();
    r.epochs_run = j.at("epochs_run").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.diverged = j.at("diverged").get<bool>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    r.archive = j.at("archive").get<std::string>();
    return r;
}

std::vector<RunRecord> load_run_log(const std::filesystem::path& path) {
    std::vector<RunRecord> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(line));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return records;
}

DatasetCache::DatasetCache(std::vector<data::VolSeries> series, data::SplitDates splits)
    : series_(std::move(series)), splits_(std::move(splits)) {
    splits_.validate();
}

const data::WindowedDataset& DatasetCache::get(int t_seq) {
    std::lock_guard<std::mutex> lk(mutex_);
    auto it = cache_.find(t_seq);
    if (it == cache_.end()) {
        auto ds = std::make_unique<data::WindowedDataset>(
            data::make_windows(series_, t_seq, splits_));
        data::standardize(*ds);
        it = cache_.emplace(t_seq, std::move(ds)).first;
    }
    return *it->second;
}

namespace {

struct Job {
    RunRecord base;   // identity fields filled in
    uint64_t model_seed = 0;
};

std::vector<RunRecord> run_grid_impl(
    const GridSpec& grid, const std::function<const data::WindowedDataset&(int)>& dataset_for,
    const train::TrainConfig& cfg, const RunGridOptions& options, int* jobs_executed) {
    if (grid.archs.empty() || grid.biases.empty() || grid.n_h.empty() || grid.t_seq.empty() ||
        grid.n_seeds < 1)
        throw std::invalid_argument("run_grid: empty grid");

    std::map<std::string, RunRecord> done;
    if (!options.log_path.empty())
        for (RunRecord& r : load_run_log(options.log_path)) done.emplace(r.key(), std::move(r));

    // canonical enumeration order fixes run indices (and thus seeds)
    std::vector<Job> jobs;
    int run_index = 0;
    for (const ArchVariant& av : grid.archs)
        for (cells::BiasMode bias : grid.biases)
            for (int nh : grid.n_h)
                for (int ts : grid.t_seq)
                    for (int seed = 0; seed < grid.n_seeds; ++seed) {
                        RunRecord r;
                        r.arch = cells::to_string(av.arch);
                        r.bias = cells::to_string(bias);
                        r.coupling = cells::to_string(av.coupling);
                        r.n_scales = av.arch == cells::Arch::Lstm ? 1 : av.n_scales;
                        r.n_h = nh;
                        r.t_seq = ts;
                        r.seed = seed;
                        Job job;
                        job.base = std::move(r);
                        // seed depends only on (base_seed, seed index), never on
                        // the architecture, so reduction identities hold
                        job.model_seed = rng::derive(options.base_seed, static_cast<uint64_t>(seed));
                        jobs.push_back(std::move(job));
                        ++run_index;
                    }
    (void)run_index;

    std::vector<std::optional<RunRecord>> results(jobs.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto it = done.find(jobs[i].base.key());
        if (it != done.end())
            results[i] = it->second;
        else
            todo.push_back(i);
    }

    std::mutex log_mutex;
    std::ofstream log_out;
    if (!options.log_path.empty()) {
        if (!options.log_path.parent_path().empty())
            std::filesystem::create_directories(options.log_path.parent_path());
        log_out.open(options.log_path, std::ios::app);
        if (!log_out) throw std::runtime_error("cannot open run log " + options.log_path.string());
    }
    if (!options.archive_dir.empty()) std::filesystem::create_directories(options.archive_dir);

    std::atomic<std::size_t> next{0};
    std::atomic<int> executed{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t slot = next.fetch_add(1);
            if (slot >= todo.size()) return;
            const std::size_t i = todo[slot];
            const Job& job = jobs[i];
            RunRecord r = job.base;

            model::ModelConfig mc;
            mc.cell.arch = cells::arch_from_string(r.arch);
            mc.cell.n_x = 1;
            mc.cell.n_h = r.n_h;
            mc.cell.n_scales = r.n_scales;
            mc.cell.bias = cells::bias_from_string(r.bias);
            mc.cell.coupling = cells::coupling_from_string(r.coupling);
            mc.t_seq = r.t_seq;

            train::TrainConfig tc = cfg;
            tc.seed = job.model_seed;

            const auto t0 = std::chrono::steady_clock::now();
            try {
                const data::WindowedDataset& ds = dataset_for(r.t_seq);
                model::ForecastModel m = model::make_model(mc, job.model_seed);
                train::TrainResult tr = train::train_model(m, ds, tc);
                r.epochs_run = tr.epochs_run;
                r.converged = tr.converged;
                r.diverged = tr.diverged;
                if (tr.diverged || tr.val_curve.empty()) {
                    r.val_loss = std::numeric_limits<double>::quiet_NaN();
                    r.test_loss = std::numeric_limits<double>::quiet_NaN();
                } else {
                    r.val_loss = tr.best_val_loss;
                    r.test_loss = train::evaluate(m, ds, data::Split::Test);
                    if (!options.archive_dir.empty()) {
                        const std::string fname = r.arch + "_" + r.bias + "_" + r.coupling + "_s" +
                                                  std::to_string(r.n_scales) + "_nh" +
                                                  std::to_string(r.n_h) + "_t" +
                                                  std::to_string(r.t_seq) + "_seed" +
                                                  std::to_string(r.seed) + ".ntar";
                        model::save_model(options.archive_dir / fname, m);
                        r.archive = fname;
                    }
                }
            } catch (const std::exception& e) {
                r.converged = false;
                r.diverged = true;
                r.val_loss = std::numeric_limits<double>::quiet_NaN();
                r.test_loss = std::numeric_limits<double>::quiet_NaN();
                if (!options.quiet) {
                    std::lock_guard<std::mutex> lk(log_mutex);
                    std::cerr << "run " << r.key() << " failed: " << e.what() << "\n";
                }
            }
            r.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            ++executed;

            {
                std::lock_guard<std::mutex> lk(log_mutex);
                results[i] = r;
                if (log_out.is_open()) {
                    log_out << to_json_line(r) << "\n";
                    log_out.flush();
                }
                std::ostream* progress = options.progress;
                if (!progress && !options.quiet) progress = &std::cout;
                if (progress)
                    *progress << "[" << executed.load() << "/" << todo.size() << "] " << r.key()
                              << " val=" << r.val_loss << " test=" << r.test_loss << " epochs="
                              << r.epochs_run << (r.converged ? "" : " (no convergence)") << "\n"
                              << std::flush;
            }
        }
    };

    const int n_workers = std::max(1, std::min<int>(options.parallelism,
                                                    static_cast<int>(todo.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    if (jobs_executed) *jobs_executed = executed.load();
    std::vector<RunRecord> out;
    out.reserve(jobs.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!results[i]) throw std::logic_error("run_grid: missing result");
        out.push_back(std::move(*results[i]));
    }
    return out;
}

}  // namespace

std::vector<RunRecord> run_grid(const GridSpec& grid, DatasetCache& datasets,
                                const train::TrainConfig& cfg, const RunGridOptions& options,
                                int* jobs_executed) {
    return run_grid_impl(
        grid, [&](int t_seq) -> const data::WindowedDataset& { return datasets.get(t_seq); }, cfg,
        options, jobs_executed);
}

std::vector<RunRecord> run_grid(const GridSpec& grid, const data::WindowedDataset& ds,
                                const train::TrainConfig& cfg, const RunGridOptions& options,
                                int* jobs_executed) {
    for (int ts : grid.t_seq)
        if (ts != ds.t_seq)
            throw std::invalid_argument("run_grid: grid t_seq " + std::to_string(ts) +
                                        " does not match the dataset; use the DatasetCache overload");
    return run_grid_impl(grid, [&](int) -> const data::WindowedDataset& { return ds; }, cfg,
                         options, jobs_executed);
}

namespace {

// q(p) by linear interpolation between order statistics at 1 + (N-1) p.
double quantile_sorted(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    const double pos = 1.0 + (static_cast<double>(n) - 1.0) * p;  // 1-based
    const double lo = std::floor(pos);
    std::size_t i = static_cast<std::size_t>(lo) - 1;
    if (i >= n - 1) return sorted[n - 1];
    const double frac = pos - lo;
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

SelectionResult quantile_gap_select(const std::vector<double>& val_losses) {
    if (val_losses.size() < 10)
        throw std::invalid_argument("quantile_gap_select: need at least 10 losses");
    std::vector<double> sorted = val_losses;
    std::sort(sorted.begin(), sorted.end());

    SelectionResult res;
    for (int j = 1; j <= 9; ++j) res.quantiles.push_back(quantile_sorted(sorted, 0.1 * j));

    // ties resolved toward larger p; gaps that agree to within a relative
    // 1e-9 count as tied so exact-arithmetic ties survive interpolation
    // roundoff
    int best_j = 0;
    double best_gap = -1.0;
    for (int j = 0; j + 1 < static_cast<int>(res.quantiles.size()); ++j) {
        const double gap = res.quantiles[j + 1] - res.quantiles[j];
        const double tol = 1e-9 * std::max(std::abs(gap), std::abs(best_gap));
        if (gap >= best_gap - tol) {
            best_gap = std::max(gap, best_gap);
            best_j = j;
        }
    }
    res.max_gap_index = best_j;
    res.threshold = res.quantiles[best_j];  // lower edge of the largest gap
    for (std::size_t i = 0; i < val_losses.size(); ++i)
        if (val_losses[i] <= res.threshold) res.selected.push_back(static_cast<int>(i));
    return res;
}

SelectionResult below_mean_select(const std::vector<double>& val_losses) {
    if (val_losses.empty()) throw std::invalid_argument("below_mean_select: no losses");
    SelectionResult res;
    double mean = 0.0;
    for (double v : val_losses) mean += v;
    mean /= static_cast<double>(val_losses.size());
    res.threshold = mean;
    res.max_gap_index = -1;
    for (std::size_t i = 0; i < val_losses.size(); ++i)
        if (val_losses[i] <= mean) res.selected.push_back(static_cast<int>(i));
    return res;
}

std::vector<RunRecord> best_by_validation(const std::vector<RunRecord>& records) {
    std::map<std::string, const RunRecord*> best;
    for (const RunRecord& r : records) {
        if (std::isnan(r.val_loss)) continue;
        const std::string group = r.arch + "|" + r.bias + "|" + std::to_string(r.n_h) + "|" +
                                  std::to_string(r.t_seq);
        auto it = best.find(group);
        if (it == best.end() || r.val_loss < it->second->val_loss ||
            (r.val_loss == it->second->val_loss && r.seed < it->second->seed))
            best[group] = &r;
    }
    std::vector<RunRecord> out;
    out.reserve(best.size());
    for (auto& [group, r] : best) out.push_back(*r);
    return out;
}

SummaryTables summarize(const std::vector<RunRecord>& records, const std::vector<int>& selected) {
    SummaryTables tables;

    std::set<std::pair<std::string, std::string>> cells;
    for (const RunRecord& r : records) cells.insert({r.arch, r.bias});

    std::map<std::pair<std::string, std::string>, std::vector<double>> by_cell;
    std::map<std::tuple<std::string, std::string, int>, std::vector<double>> nh_acc, tseq_acc;
    for (int i : selected) {
        const RunRecord& r = records.at(i);
        if (std::isnan(r.test_loss)) continue;
        by_cell[{r.arch, r.bias}].push_back(r.test_loss);
        nh_acc[{r.arch, r.bias, r.n_h}].push_back(r.test_loss);
        tseq_acc[{r.arch, r.bias, r.t_seq}].push_back(r.test_loss);
    }
    // losses are summed in sorted order so the tables do not depend on
    // the order records arrive in
    auto sorted_mean = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc / static_cast<double>(v.size());
    };

    for (const auto& cell : cells) {
        SummaryCell s;
        s.arch = cell.first;
        s.bias = cell.second;
        auto it = by_cell.find(cell);
        if (it == by_cell.end() || it->second.empty()) {
            s.missing = true;  // empty selection cell: marked missing, not zero
        } else {
            std::vector<double>& v = it->second;
            s.count = static_cast<int>(v.size());
            s.mean = sorted_mean(v);
            for (double x : v) s.stdev += (x - s.mean) * (x - s.mean);
            s.stdev = std::sqrt(s.stdev / s.count);  // population; 0 for a single run
        }
        tables.by_arch_bias.push_back(std::move(s));
    }

    for (auto& [key, v] : nh_acc)
        tables.loss_vs_nh.emplace_back(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                       sorted_mean(v), static_cast<int>(v.size()));
    for (auto& [key, v] : tseq_acc)
        tables.loss_vs_tseq.emplace_back(std::get<0>(key), std::get<1>(key), std::get<2>(key),
                                         sorted_mean(v), static_cast<int>(v.size()));
    return tables;
}

std::vector<EcdfCurve> convergence_ecdf(const std::vector<RunRecord>& records, int max_epochs) {
    std::map<std::pair<std::string, std::string>, std::vector<int>> epochs;
    for (const RunRecord& r : records)
        epochs[{r.arch, r.bias}].push_back(r.converged ? r.epochs_run : max_epochs);

    std::vector<EcdfCurve> curves;
    for (auto& [cell, xs] : epochs) {
        std::sort(xs.begin(), xs.end());
        EcdfCurve c;
        c.arch = cell.first;
        c.bias = cell.second;
        const double n = static_cast<double>(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (i + 1 < xs.size() && xs[i + 1] == xs[i]) continue;  // keep the last of equal values
            c.points.push_back({xs[i], static_cast<double>(i + 1) / n});
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

}  // namespace vlstm::sweep
