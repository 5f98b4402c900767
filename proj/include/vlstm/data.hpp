#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vlstm::data {

// -- calendar helpers ---------------------------------------------------------
// ISO-8601 dates compare correctly as strings; the serial form is only
// needed when generating calendars.
bool is_valid_iso_date(const std::string& s);
// days since 1970-01-01 (civil calendar)
long days_from_civil(int y, int m, int d);
long parse_date_serial(const std::string& iso);
std::string date_from_serial(long serial);
int weekday_of_serial(long serial);  // 0 = Sunday ... 6 = Saturday

// -- domain types -------------------------------------------------------------

// One symbol's realized-variance history, strictly increasing in date.
struct VolSeries {
    std::string symbol;
    std::vector<std::string> dates;
    std::vector<double> rv;
};

struct LoadReport {
    int rows_total = 0;
    int rows_dropped = 0;  // rv <= 0, missing, or unparseable numeric field
};

enum class Split { Train, Validation, Test };
constexpr std::array<Split, 3> kSplits = {Split::Train, Split::Validation, Split::Test};
std::string to_string(Split s);

struct SplitDates {
    std::string train_end = "2012-09-06";
    std::string val_end = "2016-11-23";
    std::string test_end = "2021-02-17";

    void validate() const;
};

struct Sample {
    std::string symbol;
    std::string end_date;  // date of the target observation
    std::vector<double> window;
    double target = 0.0;
};

// Sliding windows of standardized log volatility with next-step targets.
// A sample belongs to the split containing its target date; window
// observations may reach back across split boundaries. Iteration order
// is (symbol asc, end_date asc).
struct WindowedDataset {
    int t_seq = 0;
    std::vector<Sample> samples;
    std::array<std::vector<int>, 3> split_indices;  // into samples
    int short_symbols = 0;   // series too short to yield any window
    bool standardized = false;
    double mean = 0.0;   // train-target statistics
    double stdev = 1.0;

    const std::vector<int>& split(Split s) const {
        return split_indices[static_cast<int>(s)];
    }
};

// -- operations ----------------------------------------------------------------

// CSV with header date,symbol,rv. Rows with rv <= 0 or missing fields are
// dropped (and counted); output series are sorted by date.
std::vector<VolSeries> load_csv(const std::filesystem::path& path, LoadReport* report = nullptr);

// log sigma_t = 0.5 * ln(rv_t)
std::vector<double> to_log_vol(const VolSeries& series);

// Split membership of one date; nullopt for dates past test_end.
std::optional<Split> split_of_date(const SplitDates& splits, const std::string& date);

WindowedDataset make_windows(const std::vector<VolSeries>& series, int t_seq,
                             const SplitDates& splits);

// Subtract the train-target mean and divide by the train-target
// population standard deviation, applied to windows and targets of every
// split. Returns (mean, stdev).
std::pair<double, double> standardize(WindowedDataset& ds);
double destandardize(const WindowedDataset& ds, double standardized_value);

// Audit dump: symbol,end_date,target,window... one sample per line.
void export_samples_csv(const std::filesystem::path& path, const WindowedDataset& ds);

}  // namespace vlstm::data
