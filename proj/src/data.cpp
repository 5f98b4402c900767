#include "vlstm/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace vlstm::data {

bool is_valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (s[i] < '0' || s[i] > '9') return false;
    int m = (s[5] - '0') * 10 + (s[6] - '0');
    int d = (s[8] - '0') * 10 + (s[9] - '0');
    return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

// Howard Hinnant's civil-days algorithm.
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

long parse_date_serial(const std::string& iso) {
    if (!is_valid_iso_date(iso)) throw std::invalid_argument("bad ISO date '" + iso + "'");
    int y = std::stoi(iso.substr(0, 4));
    int m = std::stoi(iso.substr(5, 2));
    int d = std::stoi(iso.substr(8, 2));
    return days_from_civil(y, m, d);
}

std::string date_from_serial(long serial) {
    long z = serial + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y + (m <= 2), m, d);
    return buf;
}

int weekday_of_serial(long serial) {
    return static_cast<int>(serial >= -4 ? (serial + 4) % 7 : (serial + 5) % 7 + 6);
}

std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "validation";
        case Split::Test: return "test";
    }
    return "?";
}

void SplitDates::validate() const {
    for (const std::string* d : {&train_end, &val_end, &test_end})
        if (!is_valid_iso_date(*d)) throw std::invalid_argument("bad split date '" + *d + "'");
    if (!(train_end < val_end && val_end < test_end))
        throw std::invalid_argument("split dates must be strictly ordered: train_end < val_end < test_end");
}

std::vector<VolSeries> load_csv(const std::filesystem::path& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    LoadReport rep;
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    ++line_no;
    // tolerate a UTF-8 BOM and trailing CR
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,symbol,rv")
        throw std::runtime_error(path.string() + ":1: expected header 'date,symbol,rv', got '" +
                                 line + "'");

    struct Row {
        std::string date;
        double rv;
    };
    std::map<std::string, std::vector<Row>> by_symbol;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++rep.rows_total;

        std::string date, symbol, rv_str;
        std::istringstream ss(line);
        if (!std::getline(ss, date, ',') || !std::getline(ss, symbol, ',') ||
            !std::getline(ss, rv_str))
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": expected 3 comma-separated fields");
        if (!is_valid_iso_date(date))
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": bad date '" + date + "'");
        if (symbol.empty())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": empty symbol");
        double rv = 0.0;
        bool ok = true;
        try {
            std::size_t pos = 0;
            rv = std::stod(rv_str, &pos);
            ok = pos == rv_str.size();
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || !std::isfinite(rv) || rv <= 0.0) {
            ++rep.rows_dropped;  // cleaning rule: drop nonpositive/missing rv
            continue;
        }
        by_symbol[symbol].push_back({std::move(date), rv});
    }
    if (by_symbol.empty())
        throw std::runtime_error(path.string() + ": no usable rows after cleaning");

    std::vector<VolSeries> out;
    out.reserve(by_symbol.size());
    for (auto& [symbol, rows] : by_symbol) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.date < b.date; });
        VolSeries s;
        s.symbol = symbol;
        for (Row& r : rows) {
            if (!s.dates.empty() && r.date == s.dates.back())
                throw std::runtime_error(path.string() + ": duplicate date " + r.date +
                                         " for symbol " + symbol);
            s.dates.push_back(std::move(r.date));
            s.rv.push_back(r.rv);
        }
        out.push_back(std::move(s));
    }
    if (report) *report = rep;
    return out;
}

std::vector<double> to_log_vol(const VolSeries& series) {
    std::vector<double> out(series.rv.size());
    for (std::size_t i = 0; i < series.rv.size(); ++i) {
        if (!(series.rv[i] > 0.0))
            throw std::invalid_argument("to_log_vol: nonpositive rv for " + series.symbol + " at " +
                                        series.dates[i]);
        out[i] = 0.5 * std::log(series.rv[i]);
    }
    return out;
}

std::optional<Split> split_of_date(const SplitDates& splits, const std::string& date) {
    splits.validate();
    if (!is_valid_iso_date(date)) throw std::invalid_argument("bad date '" + date + "'");
    if (date <= splits.train_end) return Split::Train;
    if (date <= splits.val_end) return Split::Validation;
    if (date <= splits.test_end) return Split::Test;
    return std::nullopt;
}

WindowedDataset make_windows(const std::vector<VolSeries>& series, int t_seq,
                             const SplitDates& splits) {
    if (t_seq < 1) throw std::invalid_argument("make_windows: t_seq must be >= 1");
    splits.validate();

    WindowedDataset ds;
    ds.t_seq = t_seq;

    std::vector<const VolSeries*> ordered;
    for (const VolSeries& s : series) ordered.push_back(&s);
    std::sort(ordered.begin(), ordered.end(),
              [](const VolSeries* a, const VolSeries* b) { return a->symbol < b->symbol; });

    for (const VolSeries* sp : ordered) {
        const VolSeries& s = *sp;
        for (std::size_t i = 1; i < s.dates.size(); ++i)
            if (!(s.dates[i - 1] < s.dates[i]))
                throw std::invalid_argument("series " + s.symbol + " dates not strictly increasing");
        const std::vector<double> logvol = to_log_vol(s);
        const int n = static_cast<int>(logvol.size());
        if (n < t_seq + 1) {
            ++ds.short_symbols;
            continue;
        }
        // target at index t; window covers [t - t_seq, t)
        for (int t = t_seq; t < n; ++t) {
            std::optional<Split> split = split_of_date(splits, s.dates[t]);
            if (!split) continue;
            Sample sample;
            sample.symbol = s.symbol;
            sample.end_date = s.dates[t];
            sample.window.assign(logvol.begin() + (t - t_seq), logvol.begin() + t);
            sample.target = logvol[t];
            ds.split_indices[static_cast<int>(*split)].push_back(
                static_cast<int>(ds.samples.size()));
            ds.samples.push_back(std::move(sample));
        }
    }
    return ds;
}

std::pair<double, double> standardize(WindowedDataset& ds) {
    const std::vector<int>& train = ds.split(Split::Train);
    if (train.empty()) throw std::runtime_error("standardize: empty train split");
    if (ds.standardized) throw std::runtime_error("standardize: dataset already standardized");

    double mean = 0.0;
    for (int i : train) mean += ds.samples[i].target;
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (int i : train) {
        double d = ds.samples[i].target - mean;
        var += d * d;
    }
    var /= static_cast<double>(train.size());  // population
    double stdev = std::sqrt(var);
    if (!(stdev > 0.0)) throw std::runtime_error("standardize: zero variance in train targets");

    for (Sample& s : ds.samples) {
        for (double& v : s.window) v = (v - mean) / stdev;
        s.target = (s.target - mean) / stdev;
    }
    ds.standardized = true;
    ds.mean = mean;
    ds.stdev = stdev;
    return {mean, stdev};
}

double destandardize(const WindowedDataset& ds, double standardized_value) {
    return standardized_value * ds.stdev + ds.mean;
}

void export_samples_csv(const std::filesystem::path& path, const WindowedDataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "split,symbol,end_date,target";
    for (int t = 0; t < ds.t_seq; ++t) out << ",w" << t;
    out << "\n";
    out.precision(17);
    for (Split s : kSplits)
        for (int i : ds.split(s)) {
            const Sample& sample = ds.samples[i];
            out << to_string(s) << ',' << sample.symbol << ',' << sample.end_date << ','
                << sample.target;
            for (double v : sample.window) out << ',' << v;
            out << "\n";
        }
}

}  // namespace vlstm::data
