#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "core/cavity.hpp"
#include "core/encoder.hpp"

namespace scldgm {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key=value configuration; config files and CLI flag overrides share
// this parser. Lines starting with '#' are comments.
class Config {
public:
    static Config from_file(const std::string& path);
    static Config from_text(const std::string& text);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    int get_int(const std::string& key, int def) const;
    uint64_t get_u64(const std::string& key, uint64_t def) const;
    GridSpec get_grid(const std::string& key, const GridSpec& def) const;
    std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const;

    // sorted key=value lines; echoed into every CSV so artifacts self-describe
    std::string echo() const;
    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

struct ReportTable {
    std::vector<std::string> meta;  // emitted as '#'-prefixed lines
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> cells) { rows.push_back(std::move(cells)); }
    std::string to_csv() const;
    void write_csv(const std::string& path) const;
    std::string to_summary() const;  // aligned text table
};

std::string format_num(double v);

// Experiment drivers. Each returns the report table; CSV/summary rendering is
// uniform across kinds.
ReportTable run_encode(const Config& cfg);
ReportTable beta_sweep(const Config& cfg);
ReportTable conv_prob(const Config& cfg);
ReportTable rd_sweep(const Config& cfg);
ReportTable sampling_check(const Config& cfg);
ReportTable thresholds_run(const Config& cfg);
ReportTable complexity_scan(const Config& cfg);
ReportTable thresholds_table(const Config& cfg);
ReportTable ensemble_stats(const Config& cfg);

// Dispatch by kind; writes the CSV when out_csv is nonempty. Returns 0 on
// success, 2 on invalid configuration, 3 on bracket/convergence failure,
// 4 on I/O failure.
int run_experiment(const std::string& kind, const Config& cfg, const std::string& out_csv,
                   std::string* summary_out, std::string* error_out);

} // namespace scldgm
