#pragma once

#include "vpecg/evaluation.h"
#include "vpecg/pipeline.h"
#include "vpecg/types.h"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vpecg {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// `<dir>/<name>.rpeaks.csv` for `<dir>/<name>.csv`.
std::filesystem::path rpeaks_path(const std::filesystem::path& record_csv);

// Multi-lead signal table: header `time_s,lead1..leadL`, time_s = i / fs.
struct SignalTable {
    std::vector<Vector> leads;
    double fs = 0.0;
    double start_time = 0.0;  // s, time stamp of the first row
};

SignalTable read_signal_csv(const std::filesystem::path& path);
void write_signal_csv(const std::filesystem::path& path, const std::vector<Vector>& leads, double fs,
                      std::int64_t first_sample = 0);

/// Signal table plus the R-peak sidecar. Throws ParseError, NonUniformSampling.
EcgRecord read_record_csv(const std::filesystem::path& path);
void write_record_csv(const std::filesystem::path& path, const EcgRecord& record);

// Flat `dotted.key=value` text. Blank lines and lines starting with '#' are ignored.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    /// Throws ConfigError naming the first key not in `known`.
    void require_known(const std::set<std::string>& known) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
    std::map<std::string, long> lines_;
    std::string source_;
};

/// Keys: pre_r_s, {qrs,t,p}.{lambda,tau}_{min,max}.
ManualAnnotation read_manual_annotation(const std::filesystem::path& path);

void write_fits_csv(const std::filesystem::path& path, const std::vector<LeadResult>& results);

struct FiducialRow {
    std::string record;
    std::int64_t beat = 0;
    std::string lead;  // lead number, or "all" for reference annotations
    std::int64_t r_sample = 0;
    WaveKind wave = WaveKind::qrs;
    WaveFiducials fiducials;
};

std::vector<FiducialRow> fiducial_rows(const std::string& record, const std::string& lead,
                                       std::int64_t beat, std::int64_t r_sample, const Delineation& d);
void write_fiducials_csv(const std::filesystem::path& path, const std::vector<FiducialRow>& rows);
std::vector<FiducialRow> read_fiducials_csv(const std::filesystem::path& path);

/// Groups rows by lead into annotated beats ordered by R sample.
std::map<std::string, std::vector<AnnotatedBeat>> group_fiducials(const std::vector<FiducialRow>& rows);

struct MetricsRow {
    std::string method;
    std::string record;
    std::string lead;
    double snr_improvement = 0.0;
    double rho = 0.0;
    double l_op = 0.0;
    double kp_dev = 0.0;
};

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);

struct Quartiles {
    std::optional<double> median;
    std::optional<double> p25;
    std::optional<double> p75;
};

/// Percentiles by linear interpolation between order statistics.
Quartiles quartiles(std::vector<double> values);

void write_summary_json(const std::filesystem::path& path, const std::vector<MetricsRow>& rows,
                        const std::optional<DelineationScore>& delineation);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace vpecg
