#include "vpecg/io.h"

#include "vpecg/errors.h"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vpecg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::optional<std::int64_t> to_int(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

WaveKind parse_wave(const std::string& s, const std::string& file, long line) {
    if (s == "P") return WaveKind::p;
    if (s == "QRS") return WaveKind::qrs;
    if (s == "T") return WaveKind::t;
    throw ParseError(file, line, "unknown wave '" + s + "'");
}

std::string config_prefix(WaveKind w) {
    switch (w) {
        case WaveKind::p: return "p";
        case WaveKind::qrs: return "qrs";
        case WaveKind::t: return "t";
    }
    return "?";
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

fs::path rpeaks_path(const fs::path& record_csv) {
    fs::path p = record_csv;
    p.replace_extension();
    return fs::path(p.string() + ".rpeaks.csv");
}

SignalTable read_signal_csv(const fs::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    std::string line;
    if (!std::getline(in, line)) throw ParseError(file, 1, "missing header");
    const auto header = split(line);
    if (header.size() < 2 || trim(header[0]) != "time_s") {
        throw ParseError(file, 1, "header must be time_s,lead1..leadL");
    }
    const std::size_t leads = header.size() - 1;
    std::vector<double> time;
    std::vector<std::vector<double>> cols(leads);
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split(line);
        if (fields.size() != header.size()) throw ParseError(file, lineno, "wrong number of fields");
        const auto t = to_double(fields[0]);
        if (!t) throw ParseError(file, lineno, "bad time value");
        time.push_back(*t);
        for (std::size_t j = 0; j < leads; ++j) {
            const auto v = to_double(fields[j + 1]);
            if (!v) throw ParseError(file, lineno, "bad sample value");
            cols[j].push_back(*v);
        }
    }
    if (time.size() < 2) throw ParseError(file, lineno, "need at least two samples");

    const double dt = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
    if (!(dt > 0.0)) throw NonUniformSampling(file + ": time column is not increasing");
    double rate = 1.0 / dt;
    if (std::abs(rate - std::round(rate)) < 1e-6 * rate) rate = std::round(rate);
    for (std::size_t i = 0; i < time.size(); ++i) {
        const double expected = time.front() + static_cast<double>(i) / rate;
        if (std::abs(time[i] - expected) > 1e-6) {
            throw NonUniformSampling(file + ": sample " + std::to_string(i) + " deviates from a uniform grid");
        }
    }

    SignalTable out;
    out.fs = rate;
    out.start_time = time.front();
    for (auto& c : cols) out.leads.push_back(Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size())));
    return out;
}

void write_signal_csv(const fs::path& path, const std::vector<Vector>& leads, double fs,
                      std::int64_t first_sample) {
    auto out = open_out(path);
    out << "time_s";
    for (std::size_t j = 0; j < leads.size(); ++j) out << ",lead" << (j + 1);
    out << '\n';
    const Eigen::Index n = leads.empty() ? 0 : leads.front().size();
    for (Eigen::Index i = 0; i < n; ++i) {
        out << format_double(static_cast<double>(first_sample + i) / fs);
        for (const auto& l : leads) out << ',' << format_double(l[i]);
        out << '\n';
    }
    finish(out, path);
}

EcgRecord read_record_csv(const fs::path& path) {
    SignalTable table = read_signal_csv(path);
    EcgRecord rec;
    rec.fs = table.fs;
    rec.leads = std::move(table.leads);

    const fs::path side = rpeaks_path(path);
    std::ifstream in(side);
    if (!in) throw ParseError(side.string(), 0, "missing R-peak sidecar");
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto v = to_int(line);
        if (!v) throw ParseError(side.string(), lineno, "bad sample index");
        if (*v < 0 || *v >= rec.num_samples()) throw ParseError(side.string(), lineno, "R peak outside the record");
        if (!rec.r_peaks.empty() && *v <= rec.r_peaks.back()) {
            throw ParseError(side.string(), lineno, "R peaks must be strictly increasing");
        }
        rec.r_peaks.push_back(*v);
    }
    return rec;
}

void write_record_csv(const fs::path& path, const EcgRecord& record) {
    write_signal_csv(path, record.leads, record.fs);
    const fs::path side = rpeaks_path(path);
    auto out = open_out(side);
    for (auto r : record.r_peaks) out << r << '\n';
    finish(out, side);
}

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(source, lineno, "expected key=value");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ParseError(source, lineno, "empty key");
        if (cfg.values_.count(key)) throw ParseError(source, lineno, "duplicate key '" + key + "'");
        cfg.values_[key] = trim(t.substr(eq + 1));
        cfg.lines_[key] = lineno;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const fs::path& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto v = to_double(it->second);
    if (!v) throw ParseError(source_, lines_.at(key), "'" + key + "' is not a number");
    return *v;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const auto v = to_int(it->second);
    if (!v) throw ParseError(source_, lines_.at(key), "'" + key + "' is not an integer");
    return *v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ParseError(source_, lines_.at(key), "'" + key + "' is not a boolean");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key,
                                                const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : split(it->second)) {
        const auto v = to_double(part);
        if (!v) throw ParseError(source_, lines_.at(key), "'" + key + "' is not a number list");
        out.push_back(*v);
    }
    return out;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
        if (!known.count(key)) {
            throw ConfigError(source_ + ":" + std::to_string(lines_.at(key)) + ": unknown key '" + key + "'");
        }
    }
}

ManualAnnotation read_manual_annotation(const fs::path& path) {
    const auto cfg = KeyValueConfig::load(path);
    std::set<std::string> known{"pre_r_s"};
    ManualAnnotation m;
    if (cfg.has("pre_r_s")) m.pre_r_s = cfg.get_double("pre_r_s", 0.0);
    for (WaveKind w : {WaveKind::qrs, WaveKind::t, WaveKind::p}) {
        const std::string prefix = config_prefix(w);
        const auto i = static_cast<std::size_t>(w);
        for (const char* name : {"lambda", "tau"}) {
            const std::string lo = prefix + "." + name + "_min";
            const std::string hi = prefix + "." + name + "_max";
            known.insert(lo);
            known.insert(hi);
            if (cfg.has(lo) != cfg.has(hi)) throw ConfigError(path.string() + ": " + lo + " and " + hi + " go together");
            if (!cfg.has(lo)) continue;
            const Interval iv{cfg.get_double(lo, 0.0), cfg.get_double(hi, 0.0)};
            if (!(iv.lo <= iv.hi)) throw ConfigError(path.string() + ": empty interval for " + prefix + "." + name);
            (std::string(name) == "lambda" ? m.lambda[i] : m.tau[i]) = iv;
        }
    }
    cfg.require_known(known);
    return m;
}

void write_fits_csv(const fs::path& path, const std::vector<LeadResult>& results) {
    auto out = open_out(path);
    out << "lead,beat,r_sample,lambda_qrs,tau_qrs,lambda_t,tau_t,lambda_p,tau_p";
    for (Eigen::Index j = 0; j < ColumnMap::full_columns; ++j) out << ",c" << j;
    out << ",residual_sq,converged\n";
    for (const auto& res : results) {
        for (const auto& bf : res.fits) {
            out << (res.lead + 1) << ',' << bf.beat_index << ',' << bf.r_sample;
            if (!bf.ok) {
                for (std::size_t k = 0; k < NonlinearParams::size + ColumnMap::full_columns + 1; ++k) out << ',';
                out << ",0\n";
                continue;
            }
            for (double a : bf.fit.params.to_array()) out << ',' << format_double(a);
            for (Eigen::Index j = 0; j < ColumnMap::full_columns; ++j) {
                out << ',';
                if (j < bf.fit.coeffs.size()) out << format_double(bf.fit.coeffs[j]);
            }
            out << ',' << format_double(bf.fit.residual_sq) << ',' << (bf.fit.converged ? 1 : 0) << '\n';
        }
    }
    finish(out, path);
}

std::vector<FiducialRow> fiducial_rows(const std::string& record, const std::string& lead,
                                       std::int64_t beat, std::int64_t r_sample, const Delineation& d) {
    std::vector<FiducialRow> rows;
    for (WaveKind w : {WaveKind::p, WaveKind::qrs, WaveKind::t}) {
        rows.push_back({record, beat, lead, r_sample, w, d[w]});
    }
    return rows;
}

void write_fiducials_csv(const fs::path& path, const std::vector<FiducialRow>& rows) {
    auto out = open_out(path);
    out << "record,beat,lead,r_sample,wave,onset_s,peak_s,end_s,flags\n";
    for (const auto& r : rows) {
        out << r.record << ',' << r.beat << ',' << r.lead << ',' << r.r_sample << ',' << to_string(r.wave)
            << ',' << opt_field(r.fiducials.onset) << ',' << opt_field(r.fiducials.peak) << ','
            << opt_field(r.fiducials.end) << ',' << r.fiducials.flags << '\n';
    }
    finish(out, path);
}

std::vector<FiducialRow> read_fiducials_csv(const fs::path& path) {
    auto in = open_in(path);
    const std::string file = path.string();
    std::string line;
    if (!std::getline(in, line) || trim(line) != "record,beat,lead,r_sample,wave,onset_s,peak_s,end_s,flags") {
        throw ParseError(file, 1, "unexpected fiducials header");
    }
    std::vector<FiducialRow> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(line);
        if (f.size() != 9) throw ParseError(file, lineno, "wrong number of fields");
        FiducialRow r;
        r.record = f[0];
        const auto beat = to_int(f[1]);
        const auto rs = to_int(f[3]);
        const auto flags = to_int(f[8]);
        if (!beat || !rs || !flags) throw ParseError(file, lineno, "bad integer field");
        r.beat = *beat;
        r.lead = f[2];
        r.r_sample = *rs;
        r.wave = parse_wave(trim(f[4]), file, lineno);
        auto opt = [&](const std::string& s) -> std::optional<double> {
            if (trim(s).empty()) return std::nullopt;
            const auto v = to_double(s);
            if (!v) throw ParseError(file, lineno, "bad time field");
            return v;
        };
        r.fiducials.onset = opt(f[5]);
        r.fiducials.peak = opt(f[6]);
        r.fiducials.end = opt(f[7]);
        r.fiducials.flags = static_cast<std::uint32_t>(*flags);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::map<std::string, std::vector<AnnotatedBeat>> group_fiducials(const std::vector<FiducialRow>& rows) {
    std::map<std::string, std::map<std::int64_t, Delineation>> by_lead;
    for (const auto& r : rows) by_lead[r.lead][r.r_sample][r.wave] = r.fiducials;
    std::map<std::string, std::vector<AnnotatedBeat>> out;
    for (const auto& [lead, beats] : by_lead) {
        auto& v = out[lead];
        for (const auto& [r, d] : beats) v.push_back({r, d});
    }
    return out;
}

void write_metrics_csv(const fs::path& path, const std::vector<MetricsRow>& rows) {
    auto out = open_out(path);
    out << "method,record,lead,snr_improvement,rho,l_op,kp_dev\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.record << ',' << r.lead << ',' << format_double(r.snr_improvement) << ','
            << format_double(r.rho) << ',' << format_double(r.l_op) << ',' << format_double(r.kp_dev) << '\n';
    }
    finish(out, path);
}

Quartiles quartiles(std::vector<double> values) {
    Quartiles q;
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
                 values.end());
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    auto at = [&](double p) {
        const double pos = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, values.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        if (frac == 0.0) return values[lo];
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    q.median = at(0.5);
    q.p25 = at(0.25);
    q.p75 = at(0.75);
    return q;
}

void write_summary_json(const fs::path& path, const std::vector<MetricsRow>& rows,
                        const std::optional<DelineationScore>& delineation) {
    using json = nlohmann::ordered_json;
    auto number = [](const std::optional<double>& v) -> json {
        if (!v || !std::isfinite(*v)) return nullptr;
        return *v;
    };
    auto stats = [&](const std::vector<double>& v) {
        const auto q = quartiles(v);
        return json{{"median", number(q.median)}, {"p25", number(q.p25)}, {"p75", number(q.p75)}};
    };

    json root;
    json denoise = json::object();
    std::vector<std::string> methods;
    for (const auto& r : rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
    for (const auto& m : methods) {
        std::vector<double> snr, rho, lop, kp;
        for (const auto& r : rows) {
            if (r.method != m) continue;
            snr.push_back(r.snr_improvement);
            rho.push_back(r.rho);
            lop.push_back(r.l_op);
            kp.push_back(r.kp_dev);
        }
        denoise[m] = json{{"rows", snr.size()},
                          {"snr_improvement", stats(snr)},
                          {"rho", stats(rho)},
                          {"l_op", stats(lop)},
                          {"kp_dev", stats(kp)}};
    }
    root["denoising"] = denoise;

    if (delineation) {
        json d = json::object();
        for (const auto& s : delineation->kinds) {
            d[std::string(to_string(s.kind))] = json{{"annotated", s.annotated},
                                                     {"detected", s.detected},
                                                     {"se", number(s.se)},
                                                     {"mean_ms", number(s.mean_ms)},
                                                     {"std_ms", number(s.std_ms)},
                                                     {"group", s.detected ? json(std::string(to_string(s.group))) : json(nullptr)}};
        }
        root["delineation"] = d;
    } else {
        root["delineation"] = nullptr;
    }
    write_text_file(path, root.dump(2) + "\n");
}

void write_text_file(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

}  // namespace vpecg
