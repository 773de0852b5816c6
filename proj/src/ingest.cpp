#include "proxsense/ingest.hpp"

#include "proxsense/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace proxsense::ingest {

namespace {

std::string join_issues(const std::vector<ParseIssue>& issues) {
    std::ostringstream out;
    out << issues.size() << " parse error(s)";
    for (const auto& i : issues) {
        out << "\n  ";
        if (i.line > 0) out << "line " << i.line << ": ";
        out << i.message;
    }
    return out.str();
}

bool parse_double(std::string_view tok, double& out) {
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    const auto* end = tok.data() + tok.size();
    const auto [ptr, ec] = std::from_chars(tok.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool is_skippable(std::string_view line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

constexpr std::array<const char*, 9> kManifestColumns = {
    "interval_id", "experiment_id", "site",       "tx_model", "rx_model",
    "tx_power",    "carriage",      "distance_m", "window_s"};

}  // namespace

ParseError::ParseError(std::vector<ParseIssue> i)
    : std::runtime_error(join_issues(i)), issues(std::move(i)) {}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::optional<LogLine> parse_log_line(std::string_view line, std::string& error) {
    const auto tokens = split_ws(line);
    if (tokens.size() < 4) {
        error = "expected 'interval_id t sensor values...', got " + std::to_string(tokens.size()) + " field(s)";
        return std::nullopt;
    }
    LogLine out;
    out.interval_id = std::string(tokens[0]);
    if (!parse_double(tokens[1], out.t) || !std::isfinite(out.t) || out.t < 0.0) {
        error = "bad time '" + std::string(tokens[1]) + "'";
        return std::nullopt;
    }
    out.sensor = std::string(tokens[2]);
    for (std::size_t i = 3; i < tokens.size(); ++i) {
        double v;
        if (!parse_double(tokens[i], v) || !std::isfinite(v)) {
            error = "bad value '" + std::string(tokens[i]) + "'";
            return std::nullopt;
        }
        out.values.push_back(v);
    }
    return out;
}

Manifest parse_manifest(std::istream& in) {
    Manifest m;
    std::vector<ParseIssue> issues;
    std::string line;
    std::size_t lineno = 0;
    std::vector<int> column_of(kManifestColumns.size(), -1);
    bool have_header = false;
    std::set<std::string> seen;

    while (std::getline(in, line)) {
        ++lineno;
        if (is_skippable(line)) continue;
        const auto cells = split_csv(line);
        if (!have_header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                for (std::size_t k = 0; k < kManifestColumns.size(); ++k) {
                    if (cells[c] == kManifestColumns[k]) column_of[k] = static_cast<int>(c);
                }
            }
            for (std::size_t k = 0; k < kManifestColumns.size(); ++k) {
                if (column_of[k] < 0)
                    issues.push_back({lineno, std::string("manifest header missing column '") + kManifestColumns[k] + "'"});
            }
            if (!issues.empty()) throw ParseError(std::move(issues));
            have_header = true;
            continue;
        }
        auto cell = [&](std::size_t k) -> const std::string& {
            static const std::string empty;
            const auto c = static_cast<std::size_t>(column_of[k]);
            return c < cells.size() ? cells[c] : empty;
        };
        ManifestRecord r;
        r.interval_id = cell(0);
        r.meta = {cell(1), cell(2), cell(3), cell(4), cell(5), cell(6)};
        if (r.interval_id.empty()) {
            issues.push_back({lineno, "empty interval_id"});
            continue;
        }
        if (!parse_double(cell(7), r.distance_m) || !class_from_exact_meters(r.distance_m)) {
            issues.push_back({lineno, "distance_m '" + cell(7) + "' is not one of 1.2, 1.8, 3.0, 4.5"});
            continue;
        }
        if (!parse_double(cell(8), r.window_s) || !(r.window_s > 0.0) || !std::isfinite(r.window_s)) {
            issues.push_back({lineno, "bad window_s '" + cell(8) + "'"});
            continue;
        }
        if (!seen.insert(r.interval_id).second) {
            issues.push_back({lineno, "duplicate interval_id '" + r.interval_id + "'"});
            continue;
        }
        m.records.push_back(std::move(r));
    }
    if (!have_header) issues.push_back({0, "manifest has no header row"});
    if (!issues.empty()) throw ParseError(std::move(issues));
    return m;
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path);
    return parse_manifest(in);
}

std::string format_manifest(const std::vector<Interval>& intervals) {
    std::ostringstream out;
    for (std::size_t k = 0; k < kManifestColumns.size(); ++k) out << (k ? "," : "") << kManifestColumns[k];
    out << '\n';
    for (const auto& iv : intervals) {
        out << iv.interval_id << ',' << iv.meta.experiment_id << ',' << iv.meta.site << ','
            << iv.meta.tx_model << ',' << iv.meta.rx_model << ',' << iv.meta.tx_power << ','
            << iv.meta.carriage << ',' << to_string(iv.label) << ',' << format_number(iv.window) << '\n';
    }
    return out.str();
}

ParseResult parse_logs(std::istream& log, const Manifest& manifest, bool strict) {
    ParseResult res;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<Interval> intervals;
    intervals.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        slot.emplace(r.interval_id, intervals.size());
        Interval iv;
        iv.interval_id = r.interval_id;
        iv.meta = r.meta;
        iv.label = *class_from_exact_meters(r.distance_m);
        iv.window = r.window_s;
        intervals.push_back(std::move(iv));
    }

    auto fail = [&](std::size_t lineno, std::string msg) {
        ++res.records_errored;
        res.errors.push_back({lineno, std::move(msg)});
        if (strict) throw ParseError(res.errors);
    };

    std::set<std::string> orphans;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(log, line)) {
        ++lineno;
        if (is_skippable(line)) continue;
        ++res.records_seen;
        std::string err;
        auto rec = parse_log_line(line, err);
        if (!rec) {
            fail(lineno, err);
            continue;
        }
        const auto kind = sensor_from_name(rec->sensor);
        if (!kind) {
            fail(lineno, "unknown sensor '" + rec->sensor + "'");
            continue;
        }
        if (rec->values.size() != sensor_dim(*kind)) {
            fail(lineno, rec->sensor + " expects " + std::to_string(sensor_dim(*kind)) + " value(s), got " +
                             std::to_string(rec->values.size()));
            continue;
        }
        const auto it = slot.find(rec->interval_id);
        if (it == slot.end()) {
            orphans.insert(rec->interval_id);
            ++res.records_errored;
            if (strict) {
                res.errors.push_back({lineno, "interval '" + rec->interval_id + "' not in manifest"});
                throw ParseError(res.errors);
            }
            continue;
        }
        auto& iv = intervals[it->second];
        if (rec->t > iv.window) {
            ++res.readings_dropped;
            continue;
        }
        iv.readings.push_back({rec->t, *kind, std::move(rec->values)});
        ++res.readings_parsed;
    }

    if (!orphans.empty()) {
        std::string msg = "interval ids not in manifest:";
        for (const auto& id : orphans) msg += " " + id;
        res.errors.push_back({0, msg});
        res.orphan_ids.assign(orphans.begin(), orphans.end());
    }

    for (auto& iv : intervals) {
        if (iv.readings.empty()) {
            res.empty_intervals.push_back(iv.interval_id);
            continue;
        }
        std::stable_sort(iv.readings.begin(), iv.readings.end(),
                         [](const SensorReading& a, const SensorReading& b) { return a.t < b.t; });
        res.intervals.push_back(std::move(iv));
    }
    return res;
}

ParseResult parse_log_file(const std::string& log_path, const std::string& manifest_path, bool strict) {
    const auto manifest = read_manifest(manifest_path);
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open log " + log_path);
    return parse_logs(in, manifest, strict);
}

std::string format_logs(const std::vector<Interval>& intervals) {
    std::string out;
    for (const auto& iv : intervals) {
        for (const auto& r : iv.readings) {
            out += iv.interval_id;
            out += ' ';
            out += format_number(r.t);
            out += ' ';
            out += sensor_name(r.kind);
            for (double v : r.values) {
                out += ' ';
                out += format_number(v);
            }
            out += '\n';
        }
    }
    return out;
}

MetaVocab fit_vocab(const std::vector<const Interval*>& intervals) {
    std::set<std::string> tx, rx, pw, car;
    for (const auto* iv : intervals) {
        tx.insert(iv->meta.tx_model);
        rx.insert(iv->meta.rx_model);
        pw.insert(iv->meta.tx_power);
        car.insert(iv->meta.carriage);
    }
    return {{tx.begin(), tx.end()}, {rx.begin(), rx.end()}, {pw.begin(), pw.end()}, {car.begin(), car.end()}};
}

namespace {

Split fraction_split(const std::vector<const Interval*>& pool, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("train fraction must lie in [0, 1]");
    std::vector<std::string> experiments;
    {
        std::set<std::string> ids;
        for (const auto* iv : pool) ids.insert(iv->meta.experiment_id);
        experiments.assign(ids.begin(), ids.end());
    }
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(experiments);
    const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(experiments.size())));
    const std::set<std::string> train_ids(experiments.begin(), experiments.begin() + static_cast<std::ptrdiff_t>(n_train));
    Split s;
    for (const auto* iv : pool) {
        (train_ids.count(iv->meta.experiment_id) ? s.train : s.eval).push_back(*iv);
    }
    return s;
}

}  // namespace

Split partition(const std::vector<Interval>& intervals, const SplitRule& rule, std::uint64_t seed) {
    Split s;
    if (const auto* site = std::get_if<SiteRule>(&rule)) {
        if (site->train_site == site->eval_site) {
            std::vector<const Interval*> pool;
            for (const auto& iv : intervals)
                if (iv.meta.site == site->train_site) pool.push_back(&iv);
            s = fraction_split(pool, site->within_fraction, seed);
        } else {
            for (const auto& iv : intervals) {
                if (iv.meta.site == site->train_site) s.train.push_back(iv);
                else if (iv.meta.site == site->eval_site) s.eval.push_back(iv);
            }
        }
    } else {
        std::vector<const Interval*> pool;
        for (const auto& iv : intervals) pool.push_back(&iv);
        s = fraction_split(pool, std::get<FractionRule>(rule).train_fraction, seed);
    }
    std::vector<const Interval*> all;
    for (const auto& iv : s.train) all.push_back(&iv);
    for (const auto& iv : s.eval) all.push_back(&iv);
    s.vocab = fit_vocab(all);
    return s;
}

Split assemble(const std::vector<Interval>& intervals, const SplitRule& rule, std::uint64_t seed) {
    if (intervals.empty()) throw ConfigError("assemble: no intervals");
    auto s = partition(intervals, rule, seed);
    if (s.train.empty()) throw ConfigError("split rule left the train split empty");
    if (s.eval.empty()) throw ConfigError("split rule left the eval split empty");
    return s;
}

}  // namespace proxsense::ingest
