// ingest.hpp
// Sensor-log and manifest parsing, serialization, and train/eval splitting.
//
// Log format (UTF-8, one record per line, whitespace separated):
//
//     <interval_id> <t seconds> <sensor name> <value> [<value> ...]
//
// Lines starting with '#' and blank lines are ignored. Sensor names are the
// lower-case SensorKind names (bluetooth, accelerometer, ...).
//
// Manifest format: comma-separated table with the header
//
//     interval_id,experiment_id,site,tx_model,rx_model,tx_power,carriage,distance_m,window_s
#pragma once

#include "proxsense/core_types.hpp"

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace proxsense::ingest {

struct LogLine {
    std::string interval_id;
    double t = 0.0;
    std::string sensor;
    std::vector<double> values;
};

struct ManifestRecord {
    std::string interval_id;
    ExperimentMeta meta;
    double distance_m = 0.0;
    double window_s = 4.0;
};

struct Manifest {
    std::vector<ManifestRecord> records;  // file order
};

struct ParseIssue {
    std::size_t line = 0;  // 1-based; 0 when not tied to a line
    std::string message;
};

// Thrown in strict mode, or for issues that prevent any result.
struct ParseError : std::runtime_error {
    explicit ParseError(std::vector<ParseIssue> issues);
    std::vector<ParseIssue> issues;
};

struct ParseResult {
    std::vector<Interval> intervals;  // manifest order, empty intervals excluded
    std::vector<ParseIssue> errors;
    std::vector<std::string> orphan_ids;      // interval ids seen in logs but absent from manifest
    std::vector<std::string> empty_intervals; // manifest ids with no kept readings
    std::size_t records_seen = 0;     // non-comment lines
    std::size_t readings_parsed = 0;  // kept readings
    std::size_t readings_dropped = 0; // t > window
    std::size_t records_errored = 0;

    bool ok() const { return errors.empty(); }
};

std::optional<LogLine> parse_log_line(std::string_view line, std::string& error);

Manifest parse_manifest(std::istream& in);
Manifest read_manifest(const std::string& path);
std::string format_manifest(const std::vector<Interval>& intervals);

// Collects every error; strict mode throws ParseError on the first one.
ParseResult parse_logs(std::istream& log, const Manifest& manifest, bool strict = false);
ParseResult parse_log_file(const std::string& log_path, const std::string& manifest_path, bool strict = false);

// Emits records in interval order then reading order, using shortest
// round-trip number formatting.
std::string format_logs(const std::vector<Interval>& intervals);

// Shortest text that parses back to the same double.
std::string format_number(double v);

// --- Splitting ---

struct SiteRule {
    std::string train_site;
    std::string eval_site;
    // Used when both sites are the same: experiments of that site are split
    // by fraction.
    double within_fraction = 0.8;
};

struct FractionRule {
    double train_fraction = 0.8;
};

using SplitRule = std::variant<SiteRule, FractionRule>;

struct Split {
    std::vector<Interval> train;
    std::vector<Interval> eval;
    MetaVocab vocab;  // fitted over train and eval
};

// Raw partition; either side may be empty.
Split partition(const std::vector<Interval>& intervals, const SplitRule& rule, std::uint64_t seed);

// partition() plus the non-empty check; throws ConfigError.
Split assemble(const std::vector<Interval>& intervals, const SplitRule& rule, std::uint64_t seed);

MetaVocab fit_vocab(const std::vector<const Interval*>& intervals);

}  // namespace proxsense::ingest
