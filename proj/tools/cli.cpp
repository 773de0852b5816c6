#include "cli.hpp"

#include "proxsense/analysis.hpp"
#include "proxsense/config.hpp"
#include "proxsense/container.hpp"
#include "proxsense/eval.hpp"
#include "proxsense/features.hpp"
#include "proxsense/ingest.hpp"
#include "proxsense/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace proxsense::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : ConfigError {
    using ConfigError::ConfigError;
};

// Every flag maps onto a config key; boolean flags store a fixed value.
struct FlagDef {
    const char* flag;
    const char* key;
    const char* help;
    const char* fixed = nullptr;  // non-null for boolean flags
};

const std::vector<FlagDef>& flag_table() {
    static const std::vector<FlagDef> t = {
        {"--config", "", "Config file (key = value lines, [section] headers); defaults to $PROXSENSE_CONFIG"},
        {"--seed", "seed", "Random seed; required, there is no clock-based default"},
        {"--data-dir", "data_dir", "Input directory: raw site logs (prep, ablate, analyze, bench) or prepared datasets (train, eval)"},
        {"--out-dir", "out_dir", "Output directory; files are written atomically"},
        {"--model", "model", "Learner: a preset name, naive-bayes, rf-classifier, rf-regressor or rf-histogram (bench: comma list)"},
        {"--preset", "preset", "Neural training preset name (see README); same as --model for neural learners"},
        {"--train-site", "train_site", "Site to train on (bench: comma list)"},
        {"--eval-site", "eval_site", "Site to evaluate on; equal to the train site means a within-site split"},
        {"--sensors", "sensors", "Sensor subset, comma separated, or 'all' (ablate: several subsets separated by ';')"},
        {"--no-metadata", "metadata", "Drop the device/carriage one-hot block", "false"},
        {"--representation", "representation", "Input representation: timeseries, flat or histogram"},
        {"--contact-threshold", "contact.threshold", "Contact threshold in meters, inclusive (default 1.8)"},
        {"--strict", "strict", "Fail on the first malformed log record instead of collecting errors", "true"},
    };
    return t;
}

const std::map<std::string, std::pair<std::string, std::vector<std::string>>>& command_table() {
    static const std::map<std::string, std::pair<std::string, std::vector<std::string>>> t = {
        {"gen", {"Generate synthetic site logs and manifests", {"--config", "--seed", "--out-dir"}}},
        {"prep",
         {"Parse logs, split, featurize and store train/eval datasets",
          {"--config", "--seed", "--data-dir", "--out-dir", "--train-site", "--eval-site", "--sensors", "--no-metadata",
           "--representation", "--strict"}}},
        {"train",
         {"Fit a learner on prepared datasets and save the checkpoint",
          {"--config", "--seed", "--data-dir", "--out-dir", "--model", "--preset", "--contact-threshold"}}},
        {"eval",
         {"Score a saved checkpoint on the prepared eval set",
          {"--config", "--seed", "--data-dir", "--out-dir", "--contact-threshold"}}},
        {"ablate",
         {"Compare sensor subsets with one learner",
          {"--config", "--seed", "--data-dir", "--out-dir", "--model", "--preset", "--train-site", "--eval-site",
           "--sensors", "--no-metadata", "--representation", "--contact-threshold", "--strict"}}},
        {"analyze",
         {"PCA scatter, cross-site nearest-neighbour gap and optimal training subset",
          {"--config", "--seed", "--data-dir", "--out-dir", "--train-site", "--eval-site", "--sensors",
           "--no-metadata", "--strict"}}},
        {"bench",
         {"Run the model grid and write a report row per (model, train site)",
          {"--config", "--seed", "--data-dir", "--out-dir", "--model", "--train-site", "--eval-site", "--sensors",
           "--no-metadata", "--representation", "--contact-threshold", "--strict"}}},
    };
    return t;
}

const FlagDef& flag_def(const std::string& flag) {
    for (const auto& f : flag_table())
        if (f.flag == flag) return f;
    throw std::logic_error("unknown flag " + flag);
}

// --- resolved configuration ---

class Run {
public:
    Run(KeyValues kv, std::ostream& out) : kv_(std::move(kv)), out_(out) {}

    void require(std::initializer_list<const char*> keys) const {
        std::vector<std::string> missing;
        for (const char* k : keys)
            if (!kv_.contains(k)) missing.emplace_back(k);
        if (missing.empty()) return;
        std::string msg = "missing required settings:";
        for (const auto& m : missing) msg += " " + m + " (--" + flag_for(m) + ")";
        throw UsageError(msg);
    }

    std::uint64_t seed() const {
        const std::string s = *kv_.get("seed");
        try {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            if (used == s.size()) return v;
        } catch (const std::exception&) {
        }
        throw UsageError("seed must be a non-negative integer, got '" + s + "'");
    }

    fs::path path(const char* key) const { return fs::path(*kv_.get(key)); }
    fs::path out_dir() const {
        const auto p = path("out_dir");
        fs::create_directories(p);
        return p;
    }
    std::string str(const char* key, const std::string& fallback = "") const { return kv_.get_or(key, fallback); }
    bool has(const char* key) const { return kv_.contains(key); }
    bool strict() const { return kv_.flag_or("strict", false); }
    const KeyValues& kv() const { return kv_; }
    std::ostream& out() const { return out_; }

    eval::ContactRule rule() const {
        eval::ContactRule r;
        r.threshold = kv_.number_or("contact.threshold", r.threshold);
        r.w_fn = kv_.number_or("contact.w_fn", r.w_fn);
        r.w_fp = kv_.number_or("contact.w_fp", r.w_fp);
        r.validate();
        return r;
    }

    eval::LearnerOptions learner_options() const {
        eval::LearnerOptions o;
        o.forest.n_trees = static_cast<std::size_t>(kv_.integer_or("forest.n_trees", 100));
        o.forest.max_depth = static_cast<std::size_t>(kv_.integer_or("forest.max_depth", 12));
        o.forest.min_leaf = static_cast<std::size_t>(kv_.integer_or("forest.min_leaf", 2));
        o.forest.max_features = static_cast<std::size_t>(kv_.integer_or("forest.max_features", 0));
        o.forest.bootstrap = kv_.flag_or("forest.bootstrap", true);
        o.forest.subset_fraction = kv_.number_or("forest.subset_fraction", 1.0);
        o.nn.mixup_alpha = kv_.number_or("train.mixup_alpha", 0.2);
        o.nn.rule = rule();
        o.nn_regression = kv_.flag_or("train.regression", false);
        if (kv_.contains("train.epochs")) o.epochs = static_cast<int>(kv_.integer_or("train.epochs", 0));
        return o;
    }

    // ablate reads "sensors" as a list of subsets, so it passes read_sensors = false.
    features::FeatureOptions feature_options(std::optional<Representation> fallback = std::nullopt,
                                             bool read_sensors = true) const {
        features::FeatureOptions f;
        if (kv_.contains("representation")) f.representation = parse_representation(*kv_.get("representation"));
        else if (fallback) f.representation = *fallback;
        if (read_sensors && kv_.contains("sensors")) f.sensors = parse_sensor_set(*kv_.get("sensors"));
        f.include_metadata = kv_.flag_or("metadata", true);
        f.steps = static_cast<std::size_t>(kv_.integer_or("prep.steps", static_cast<long long>(kDefaultSteps)));
        f.histogram.lo = kv_.number_or("histogram.lo", f.histogram.lo);
        f.histogram.hi = kv_.number_or("histogram.hi", f.histogram.hi);
        f.histogram.bucket_width = kv_.number_or("histogram.bucket_width", f.histogram.bucket_width);
        return f;
    }

    // --model and --preset name the same thing for neural learners.
    std::string learner_name() const {
        const auto model = kv_.get("model");
        const auto preset = kv_.get("preset");
        if (model && preset && *model != *preset)
            throw UsageError("--model '" + *model + "' and --preset '" + *preset + "' disagree");
        if (preset) {
            find_preset(*preset);
            return *preset;
        }
        if (model) return *model;
        throw UsageError("missing required settings: model (--model) or preset (--preset)");
    }

private:
    static std::string flag_for(const std::string& key) {
        for (const auto& f : flag_table())
            if (f.key == key) return std::string(f.flag).substr(2);
        return key;
    }

    KeyValues kv_;
    std::ostream& out_;
};

// --- data helpers ---

struct LoadedSites {
    std::vector<Interval> intervals;
    json summary = json::object();
};

LoadedSites load_sites(const Run& run, const std::vector<std::string>& sites) {
    LoadedSites out;
    std::set<std::string> seen;
    for (const auto& site : sites) {
        if (!seen.insert(site).second) continue;
        const fs::path dir = run.path("data_dir") / site;
        if (!fs::is_directory(dir)) throw std::runtime_error("no data for site '" + site + "' under " + dir.string());
        auto r = ingest::parse_log_file((dir / "log.txt").string(), (dir / "manifest.csv").string(), run.strict());
        json errors = json::array();
        for (const auto& e : r.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
        out.summary[site] = {{"records_seen", r.records_seen},
                             {"readings_parsed", r.readings_parsed},
                             {"readings_dropped", r.readings_dropped},
                             {"records_errored", r.records_errored},
                             {"intervals", r.intervals.size()},
                             {"empty_intervals", r.empty_intervals},
                             {"orphan_ids", r.orphan_ids},
                             {"errors", errors}};
        for (auto& iv : r.intervals) out.intervals.push_back(std::move(iv));
    }
    return out;
}

ingest::SplitRule site_rule(const Run& run, const std::string& train_site, const std::string& eval_site) {
    ingest::SiteRule r{train_site, eval_site};
    r.within_fraction = run.kv().number_or("split.within_fraction", r.within_fraction);
    return r;
}

std::string set_name(const Dataset& d) {
    std::set<std::string> sites;
    for (const auto& s : d.samples) sites.insert(s.site);
    std::string out;
    for (const auto& s : sites) out += (out.empty() ? "" : "+") + s;
    return out;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --- subcommands ---

int cmd_gen(const Run& run) {
    run.require({"seed", "out_dir"});
    auto cfg = synth::synth_config_from(run.kv());
    cfg.seed = run.seed();
    const auto sites = synth::generate(cfg);
    synth::write_sites(sites, run.out_dir());
    std::size_t n = 0;
    for (const auto& s : sites) n += s.intervals.size();
    run.out() << "generated " << n << " intervals for " << sites.size() << " sites in " << run.path("out_dir").string()
              << "\n";
    return kOk;
}

int cmd_prep(const Run& run) {
    run.require({"seed", "data_dir", "out_dir", "train_site"});
    const std::string train_site = run.str("train_site");
    const std::string eval_site = run.str("eval_site", train_site);
    auto loaded = load_sites(run, {train_site, eval_site});
    const auto split = ingest::assemble(loaded.intervals, site_rule(run, train_site, eval_site), run.seed());
    const auto opts = run.feature_options();
    const auto [train, eval] = features::build_datasets(split, opts);
    const auto out = run.out_dir();
    save_dataset(out / "train.pxd", train);
    save_dataset(out / "eval.pxd", eval);
    json summary = {{"train_site", train_site},
                    {"eval_site", eval_site},
                    {"representation", std::string(to_string(opts.representation))},
                    {"sensors", to_string(opts.sensors)},
                    {"include_metadata", opts.include_metadata},
                    {"train_samples", train.size()},
                    {"eval_samples", eval.size()},
                    {"sites", loaded.summary}};
    write_text_atomic(out / "prep.json", dump(summary));
    run.out() << "prepared " << train.size() << " train and " << eval.size() << " eval samples\n";
    return kOk;
}

int cmd_train(const Run& run) {
    run.require({"seed", "data_dir", "out_dir"});
    const std::string name = run.learner_name();
    const auto train = load_dataset(run.path("data_dir") / "train.pxd");
    const fs::path eval_path = run.path("data_dir") / "eval.pxd";
    std::optional<Dataset> eval;
    if (fs::exists(eval_path)) eval = load_dataset(eval_path);
    auto learner = eval::make_learner(name, run.learner_options());
    learner->fit(train, eval ? &*eval : nullptr, run.seed());
    const auto out = run.out_dir();
    learner->save(out / "model.pxc");
    if (const auto* h = eval::history_of(*learner)) nn::write_history(out / "history.csv", *h);
    write_text_atomic(out / "train.json",
                      dump({{"model", learner->name()}, {"train_set", set_name(train)}, {"train_samples", train.size()}}));
    run.out() << "trained " << learner->name() << " on " << train.size() << " samples\n";
    return kOk;
}

int cmd_eval(const Run& run) {
    run.require({"seed", "data_dir", "out_dir"});
    const auto train = load_dataset(run.path("data_dir") / "train.pxd");
    const auto eval = load_dataset(run.path("data_dir") / "eval.pxd");
    const auto learner = eval::load_learner(run.path("out_dir") / "model.pxc");
    const auto preds = learner->predict(eval);
    const auto truths = eval.labels();
    const auto row = eval::score(learner->name(), set_name(train), set_name(eval), preds, truths, run.rule());
    const auto out = run.out_dir();
    eval::write_report(out / "report.csv", {row});
    write_text_atomic(out / "table2.md", eval::format_table({row}));
    run.out() << eval::format_report({row});
    return kOk;
}

std::vector<eval::AblationSpec> ablation_specs(const Run& run) {
    std::string text = run.str("ablate.subsets", "all;bluetooth;bluetooth,accelerometer,gyroscope,magnetometer");
    if (run.has("sensors")) text = run.str("sensors");
    std::vector<eval::AblationSpec> specs;
    const bool meta = run.kv().flag_or("metadata", true);
    for (const auto& part : split_list(text, ';')) specs.push_back({parse_sensor_set(part), meta});
    if (specs.empty()) throw UsageError("no ablation subsets given");
    return specs;
}

int cmd_ablate(const Run& run) {
    run.require({"seed", "data_dir", "out_dir", "train_site"});
    const std::string name = run.learner_name();
    const std::string train_site = run.str("train_site");
    const std::string eval_site = run.str("eval_site", train_site);
    const auto specs = ablation_specs(run);
    auto loaded = load_sites(run, {train_site, eval_site});
    const auto split = ingest::assemble(loaded.intervals, site_rule(run, train_site, eval_site), run.seed());
    auto opts = run.feature_options(eval::default_representation(name), false);
    const auto lopts = run.learner_options();
    const auto rows = eval::ablate(
        specs, split, opts, [&] { return eval::make_learner(name, lopts); }, run.rule(), run.seed(), train_site,
        eval_site);
    const auto out = run.out_dir();
    eval::write_ablation(out / "ablation.csv", rows);
    std::vector<eval::ReportRow> report;
    for (const auto& r : rows) report.push_back(r.report);
    eval::write_report(out / "report.csv", report);
    for (const auto& r : rows)
        run.out() << r.spec.label() << ": ndcf " << eval::format_fixed(r.report.ndcf) << ", accuracy gap "
                  << eval::format_fixed(r.accuracy_gap) << "\n";
    return kOk;
}

int cmd_analyze(const Run& run) {
    run.require({"seed", "data_dir", "out_dir", "train_site", "eval_site"});
    const std::string a_site = run.str("train_site"), b_site = run.str("eval_site");
    auto loaded = load_sites(run, {a_site, b_site});
    const auto split = ingest::assemble(loaded.intervals, site_rule(run, a_site, b_site), run.seed());
    auto opts = run.feature_options();
    opts.representation = Representation::Flat;
    const auto [a, b] = features::build_datasets(split, opts);
    const auto out = run.out_dir();

    json summary = json::object();
    for (const auto* d : {&a, &b}) {
        const std::string name = d == &a ? "train" : "eval";
        const auto pca = analysis::pca_fit(*d, 2);
        std::vector<analysis::ScatterPoint> pts;
        for (const auto& s : d->samples) {
            const auto p = analysis::pca_project(pca, s.x);
            pts.push_back({p[0], p[1], s.label});
        }
        const std::string site = set_name(*d);
        analysis::emit_scatter(pts, out / ("pca_" + name + ".svg"), out / ("pca_" + name + ".csv"),
                               "PCA of " + site + " (" + name + ")");
        summary["pca_" + name] = {{"site", site},
                                  {"eigenvalues", pca.eigenvalues},
                                  {"explained", pca.total_variance > 0
                                                    ? (pca.eigenvalues[0] + pca.eigenvalues[1]) / pca.total_variance
                                                    : 0.0}};
    }
    const auto gap = analysis::nn_gap(a, b);
    write_text_atomic(out / "nn_gap.txt", analysis::format_nn_gap(gap));
    const auto m = static_cast<std::size_t>(run.kv().integer_or("analyze.m", 2));
    const auto subset = analysis::optimal_subset_indices(a, b, m);
    std::ostringstream csv;
    csv << "index,label,site\n";
    for (auto i : subset) csv << i << ',' << to_string(a.samples[i].label) << ',' << a.samples[i].site << '\n';
    write_text_atomic(out / "optimal_subset.csv", csv.str());
    summary["nn_gap"] = {{"mean_l2", gap.mean_l2},
                         {"mismatched_mean_l2", gap.mismatched_mean_l2},
                         {"mismatch_fraction", gap.mismatch_fraction}};
    summary["optimal_subset"] = {{"m", m}, {"size", subset.size()}, {"of", a.size()}};
    write_text_atomic(out / "analysis.json", dump(summary));
    run.out() << analysis::format_nn_gap(gap) << "optimal subset " << subset.size() << " of " << a.size() << "\n";
    return kOk;
}

int cmd_bench(const Run& run) {
    run.require({"seed", "data_dir", "out_dir"});
    const auto models = split_list(
        run.str("model", run.str("bench.models", "feedforward-1,conv1d-2,naive-bayes,rf-classifier,rf-regressor,rf-histogram")));
    const auto train_sites = split_list(run.str("train_site", run.str("bench.train_sites", "mitre")));
    const std::string eval_site = run.str("eval_site", "nist");
    if (models.empty() || train_sites.empty()) throw UsageError("bench needs at least one model and one train site");
    const auto lopts = run.learner_options();
    const auto rule = run.rule();

    std::vector<std::string> all_sites = train_sites;
    all_sites.push_back(eval_site);
    const auto loaded = load_sites(run, all_sites);

    std::vector<eval::ReportRow> rows;
    std::vector<eval::ModeDelta> deltas;
    for (const auto& site : train_sites) {
        const auto split = ingest::assemble(loaded.intervals, site_rule(run, site, eval_site), run.seed());
        std::map<Representation, std::pair<Dataset, Dataset>> cache;
        std::optional<eval::ReportRow> rf_cls, rf_reg;
        for (const auto& name : models) {
            auto learner = eval::make_learner(name, lopts);
            const auto opts = run.feature_options(eval::default_representation(name));
            auto it = cache.find(opts.representation);
            if (it == cache.end()) it = cache.emplace(opts.representation, features::build_datasets(split, opts)).first;
            const auto& [train, eval] = it->second;
            rows.push_back(eval::run_experiment(*learner, train, eval, rule, run.seed(), site, eval_site));
            if (name == eval::kRfClassifier) rf_cls = rows.back();
            if (name == eval::kRfRegressor) rf_reg = rows.back();
            run.out() << rows.back().model << " / " << site << ": ndcf " << eval::format_fixed(rows.back().ndcf)
                      << "\n";
        }
        if (rf_cls && rf_reg) deltas.push_back({*rf_cls, *rf_reg, rf_reg->ndcf - rf_cls->ndcf});
    }
    const auto out = run.out_dir();
    eval::write_report(out / "report.csv", rows);
    write_text_atomic(out / "table2.md", eval::format_table(rows));
    if (!deltas.empty()) eval::write_mode_delta(out / "rf_modes.csv", deltas);
    return kOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, json extra = {}) {
    json j = {{"error", kind}, {"message", message}};
    if (!extra.is_null()) j["details"] = std::move(extra);
    err << j.dump() << "\n";
}

}  // namespace

std::vector<std::string> subcommands() {
    std::vector<std::string> out;
    for (const auto& [name, _] : command_table()) out.push_back(name);
    return out;
}

std::vector<std::string> flags_of(const std::string& subcommand) { return command_table().at(subcommand).second; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"BLE RSSI proximity sensing toolkit", args.empty() ? "proxsense" : args[0]};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::map<std::string, std::string> flag_values;
    std::map<std::string, bool> bool_values;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : command_table()) {
        auto* sub = app.add_subcommand(name, entry.first);
        subs[name] = sub;
        for (const auto& flag : entry.second) {
            const auto& def = flag_def(flag);
            if (def.fixed) sub->add_flag(flag, bool_values[name + flag], def.help);
            else sub->add_option(flag, flag_values[name + flag], def.help);
        }
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return kUsageError;
    }

    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;

    try {
        KeyValues kv;
        const auto* sub = subs.at(command);
        std::string config_path;
        if (sub->count("--config")) config_path = flag_values[command + "--config"];
        else if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
        if (!config_path.empty()) kv = KeyValues::load(config_path);
        for (const auto& flag : flags_of(command)) {
            const auto& def = flag_def(flag);
            if (!*def.key || !sub->count(flag)) continue;
            kv.set(def.key, def.fixed ? def.fixed : flag_values[command + flag]);
        }
        const Run r(std::move(kv), out);
        if (command == "gen") return cmd_gen(r);
        if (command == "prep") return cmd_prep(r);
        if (command == "train") return cmd_train(r);
        if (command == "eval") return cmd_eval(r);
        if (command == "ablate") return cmd_ablate(r);
        if (command == "analyze") return cmd_analyze(r);
        return cmd_bench(r);
    } catch (const UsageError& e) {
        report_error(err, "usage", e.what());
        return kUsageError;
    } catch (const ConfigError& e) {
        report_error(err, "config", e.what());
        return kUsageError;
    } catch (const ingest::ParseError& e) {
        json issues = json::array();
        for (const auto& i : e.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
        report_error(err, "parse", e.what(), issues);
        return kFailure;
    } catch (const std::exception& e) {
        report_error(err, "runtime", e.what());
        return kFailure;
    }
}

}  // namespace proxsense::cli
