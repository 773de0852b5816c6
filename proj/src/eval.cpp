#include "proxsense/eval.hpp"

#include "proxsense/container.hpp"

#include <cstdio>
#include <sstream>

namespace proxsense::eval {

namespace {

class NnLearner final : public Learner {
public:
    NnLearner(TrainPreset preset, const LearnerOptions& o) : preset_(std::move(preset)), opts_(o) {
        if (o.epochs) preset_.epochs = *o.epochs;
        preset_.validate();
    }
    NnLearner(nn::LoadedModel loaded) : preset_(std::move(loaded.preset)), model_(std::move(loaded.model)) {
        opts_.nn_regression = model_->spec().regression;
    }

    std::string name() const override { return opts_.nn_regression ? preset_.name + "-regressor" : preset_.name; }

    void fit(const Dataset& train, const Dataset* eval, std::uint64_t seed) override {
        const auto spec = nn::spec_for(preset_, train, opts_.nn_regression);
        auto r = nn::train(spec, preset_, train, eval, seed, opts_.nn);
        model_.emplace(std::move(r.model));
        history_ = std::move(r.history);
    }

    std::vector<DistanceClass> predict(const Dataset& data) const override {
        return nn::predict_classes(fitted(), data);
    }

    void save(const std::filesystem::path& path) const override { nn::save_model(path, fitted(), preset_); }

    const nn::History& history() const { return history_; }

private:
    const nn::Model& fitted() const {
        if (!model_) throw std::logic_error(name() + ": predict before fit");
        return *model_;
    }

    TrainPreset preset_;
    LearnerOptions opts_;
    std::optional<nn::Model> model_;
    nn::History history_;
};

class GnbLearner final : public Learner {
public:
    GnbLearner() = default;
    explicit GnbLearner(baselines::GnbModel m) : model_(std::move(m)) {}
    std::string name() const override { return std::string(kNaiveBayes); }
    void fit(const Dataset& train, const Dataset*, std::uint64_t) override { model_ = baselines::gnb_fit(train); }
    std::vector<DistanceClass> predict(const Dataset& data) const override {
        std::vector<DistanceClass> out;
        out.reserve(data.size());
        for (const auto& s : data.samples) {
            const auto p = baselines::gnb_predict(fitted(), s.x);
            out.push_back(class_from_index(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())));
        }
        return out;
    }
    void save(const std::filesystem::path& path) const override { baselines::save_gnb(path, fitted()); }

private:
    const baselines::GnbModel& fitted() const {
        if (!model_) throw std::logic_error("naive-bayes: predict before fit");
        return *model_;
    }
    std::optional<baselines::GnbModel> model_;
};

class ForestLearner final : public Learner {
public:
    ForestLearner(baselines::ForestParams p, std::string name) : params_(p), name_(std::move(name)) {
        params_.validate();
    }
    explicit ForestLearner(baselines::ForestModel m, std::string name)
        : params_(m.params), name_(std::move(name)), model_(std::move(m)) {}
    std::string name() const override { return name_; }
    void fit(const Dataset& train, const Dataset*, std::uint64_t seed) override {
        model_ = baselines::forest_fit(train, params_, seed);
    }
    std::vector<DistanceClass> predict(const Dataset& data) const override {
        std::vector<DistanceClass> out;
        out.reserve(data.size());
        for (const auto& s : data.samples) out.push_back(baselines::forest_predict(fitted(), s.x));
        return out;
    }
    void save(const std::filesystem::path& path) const override { baselines::save_forest(path, fitted(), name_); }

private:
    const baselines::ForestModel& fitted() const {
        if (!model_) throw std::logic_error(name() + ": predict before fit");
        return *model_;
    }
    baselines::ForestParams params_;
    std::string name_;
    std::optional<baselines::ForestModel> model_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(std::string_view name, const LearnerOptions& options) {
    if (name == kNaiveBayes) return std::make_unique<GnbLearner>();
    if (name == kRfClassifier || name == kRfRegressor || name == kRfHistogram) {
        auto p = options.forest;
        p.mode = name == kRfClassifier ? baselines::ForestMode::Classify : baselines::ForestMode::Regress;
        return std::make_unique<ForestLearner>(p, std::string(name));
    }
    for (const auto& p : presets())
        if (p.name == name) return std::make_unique<NnLearner>(p, options);
    throw ConfigError("unknown model '" + std::string(name) + "'; use a preset name, " + std::string(kNaiveBayes) +
                      ", " + std::string(kRfClassifier) + ", " + std::string(kRfRegressor) + " or " +
                      std::string(kRfHistogram));
}

std::unique_ptr<Learner> load_learner(const std::filesystem::path& path) {
    const auto c = read_container(path);
    const std::string kind = c.header.value("kind", "");
    if (kind == "model") return std::make_unique<NnLearner>(nn::load_model(path));
    if (kind == "baseline") {
        const std::string type = c.header.value("type", "");
        if (type == "gnb") return std::make_unique<GnbLearner>(baselines::load_gnb(path));
        if (type == "forest") {
            auto m = baselines::load_forest(path);
            const std::string fallback(m.params.mode == baselines::ForestMode::Regress ? kRfRegressor : kRfClassifier);
            return std::make_unique<ForestLearner>(std::move(m), c.header.value("learner", fallback));
        }
    }
    throw std::runtime_error(path.string() + " is not a model checkpoint");
}

Representation default_representation(std::string_view name) {
    if (name == kRfHistogram) return Representation::Histogram;
    for (const auto& p : presets())
        if (p.name == name)
            return p.model_kind == ModelKind::FeedForward ? Representation::Flat : Representation::TimeSeries;
    return Representation::Flat;
}

const nn::History* history_of(const Learner& learner) {
    const auto* nn = dynamic_cast<const NnLearner*>(&learner);
    return nn ? &nn->history() : nullptr;
}

ReportRow score(std::string model, std::string train_set, std::string eval_set,
                std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths,
                const ContactRule& rule) {
    const auto r = ndcf(predictions, truths, rule);
    return {std::move(model), std::move(train_set), std::move(eval_set), r.ndcf, accuracy(predictions, truths),
            r.p_fn, r.p_fp, r.counts};
}

ReportRow run_experiment(Learner& learner, const Dataset& train, const Dataset& eval, const ContactRule& rule,
                         std::uint64_t seed, std::string train_set, std::string eval_set) {
    rule.validate();
    learner.fit(train, &eval, seed);
    const auto preds = learner.predict(eval);
    const auto truths = eval.labels();
    return score(learner.name(), std::move(train_set), std::move(eval_set), preds, truths, rule);
}

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string format_report(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << kReportHeader << '\n';
    for (const auto& r : rows)
        os << r.model << ',' << r.train_set << ',' << r.eval_set << ',' << format_fixed(r.ndcf) << ','
           << format_fixed(r.accuracy) << ',' << format_fixed(r.p_fn) << ',' << format_fixed(r.p_fp) << '\n';
    return os.str();
}

void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows) {
    write_text_atomic(path, format_report(rows));
}

std::string format_table(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "| Network | Train Set | nDCF |\n|---|---|---|\n";
    for (const auto& r : rows) os << "| " << r.model << " | " << r.train_set << " | " << format_fixed(r.ndcf, 2) << " |\n";
    return os.str();
}

// --- ablation ---

void AblationSpec::validate() const {
    if (sensors.empty()) throw ConfigError("ablation sensor subset is empty");
}

std::string AblationSpec::label() const { return to_string(sensors) + (include_metadata ? "" : "-nometa"); }

std::vector<AblationRow> ablate(const std::vector<AblationSpec>& specs, const ingest::Split& split,
                                const features::FeatureOptions& base, const LearnerFactory& factory,
                                const ContactRule& rule, std::uint64_t seed, const std::string& train_set,
                                const std::string& eval_set) {
    for (const auto& s : specs) s.validate();
    std::vector<AblationRow> out;
    for (const auto& s : specs) {
        auto opts = base;
        opts.sensors = s.sensors;
        opts.include_metadata = s.include_metadata;
        const auto [train, eval] = features::build_datasets(split, opts);
        auto learner = factory();
        AblationRow row{s, run_experiment(*learner, train, eval, rule, seed, train_set, eval_set),
                        train.feature_count(), 0.0, 0.0, 0.0};
        const auto train_truth = train.labels();
        row.train_accuracy = accuracy(learner->predict(train), train_truth);
        row.eval_accuracy = row.report.accuracy;
        row.accuracy_gap = row.train_accuracy - row.eval_accuracy;
        out.push_back(std::move(row));
    }
    return out;
}

void write_ablation(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "spec,width,ndcf,accuracy,train_accuracy,eval_accuracy,accuracy_gap\n";
    for (const auto& r : rows)
        os << r.spec.label() << ',' << r.feature_width << ',' << format_fixed(r.report.ndcf) << ','
           << format_fixed(r.report.accuracy) << ',' << format_fixed(r.train_accuracy) << ','
           << format_fixed(r.eval_accuracy) << ',' << format_fixed(r.accuracy_gap) << '\n';
    write_text_atomic(path, os.str());
}

// --- forest modes ---

ModeDelta compare_forest_modes(const Dataset& train, const Dataset& eval, baselines::ForestParams params,
                               const ContactRule& rule, std::uint64_t seed, const std::string& train_set,
                               const std::string& eval_set) {
    LearnerOptions o;
    o.forest = params;
    auto cls = make_learner(kRfClassifier, o);
    auto reg = make_learner(kRfRegressor, o);
    ModeDelta d{run_experiment(*cls, train, eval, rule, seed, train_set, eval_set),
                run_experiment(*reg, train, eval, rule, seed, train_set, eval_set), 0.0};
    d.ndcf_delta = d.regressor.ndcf - d.classifier.ndcf;
    return d;
}

void write_mode_delta(const std::filesystem::path& path, const std::vector<ModeDelta>& rows) {
    std::ostringstream os;
    os << "train_set,eval_set,ndcf_classifier,ndcf_regressor,ndcf_delta\n";
    for (const auto& r : rows)
        os << r.classifier.train_set << ',' << r.classifier.eval_set << ',' << format_fixed(r.classifier.ndcf) << ','
           << format_fixed(r.regressor.ndcf) << ',' << format_fixed(r.ndcf_delta) << '\n';
    write_text_atomic(path, os.str());
}

}  // namespace proxsense::eval
