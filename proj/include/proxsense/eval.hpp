// eval.hpp
// Train/eval experiment harness, report tables, and sensor ablation.
#pragma once

#include "proxsense/baselines.hpp"
#include "proxsense/features.hpp"
#include "proxsense/metrics.hpp"
#include "proxsense/nn/train.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace proxsense::eval {

// Anything that can be fitted on a dataset and then label another one.
class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;
    virtual void fit(const Dataset& train, const Dataset* eval, std::uint64_t seed) = 0;
    virtual std::vector<DistanceClass> predict(const Dataset& data) const = 0;
    virtual void save(const std::filesystem::path& path) const = 0;
};

// Baseline learner names; every preset name selects a neural learner.
inline constexpr std::string_view kNaiveBayes = "naive-bayes";
inline constexpr std::string_view kRfClassifier = "rf-classifier";
inline constexpr std::string_view kRfRegressor = "rf-regressor";
// Forest regressor meant for the histogram representation.
inline constexpr std::string_view kRfHistogram = "rf-histogram";

struct LearnerOptions {
    baselines::ForestParams forest;
    nn::TrainOptions nn;
    bool nn_regression = false;
    std::optional<int> epochs;  // overrides the preset's epoch count
};

// Throws ConfigError for an unknown name.
std::unique_ptr<Learner> make_learner(std::string_view name, const LearnerOptions& options = {});

// Restores a learner saved with Learner::save.
std::unique_ptr<Learner> load_learner(const std::filesystem::path& path);

// The representation a learner expects by default: time series for every
// neural kind except feedforward, histogram for rf-histogram, flat otherwise.
Representation default_representation(std::string_view name);

// Per-epoch history of the last fit, when the learner is neural.
const nn::History* history_of(const Learner& learner);

struct ReportRow {
    std::string model;
    std::string train_set;
    std::string eval_set;
    double ndcf = 0.0;
    double accuracy = 0.0;
    double p_fn = 0.0;
    double p_fp = 0.0;
    ConfusionCounts confusion;

    bool operator==(const ReportRow&) const = default;
};

// Fits on train, scores once on eval.
ReportRow run_experiment(Learner& learner, const Dataset& train, const Dataset& eval, const ContactRule& rule,
                         std::uint64_t seed, std::string train_set, std::string eval_set);

// Scores fixed predictions.
ReportRow score(std::string model, std::string train_set, std::string eval_set,
                std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths,
                const ContactRule& rule);

// model,train_set,eval_set,ndcf,accuracy,p_fn,p_fp
inline constexpr std::string_view kReportHeader = "model,train_set,eval_set,ndcf,accuracy,p_fn,p_fp";
std::string format_report(const std::vector<ReportRow>& rows);
void write_report(const std::filesystem::path& path, const std::vector<ReportRow>& rows);

// Markdown table with columns Network | Train Set | nDCF.
std::string format_table(const std::vector<ReportRow>& rows);

// --- ablation ---

struct AblationSpec {
    SensorSet sensors = SensorSet::all();
    bool include_metadata = true;

    void validate() const;  // ConfigError on an empty sensor set
    std::string label() const;
};

struct AblationRow {
    AblationSpec spec;
    ReportRow report;
    std::size_t feature_width = 0;
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
    double accuracy_gap = 0.0;  // train - eval
};

using LearnerFactory = std::function<std::unique_ptr<Learner>()>;

// Rebuilds the datasets of `split` per spec (excluded sensors zeroed,
// normalizer re-fitted), then fits a fresh learner on each.
std::vector<AblationRow> ablate(const std::vector<AblationSpec>& specs, const ingest::Split& split,
                                const features::FeatureOptions& base, const LearnerFactory& factory,
                                const ContactRule& rule, std::uint64_t seed, const std::string& train_set,
                                const std::string& eval_set);

// spec,width,ndcf,accuracy,train_accuracy,eval_accuracy,accuracy_gap
void write_ablation(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

// --- forest regressor vs classifier ---

struct ModeDelta {
    ReportRow classifier;
    ReportRow regressor;
    double ndcf_delta = 0.0;  // regressor - classifier
};

// Fits the forest in both modes on identical data with the same seed.
ModeDelta compare_forest_modes(const Dataset& train, const Dataset& eval, baselines::ForestParams params,
                               const ContactRule& rule, std::uint64_t seed, const std::string& train_set,
                               const std::string& eval_set);

// train_set,eval_set,ndcf_classifier,ndcf_regressor,ndcf_delta
void write_mode_delta(const std::filesystem::path& path, const std::vector<ModeDelta>& rows);

std::string format_fixed(double v, int digits = 6);

}  // namespace proxsense::eval
