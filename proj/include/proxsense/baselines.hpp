// baselines.hpp
// Gaussian naive Bayes, CART trees and random forests over flat feature
// vectors (any representation is read as its row-major feature vector).
#pragma once

#include "proxsense/core_types.hpp"
#include "proxsense/rng.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace proxsense::baselines {

using Distribution = std::array<double, kNumClasses>;

// --- Gaussian naive Bayes ---

inline constexpr double kGnbVarianceFloor = 1e-9;

struct GnbModel {
    std::size_t width = 0;
    Distribution prior{};
    std::array<std::vector<double>, kNumClasses> mean;
    std::array<std::vector<double>, kNumClasses> var;  // population variance, floored
};

// Throws std::invalid_argument when a class has no training sample.
GnbModel gnb_fit(const Dataset& train);
// log prior + sum of per-feature log densities, per class.
Distribution gnb_log_joint(const GnbModel& model, std::span<const double> x);
// Posterior over the four classes, normalized in log space.
Distribution gnb_predict(const GnbModel& model, std::span<const double> x);

// --- CART and random forest ---

enum class ForestMode : std::uint8_t { Classify, Regress };

struct ForestParams {
    ForestMode mode = ForestMode::Classify;
    std::size_t n_trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_leaf = 2;
    std::size_t max_features = 0;  // features tried per split; 0 means floor(sqrt(D))
    bool bootstrap = true;
    double subset_fraction = 1.0;  // share of the train set each fit draws from

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    Distribution dist{};  // class frequencies at the node
    double mean = 0.0;    // mean label in meters at the node
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    const TreeNode& leaf_for(std::span<const double> x) const;
    std::size_t depth() const;
};

// Best single split of the rows in `rows` over the candidate features.
// Thresholds are midpoints of consecutive distinct values; each side keeps at
// least min_leaf rows. Ties in gain go to the lowest feature, then the lowest
// threshold. found == false when no split has positive gain.
struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};
SplitChoice best_split(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                       ForestMode mode, std::size_t min_leaf);

// Grows one tree on `rows` (repeats allowed), sampling features with rng.
Tree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params, Rng& rng);

struct ForestModel {
    ForestParams params;
    std::size_t width = 0;
    std::vector<Tree> trees;
};

// Tree t draws its sample and features from Rng(derive_seed(seed, t)); trees
// are grown in parallel.
ForestModel forest_fit(const Dataset& train, const ForestParams& params, std::uint64_t seed);
// Mean of the trees' leaf distributions (classify mode).
Distribution forest_predict_proba(const ForestModel& model, std::span<const double> x);
// Mean of the trees' leaf means in meters (regress mode).
double forest_predict_meters(const ForestModel& model, std::span<const double> x);
// Most probable class, or class_from_meters of the regression output.
DistanceClass forest_predict(const ForestModel& model, std::span<const double> x);

// --- persistence (checkpoint container, kind "baseline") ---

void save_gnb(const std::filesystem::path& path, const GnbModel& model);
GnbModel load_gnb(const std::filesystem::path& path);
// `label` is stored in the header as "learner" when non-empty.
void save_forest(const std::filesystem::path& path, const ForestModel& model, const std::string& label = "");
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace proxsense::baselines
