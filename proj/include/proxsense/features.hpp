// features.hpp
// Interval -> model input representations.
#pragma once

#include "proxsense/core_types.hpp"
#include "proxsense/ingest.hpp"

#include <array>
#include <span>
#include <utility>
#include <vector>

namespace proxsense::features {

// Per-kind flags: missing[k] is true when the interval had no reading of kind
// k (or the kind was excluded by an ablation).
using SensorMask = std::array<bool, kNumSensorKinds>;

struct Resampled {
    Matrix raw;  // steps x kSensorWidth
    SensorMask missing{};
};

// Zero-order hold onto the mid-step grid t_i = (i + 0.5) * window / steps.
// A kind's first reading is back-filled before it appears; kinds with no
// reading at all are zero and flagged in `missing`.
Resampled resample(const Interval& interval, std::size_t steps = kDefaultSteps);

inline constexpr double kNormEpsilon = 1e-8;

// Per-column mean and population std over every row of every matrix, using
// only samples where the column's kind is present. std is floored at epsilon.
Normalizer fit_normalizer(std::span<const Resampled> train, double epsilon = kNormEpsilon);
Normalizer fit_normalizer(std::span<const Matrix> train, double epsilon = kNormEpsilon);

// (x - mean) / std per column; columns of missing kinds become 0.
Matrix apply_normalizer(const Normalizer& norm, const Matrix& raw, const SensorMask& missing = {});
Matrix invert_normalizer(const Normalizer& norm, const Matrix& normalized);

// One-hot blocks in vocab order: tx_model, rx_model, tx_power, carriage.
// Throws ConfigError naming the field for out-of-vocabulary values.
std::vector<double> encode_metadata(const ExperimentMeta& meta, const MetaVocab& vocab);

// Normalized sensor matrix with the one-hot block appended to every row.
TimeSeriesSample to_timeseries(const Matrix& normalized, std::span<const double> onehot, DistanceClass label,
                               std::string site);

// Sensor rows concatenated row-major, then one copy of the one-hot block.
FlatSample to_flat(const TimeSeriesSample& sample);

struct HistogramSpec {
    double lo = -100.0;
    double hi = -30.0;
    double bucket_width = 5.0;

    std::size_t buckets() const;
    void validate() const;
};

HistogramSample to_histogram(const Interval& interval, const HistogramSpec& spec = {});

struct Mixed {
    std::vector<double> x;
    std::array<double, kNumClasses> soft_label{};
};

std::array<double, kNumClasses> one_hot(DistanceClass c);

// lambda * a + (1 - lambda) * b, labels mixed the same way.
Mixed mixup(std::span<const double> a, DistanceClass la, std::span<const double> b, DistanceClass lb, double lambda);
Mixed mixup(const FlatSample& a, const FlatSample& b, double lambda);

// --- Dataset construction ---

struct FeatureOptions {
    Representation representation = Representation::TimeSeries;
    std::size_t steps = kDefaultSteps;
    SensorSet sensors = SensorSet::all();
    bool include_metadata = true;
    HistogramSpec histogram;
};

// Builds the train and eval datasets for a split. The normalizer is fitted on
// train only; excluded sensors are zeroed in both.
std::pair<Dataset, Dataset> build_datasets(const ingest::Split& split, const FeatureOptions& options);

}  // namespace proxsense::features
