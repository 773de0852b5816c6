// core_types.hpp
// Domain types shared by every proxsense module.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proxsense {

// --- Errors ---

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// --- Distance classes ---

enum class DistanceClass : std::uint8_t { M1_2 = 0, M1_8 = 1, M3_0 = 2, M4_5 = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<DistanceClass, kNumClasses> kAllClasses = {
    DistanceClass::M1_2, DistanceClass::M1_8, DistanceClass::M3_0, DistanceClass::M4_5};
inline constexpr std::array<double, kNumClasses> kClassMeters = {1.2, 1.8, 3.0, 4.5};

constexpr std::size_t index_of(DistanceClass c) { return static_cast<std::size_t>(c); }
constexpr double meters_of(DistanceClass c) { return kClassMeters[index_of(c)]; }

// Throws std::out_of_range for i >= 4.
DistanceClass class_from_index(std::size_t i);

// Nearest class by |d - meters|. Midpoints go to the smaller class and values
// outside [1.2, 4.5] clamp. Non-finite d throws std::domain_error.
DistanceClass class_from_meters(double d);

// Exact match against the four class distances (1e-9 tolerance), for manifests.
std::optional<DistanceClass> class_from_exact_meters(double d);

// "1.2", "1.8", "3.0", "4.5"
std::string to_string(DistanceClass c);

// --- Sensors ---

enum class SensorKind : std::uint8_t {
    Bluetooth,
    Accelerometer,
    Gyroscope,
    Magnetometer,
    Attitude,   // roll, pitch, yaw (rad)
    Gravity,
    Altitude,
    Compass,    // heading (deg)
};

inline constexpr std::size_t kNumSensorKinds = 8;
inline constexpr std::array<SensorKind, kNumSensorKinds> kAllSensors = {
    SensorKind::Bluetooth, SensorKind::Accelerometer, SensorKind::Gyroscope,
    SensorKind::Magnetometer, SensorKind::Attitude, SensorKind::Gravity,
    SensorKind::Altitude, SensorKind::Compass};
inline constexpr std::array<std::size_t, kNumSensorKinds> kSensorDims = {1, 3, 3, 3, 3, 3, 1, 1};
inline constexpr std::size_t kSensorWidth = 18;

constexpr std::size_t index_of(SensorKind k) { return static_cast<std::size_t>(k); }
constexpr std::size_t sensor_dim(SensorKind k) { return kSensorDims[index_of(k)]; }
constexpr std::size_t sensor_offset(SensorKind k) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < index_of(k); ++i) off += kSensorDims[i];
    return off;
}

std::string_view sensor_name(SensorKind k);
std::optional<SensorKind> sensor_from_name(std::string_view name);

// Bitmask over SensorKind; bit i set = kind i included.
struct SensorSet {
    std::uint8_t bits = 0xFF;

    static SensorSet all() { return {}; }
    static SensorSet none() { return SensorSet{0}; }
    bool contains(SensorKind k) const { return (bits >> index_of(k)) & 1U; }
    void insert(SensorKind k) { bits = static_cast<std::uint8_t>(bits | (1U << index_of(k))); }
    bool empty() const { return bits == 0; }
    bool operator==(const SensorSet&) const = default;
};

// Comma-separated sensor names ("bluetooth,gyroscope") or "all".
SensorSet parse_sensor_set(std::string_view text);
std::string to_string(SensorSet s);

struct SensorReading {
    double t = 0.0;  // seconds from interval start
    SensorKind kind = SensorKind::Bluetooth;
    std::vector<double> values;

    bool operator==(const SensorReading&) const = default;
};

struct ExperimentMeta {
    std::string experiment_id;
    std::string site;
    std::string tx_model;
    std::string rx_model;
    std::string tx_power;
    std::string carriage;

    bool operator==(const ExperimentMeta&) const = default;
};

struct Interval {
    std::string interval_id;
    ExperimentMeta meta;
    DistanceClass label = DistanceClass::M1_2;
    double window = 4.0;
    std::vector<SensorReading> readings;  // ascending t

    // Throws std::invalid_argument when an invariant is broken.
    void validate() const;
    bool operator==(const Interval&) const = default;
};

// Row-major dense matrix used for feature tensors.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

// --- Feature representations ---

inline constexpr std::size_t kDefaultSteps = 150;

struct TimeSeriesSample {
    Matrix matrix;  // T x D, D = sensor_width + onehot width
    std::size_t sensor_width = kSensorWidth;
    DistanceClass label = DistanceClass::M1_2;
    std::string site;
};

struct FlatSample {
    std::vector<double> vector;
    DistanceClass label = DistanceClass::M1_2;
    std::string site;
};

struct HistogramSample {
    std::vector<double> freqs;
    DistanceClass label = DistanceClass::M1_2;
    std::string site;
};

enum class Representation : std::uint8_t { TimeSeries, Flat, Histogram };

std::string_view to_string(Representation r);
Representation parse_representation(std::string_view s);

// Closed categorical vocabulary for the one-hot metadata block.
struct MetaVocab {
    std::vector<std::string> tx_models;
    std::vector<std::string> rx_models;
    std::vector<std::string> tx_powers;
    std::vector<std::string> carriages;

    std::size_t width() const {
        return tx_models.size() + rx_models.size() + tx_powers.size() + carriages.size();
    }
    bool operator==(const MetaVocab&) const = default;
};

struct Normalizer {
    std::vector<double> mean;
    std::vector<double> std;
    double epsilon = 1e-8;

    bool operator==(const Normalizer&) const = default;
};

enum class SplitTag : std::uint8_t { Train, Eval };

// One sample of a dataset, whatever the representation. For TimeSeries the
// features are a steps x width row-major matrix; otherwise steps == 1.
struct Sample {
    std::vector<double> x;
    DistanceClass label = DistanceClass::M1_2;
    std::string site;

    bool operator==(const Sample&) const = default;
};

struct Dataset {
    Representation representation = Representation::TimeSeries;
    std::size_t steps = kDefaultSteps;
    std::size_t width = 0;          // per-row width (TimeSeries) or vector length
    std::size_t sensor_width = kSensorWidth;
    std::size_t onehot_width = 0;
    std::vector<Sample> samples;
    MetaVocab vocab;
    std::optional<Normalizer> normalizer;
    SplitTag split = SplitTag::Train;

    std::size_t size() const { return samples.size(); }
    std::size_t feature_count() const { return steps * width; }
    std::vector<DistanceClass> labels() const;
    bool operator==(const Dataset&) const = default;
};

// --- Training presets ---

enum class ModelKind : std::uint8_t {
    FeedForward,
    Gru,
    Conv1D,
    Conv1DDilated,
    Conv1DMaxPool,
    ConvGru,
    ConvGruNoLinear,
};

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct TrainPreset {
    std::string name;
    ModelKind model_kind = ModelKind::Conv1D;
    std::string layers_label;  // as tabulated, e.g. "1 conv + 2 linear"
    int num_layers = 1;
    int epochs = 1;
    int hidden_size = 1;
    double learning_rate = 1e-3;
    int batch_size = 1;

    void validate() const;
    bool operator==(const TrainPreset&) const = default;
};

// Hyperparameter table for the deep models, in tabulated order, plus a
// feed-forward preset that the table does not list.
std::span<const TrainPreset> presets();
const TrainPreset& find_preset(std::string_view name);

// --- Metric result ---

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    bool operator==(const ConfusionCounts&) const = default;
};

struct NdcfResult {
    double p_fn = 0.0;
    double p_fp = 0.0;
    double w_fn = 1.0;
    double w_fp = 1.0;
    double ndcf = 0.0;
    ConfusionCounts counts;
};

}  // namespace proxsense
