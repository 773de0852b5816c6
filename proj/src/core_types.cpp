#include "proxsense/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace proxsense {

DistanceClass class_from_index(std::size_t i) {
    if (i >= kNumClasses) throw std::out_of_range("distance class index " + std::to_string(i));
    return kAllClasses[i];
}

DistanceClass class_from_meters(double d) {
    if (!std::isfinite(d)) throw std::domain_error("class_from_meters: non-finite distance");
    // Comparing against midpoints makes ties resolve to the smaller class and
    // keeps the map monotone.
    for (std::size_t i = 0; i + 1 < kNumClasses; ++i) {
        const double mid = 0.5 * (kClassMeters[i] + kClassMeters[i + 1]);
        if (d <= mid) return kAllClasses[i];
    }
    return kAllClasses.back();
}

std::optional<DistanceClass> class_from_exact_meters(double d) {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        if (std::abs(d - kClassMeters[i]) <= 1e-9) return kAllClasses[i];
    }
    return std::nullopt;
}

std::string to_string(DistanceClass c) {
    static constexpr std::array<const char*, kNumClasses> names = {"1.2", "1.8", "3.0", "4.5"};
    return names[index_of(c)];
}

namespace {
constexpr std::array<std::string_view, kNumSensorKinds> kSensorNames = {
    "bluetooth", "accelerometer", "gyroscope", "magnetometer",
    "attitude",  "gravity",       "altitude",  "compass"};

constexpr std::array<std::string_view, 7> kModelNames = {
    "feedforward", "gru", "conv1d", "conv1d-dilated", "conv1d-maxpool", "convgru", "convgru-nolinear"};
}  // namespace

std::string_view sensor_name(SensorKind k) { return kSensorNames[index_of(k)]; }

std::optional<SensorKind> sensor_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kNumSensorKinds; ++i) {
        if (kSensorNames[i] == name) return kAllSensors[i];
    }
    return std::nullopt;
}

SensorSet parse_sensor_set(std::string_view text) {
    if (text == "all") return SensorSet::all();
    SensorSet set = SensorSet::none();
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto token = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (!token.empty()) {
            const auto kind = sensor_from_name(token);
            if (!kind) throw ConfigError("unknown sensor '" + std::string(token) + "'");
            set.insert(*kind);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    if (set.empty()) throw ConfigError("sensor subset is empty");
    return set;
}

std::string to_string(SensorSet s) {
    if (s == SensorSet::all()) return "all";
    std::string out;
    for (auto k : kAllSensors) {
        if (!s.contains(k)) continue;
        if (!out.empty()) out += '+';
        out += sensor_name(k);
    }
    return out;
}

void Interval::validate() const {
    if (readings.empty()) throw std::invalid_argument("interval " + interval_id + " has no readings");
    if (!(window > 0.0)) throw std::invalid_argument("interval " + interval_id + " has non-positive window");
    double prev = 0.0;
    for (const auto& r : readings) {
        if (!std::isfinite(r.t) || r.t < 0.0 || r.t > window)
            throw std::invalid_argument("interval " + interval_id + ": reading time out of [0, window]");
        if (r.t < prev) throw std::invalid_argument("interval " + interval_id + ": readings not sorted");
        if (r.values.size() != sensor_dim(r.kind))
            throw std::invalid_argument("interval " + interval_id + ": wrong value count for " +
                                        std::string(sensor_name(r.kind)));
        prev = r.t;
    }
}

std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::TimeSeries: return "timeseries";
        case Representation::Flat: return "flat";
        case Representation::Histogram: return "histogram";
    }
    return "?";
}

Representation parse_representation(std::string_view s) {
    if (s == "timeseries") return Representation::TimeSeries;
    if (s == "flat") return Representation::Flat;
    if (s == "histogram") return Representation::Histogram;
    throw ConfigError("unknown representation '" + std::string(s) + "'");
}

std::vector<DistanceClass> Dataset::labels() const {
    std::vector<DistanceClass> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

std::string_view to_string(ModelKind k) { return kModelNames[static_cast<std::size_t>(k)]; }

ModelKind parse_model_kind(std::string_view s) {
    for (std::size_t i = 0; i < kModelNames.size(); ++i) {
        if (kModelNames[i] == s) return static_cast<ModelKind>(i);
    }
    if (s == "lstm") return ModelKind::Gru;  // LSTM rows run on the GRU cell
    throw ConfigError("unknown model kind '" + std::string(s) + "'");
}

void TrainPreset::validate() const {
    if (num_layers <= 0 || epochs < 0 || hidden_size <= 0 || !(learning_rate > 0.0) || batch_size <= 0)
        throw ConfigError("preset '" + name + "' has a non-positive field");
}

namespace {
const std::vector<TrainPreset>& preset_table() {
    using K = ModelKind;
    static const std::vector<TrainPreset> table = {
        {"convgru-1", K::ConvGru, "2", 2, 200, 200, 1e-3, 25},
        {"convgru-2", K::ConvGru, "2", 2, 200, 10, 1e-3, 25},
        {"convgru-3", K::ConvGru, "1", 1, 200, 5, 1e-3, 25},
        {"convgru-4", K::ConvGru, "2", 2, 200, 200, 1e-3, 200},
        {"convgru-5", K::ConvGru, "2", 2, 200, 200, 1e-4, 1000},
        {"convgru-6", K::ConvGru, "2", 2, 200, 200, 1e-4, 1000},
        {"convgru-nolinear-1", K::ConvGruNoLinear, "2", 2, 500, 200, 1e-4, 4000},
        {"convgru-nolinear-2", K::ConvGruNoLinear, "2", 2, 200, 200, 1e-4, 500},
        {"convgru-nolinear-3", K::ConvGruNoLinear, "2", 2, 500, 200, 1e-4, 4000},
        {"gru-1", K::Gru, "2", 2, 40, 200, 3e-4, 100},
        {"lstm-1", K::Gru, "2", 2, 40, 200, 3e-4, 100},
        {"conv1d-1", K::Conv1D, "1 conv + 2 linear", 1, 100, 64, 1e-5, 50},
        {"conv1d-2", K::Conv1D, "1 conv + 2 linear", 1, 100, 64, 1e-4, 50},
        {"conv1d-3", K::Conv1D, "1 conv + 2 linear", 1, 148, 64, 1e-5, 50},
        {"conv1d-dilated-1", K::Conv1DDilated, "3 conv + 2 linear", 3, 100, 64, 1e-5, 50},
        {"conv1d-dilated-2", K::Conv1DDilated, "3 conv + 2 linear", 3, 100, 64, 1e-5, 128},
        {"conv1d-maxpool-1", K::Conv1DMaxPool, "3 conv + 2 linear", 3, 100, 64, 1e-5, 128},
        // Not tabulated; sized like the Conv1D rows.
        {"feedforward-1", K::FeedForward, "1 linear + output", 1, 100, 16, 1e-4, 25},
    };
    return table;
}
}  // namespace

std::span<const TrainPreset> presets() { return preset_table(); }

const TrainPreset& find_preset(std::string_view name) {
    for (const auto& p : preset_table()) {
        if (p.name == name) return p;
    }
    std::ostringstream msg;
    msg << "unknown preset '" << name << "'; known:";
    for (const auto& p : preset_table()) msg << ' ' << p.name;
    throw ConfigError(msg.str());
}

}  // namespace proxsense
