#include "proxsense/synth.hpp"

#include "proxsense/container.hpp"
#include "proxsense/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace proxsense::synth {

double SensorRates::of(SensorKind k) const {
    switch (k) {
        case SensorKind::Bluetooth: return bluetooth;
        case SensorKind::Altitude: return altitude;
        case SensorKind::Compass: return compass;
        default: return imu;
    }
}

void SynthConfig::validate() const {
    if (sites.empty()) throw ConfigError("synth: at least one site required");
    if (n_experiments == 0 || intervals_per_experiment == 0) throw ConfigError("synth: counts must be positive");
    if (!(window > 0.0)) throw ConfigError("synth: window must be positive");
    for (auto k : kAllSensors)
        if (!(rates.of(k) > 0.0)) throw ConfigError("synth: sensor rates must be positive");
    if (!(path_loss.sigma >= 0.0)) throw ConfigError("synth: sigma must be >= 0");
    if (!(path_loss.n_exp > 0.0)) throw ConfigError("synth: n_exp must be > 0");
    if (!(shift >= 0.0)) throw ConfigError("synth: shift must be >= 0");
    if (shift_sign != 1 && shift_sign != -1) throw ConfigError("synth: shift_sign must be 1 or -1");
    if (carriage_atten.empty() || tx_model_offset.empty() || rx_model_offset.empty() || tx_power_offset.empty())
        throw ConfigError("synth: empty categorical table");
    for (const auto& [c, _] : carriage_atten)
        if (!carriage_motion.count(c)) throw ConfigError("synth: carriage '" + c + "' has no motion scale");
}

namespace {

std::map<std::string, double> parse_table(const std::string& text) {
    std::map<std::string, double> out;
    for (const auto& item : split_list(text)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("synth table entry '" + item + "' needs name:value");
        KeyValues tmp;
        tmp.set("v", item.substr(colon + 1));
        out[item.substr(0, colon)] = tmp.number_or("v", 0.0);
    }
    return out;
}

}  // namespace

SynthConfig synth_config_from(const KeyValues& kv) {
    SynthConfig c;
    c.seed = static_cast<std::uint64_t>(kv.integer_or("seed", 0));
    if (const auto s = kv.get("synth.sites")) c.sites = split_list(*s);
    c.n_experiments = static_cast<std::size_t>(kv.integer_or("synth.n_experiments", static_cast<long long>(c.n_experiments)));
    c.intervals_per_experiment = static_cast<std::size_t>(
        kv.integer_or("synth.intervals_per_experiment", static_cast<long long>(c.intervals_per_experiment)));
    c.window = kv.number_or("synth.window", c.window);
    c.rates.bluetooth = kv.number_or("synth.rate_bluetooth", c.rates.bluetooth);
    c.rates.imu = kv.number_or("synth.rate_imu", c.rates.imu);
    c.rates.altitude = kv.number_or("synth.rate_altitude", c.rates.altitude);
    c.rates.compass = kv.number_or("synth.rate_compass", c.rates.compass);
    c.path_loss.p0 = kv.number_or("synth.p0", c.path_loss.p0);
    c.path_loss.n_exp = kv.number_or("synth.n_exp", c.path_loss.n_exp);
    c.path_loss.sigma = kv.number_or("synth.sigma", c.path_loss.sigma);
    c.shift = kv.number_or("synth.shift", c.shift);
    c.shift_sign = static_cast<int>(kv.integer_or("synth.shift_sign", c.shift_sign));
    if (const auto s = kv.get("synth.carriage_atten")) c.carriage_atten = parse_table(*s);
    if (const auto s = kv.get("synth.carriage_motion")) c.carriage_motion = parse_table(*s);
    if (const auto s = kv.get("synth.tx_model_offset")) c.tx_model_offset = parse_table(*s);
    if (const auto s = kv.get("synth.rx_model_offset")) c.rx_model_offset = parse_table(*s);
    if (const auto s = kv.get("synth.tx_power_offset")) c.tx_power_offset = parse_table(*s);
    c.validate();
    return c;
}

PathLoss site_path_loss(const SynthConfig& config, std::size_t site_index) {
    PathLoss p = config.path_loss;
    if (site_index == 0) return p;
    const double s = config.shift * static_cast<double>(site_index);
    p.p0 += config.shift_sign * 5.0 * s;
    p.n_exp -= config.shift_sign * 0.4 * s;
    p.sigma *= 1.0 + s;
    if (!(p.n_exp > 0.0)) throw ConfigError("synth: shift drives n_exp to <= 0 at a later site");
    return p;
}

double rssi_sample(double d, const PathLoss& params, double carriage_atten, Rng& rng) {
    if (!(d > 0.0) || !std::isfinite(d)) throw std::domain_error("rssi_sample: distance must be positive");
    const double mean = params.p0 - 10.0 * params.n_exp * std::log10(d) - carriage_atten;
    return params.sigma > 0.0 ? mean + params.sigma * rng.normal() : mean;
}

namespace {

struct WalkSpec {
    double base;
    double step;   // per-reading std before carriage scaling
    double bound;  // half-width of the reflecting band around base, before carriage scaling
};

// Per-channel walk parameters, in column order within each kind.
std::vector<WalkSpec> walk_specs(SensorKind k, double heading) {
    switch (k) {
        case SensorKind::Accelerometer: return {{0.0, 0.3, 2.0}, {0.0, 0.3, 2.0}, {0.0, 0.3, 2.0}};
        case SensorKind::Gyroscope: return {{0.0, 0.1, 1.0}, {0.0, 0.1, 1.0}, {0.0, 0.1, 1.0}};
        case SensorKind::Magnetometer: return {{22.0, 0.5, 10.0}, {-5.0, 0.5, 10.0}, {-40.0, 0.5, 10.0}};
        case SensorKind::Attitude: return {{0.0, 0.05, 0.8}, {0.3, 0.05, 0.8}, {0.0, 0.05, 0.8}};
        case SensorKind::Gravity: return {{0.0, 0.05, 1.0}, {0.0, 0.05, 1.0}, {9.81, 0.05, 1.0}};
        case SensorKind::Altitude: return {{10.0, 0.05, 1.0}};
        case SensorKind::Compass: return {{heading, 2.0, 30.0}};
        case SensorKind::Bluetooth: break;
    }
    return {};
}

double reflect(double x, double lo, double hi) {
    for (int i = 0; i < 8 && (x < lo || x > hi); ++i) x = x < lo ? 2.0 * lo - x : 2.0 * hi - x;
    return std::clamp(x, lo, hi);
}

// Rounds to 10^-digits; dividing by the power keeps the result the double
// nearest to the decimal value.
double round_to(double v, int digits) {
    const double scale = std::pow(10.0, digits);
    return std::round(v * scale) / scale;
}

template <class Map>
const std::string& pick(const Map& m, Rng& rng) {
    auto it = m.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(rng.below(m.size())));
    return it->first;
}

std::vector<SensorReading> interval_readings(const SynthConfig& cfg, const PathLoss& pl, double distance,
                                             double rssi_offset, double atten, double motion, double heading,
                                             Rng& rng) {
    std::vector<SensorReading> out;
    for (auto kind : kAllSensors) {
        const double rate = cfg.rates.of(kind);
        const auto n = static_cast<std::size_t>(std::floor(rate * cfg.window + 1e-9));
        std::vector<WalkSpec> specs = walk_specs(kind, heading);
        std::vector<double> state;
        // Carriage motion scales the start spread, the step and the band, so a
        // phone in a purse stays near its resting values.
        for (const auto& s : specs) state.push_back(s.base + motion * rng.uniform(-0.5, 0.5) * s.bound);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = std::min(round_to((static_cast<double>(i) + rng.uniform()) / rate, 3), cfg.window);
            SensorReading r{t, kind, {}};
            if (kind == SensorKind::Bluetooth) {
                r.values.push_back(std::round(rssi_sample(distance, pl, atten, rng) + rssi_offset));
            } else {
                for (std::size_t c = 0; c < specs.size(); ++c) {
                    const auto& s = specs[c];
                    const double band = motion * s.bound;
                    state[c] = reflect(state[c] + motion * s.step * rng.normal(), s.base - band, s.base + band);
                    r.values.push_back(round_to(state[c], 4));
                }
            }
            out.push_back(std::move(r));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const SensorReading& a, const SensorReading& b) { return a.t < b.t; });
    return out;
}

std::string numbered(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

}  // namespace

std::vector<SiteData> generate(const SynthConfig& config) {
    config.validate();
    std::vector<SiteData> out;
    for (std::size_t si = 0; si < config.sites.size(); ++si) {
        const auto& site = config.sites[si];
        const PathLoss pl = site_path_loss(config, si);
        SiteData data{site, {}};
        for (std::size_t e = 0; e < config.n_experiments; ++e) {
            const std::string exp_id = site + "-" + numbered("e", e, 3);
            Rng rng(derive_seed(config.seed, exp_id));
            ExperimentMeta meta;
            meta.experiment_id = exp_id;
            meta.site = site;
            meta.tx_model = pick(config.tx_model_offset, rng);
            meta.rx_model = pick(config.rx_model_offset, rng);
            meta.tx_power = pick(config.tx_power_offset, rng);
            meta.carriage = pick(config.carriage_atten, rng);
            const double offset = config.tx_model_offset.at(meta.tx_model) + config.rx_model_offset.at(meta.rx_model) +
                                  config.tx_power_offset.at(meta.tx_power);
            const double atten = config.carriage_atten.at(meta.carriage);
            const double motion = config.carriage_motion.at(meta.carriage);
            const double heading = rng.uniform(0.0, 360.0);
            for (std::size_t j = 0; j < config.intervals_per_experiment; ++j) {
                Interval iv;
                iv.interval_id = exp_id + "-" + numbered("i", j, 3);
                iv.meta = meta;
                iv.label = kAllClasses[j % kNumClasses];
                iv.window = config.window;
                iv.readings =
                    interval_readings(config, pl, meters_of(iv.label), offset, atten, motion, heading, rng);
                data.intervals.push_back(std::move(iv));
            }
        }
        out.push_back(std::move(data));
    }
    return out;
}

void write_sites(const std::vector<SiteData>& sites, const std::filesystem::path& dir) {
    for (const auto& s : sites) {
        const auto sub = dir / s.site;
        write_text_atomic(sub / "log.txt", "# interval_id t sensor values...\n" + ingest::format_logs(s.intervals));
        write_text_atomic(sub / "manifest.csv", ingest::format_manifest(s.intervals));
    }
}

}  // namespace proxsense::synth
