// synth.hpp
// Two-site synthetic interaction logs with a controllable cross-site shift.
//
// RSSI follows the log-distance path-loss model with Gaussian shadowing,
//     rssi = p0 - 10 * n_exp * log10(d / 1 m) - carriage_atten + N(0, sigma^2),
// plus fixed per-device and per-power offsets. Motion channels are bounded
// random walks whose scale depends only on the carriage state.
#pragma once

#include "proxsense/config.hpp"
#include "proxsense/core_types.hpp"
#include "proxsense/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace proxsense::synth {

struct PathLoss {
    double p0 = -45.0;    // dBm at 1 m
    double n_exp = 2.0;   // path-loss exponent
    double sigma = 6.0;   // shadowing std, dB
};

struct SensorRates {
    double bluetooth = 4.0;
    double imu = 5.0;  // accelerometer, gyroscope, magnetometer, attitude, gravity
    double altitude = 1.0;
    double compass = 5.0;

    double of(SensorKind k) const;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    std::vector<std::string> sites = {"mitre", "nist"};
    std::size_t n_experiments = 25;  // per site
    std::size_t intervals_per_experiment = 40;
    double window = 4.0;
    SensorRates rates;
    PathLoss path_loss;
    // Attenuation in dB by carriage state; also the carriage vocabulary.
    std::map<std::string, double> carriage_atten = {{"hand", 0.0}, {"pocket", 5.0}, {"purse", 9.0}};
    // Motion scale by carriage state: multiplies the IMU walk step, start spread and band.
    std::map<std::string, double> carriage_motion = {{"hand", 1.0}, {"pocket", 0.4}, {"purse", 0.1}};
    std::map<std::string, double> tx_model_offset = {{"galaxy-s10", 1.5}, {"iphone-11", -2.0}, {"pixel-3", 0.0}};
    std::map<std::string, double> rx_model_offset = {{"galaxy-s10", -1.5}, {"iphone-11", 1.0}, {"pixel-3", 0.0}};
    std::map<std::string, double> tx_power_offset = {{"high", 0.0}, {"low", -6.0}};
    double shift = 0.0;
    // Direction of the p0 and n_exp perturbation: +1 makes later sites read
    // stronger (p0 up, n_exp down), -1 weaker.
    int shift_sign = 1;

    // Throws ConfigError.
    void validate() const;
};

// Reads keys from the [synth] section, falling back to defaults; "seed" is
// taken from the top level.
SynthConfig synth_config_from(const KeyValues& kv);

// Path-loss parameters for the i-th site. Site 0 uses the base parameters;
// later sites have p0 moved by shift_sign*5*shift dB, n_exp by
// -shift_sign*0.4*shift, and sigma scaled by (1 + shift).
PathLoss site_path_loss(const SynthConfig& config, std::size_t site_index);

// Throws std::domain_error for d <= 0.
double rssi_sample(double d, const PathLoss& params, double carriage_atten, Rng& rng);

struct SiteData {
    std::string site;
    std::vector<Interval> intervals;
};

std::vector<SiteData> generate(const SynthConfig& config);

// <dir>/<site>/log.txt and <dir>/<site>/manifest.csv for every site.
void write_sites(const std::vector<SiteData>& sites, const std::filesystem::path& dir);

}  // namespace proxsense::synth
