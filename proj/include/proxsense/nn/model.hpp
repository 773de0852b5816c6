// model.hpp
// Architectures for every tabulated model family, built from nn layers.
//
//   feedforward       [linear(hidden) + relu] x num_layers, linear(out)
//   conv1d            conv(64, k=3), relu, flatten, linear(hidden), relu, linear(out)
//   conv1d-dilated    3 x [conv(64, k=3, dilation 1/2/4), relu], flatten, 2 linear
//   conv1d-maxpool    3 x [conv(64, k=3), relu, maxpool(2)], flatten, 2 linear
//   gru               gru(hidden) x num_layers, last step, linear(out)
//   convgru           conv(64, k=3), relu, gru(hidden) x num_layers, last step, linear(out)
//   convgru-nolinear  as convgru, but the last step is read through a
//                     pointwise conv head (hidden -> out channels) instead of
//                     a dense layer
//
// Time-series input is [B, T, D]; flat input is [B, N]. out is 4 logits, or
// 1 value in meters in regression mode.
#pragma once

#include "proxsense/core_types.hpp"
#include "proxsense/nn/layers.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace proxsense::nn {

struct ModelSpec {
    ModelKind kind = ModelKind::Conv1D;
    std::size_t steps = kDefaultSteps;  // T (time-series kinds)
    std::size_t width = 0;              // D per step, or N for feedforward
    std::size_t hidden = 64;
    std::size_t num_layers = 1;
    std::size_t conv_channels = 64;
    std::size_t kernel = 3;
    bool regression = false;

    std::size_t outputs() const { return regression ? 1 : kNumClasses; }
    bool takes_time_series() const { return kind != ModelKind::FeedForward; }
    Shape input_shape() const;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& j);
    bool operator==(const ModelSpec&) const = default;
};

// Derives the architecture from a preset and a dataset's layout. Throws
// ConfigError when the representation does not suit the model kind.
ModelSpec spec_for(const TrainPreset& preset, const Dataset& data, bool regression = false);

class Model {
public:
    using Tape = std::vector<LayerCache>;

    // Builds the layers and initializes weights from `seed`.
    Model(ModelSpec spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }
    Tensor forward(const Tensor& x, Tape* tape = nullptr) const;
    void backward(const Tape& tape, const Tensor& grad_out);

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    void zero_grad();
    std::size_t parameter_count() const;
    // "<layer index>.<parameter>", aligned with parameters().
    const std::vector<std::string>& parameter_names() const { return param_names_; }

    std::vector<std::string> describe() const;
    std::vector<Shape> layer_output_shapes() const;

private:
    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::string> param_names_;
};

// Stacks samples into a batch tensor in the model's input layout.
Tensor batch_input(const Dataset& data, std::span<const std::size_t> indices);

void save_model(const std::filesystem::path& path, const Model& model, const TrainPreset& preset);

struct LoadedModel {
    Model model;
    TrainPreset preset;
};
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace proxsense::nn
