// layers.hpp
// Stateless-forward layers: forward() is const and writes whatever backward()
// needs into a caller-owned cache, so a trained model can run inference from
// several threads at once.
#pragma once

#include "proxsense/nn/ops.hpp"
#include "proxsense/rng.hpp"

#include <memory>
#include <string>
#include <vector>

namespace proxsense::nn {

using LayerCache = std::vector<Tensor>;
using Shape = std::vector<std::size_t>;  // per-sample shape, batch dim excluded

class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x, LayerCache* cache) const = 0;
    // Accumulates parameter gradients; returns d loss / d input when need_dx.
    virtual Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual std::string describe() const = 0;

    virtual std::vector<Parameter*> parameters() { return {}; }
    virtual void init(Rng&) {}
};

// Xavier/Glorot uniform: U(-b, b), b = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

class Linear final : public Layer {
public:
    Linear(std::size_t in, std::size_t out);
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override;
    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
    void init(Rng& rng) override;

private:
    std::size_t in_, out_;
    Parameter weight_, bias_;
};

class Relu final : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override { return in; }
    std::string describe() const override { return "relu"; }
};

class Conv1d final : public Layer {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation = 1);
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override;
    std::vector<Parameter*> parameters() override { return {&kernel_, &bias_}; }
    void init(Rng& rng) override;

private:
    std::size_t cin_, cout_, k_, dilation_;
    Parameter kernel_, bias_;
};

class MaxPool1d final : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override { return "maxpool1d(2)"; }
};

// [B, d1, d2, ...] -> [B, d1*d2*...]
class Flatten final : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override { return "flatten"; }
};

// [B, A, C] -> [B, C, A]; converts between time-major and channel-major.
class SwapAxes final : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override { return "swap_axes"; }
};

// [B, T, H] -> [B, H] (last time step)
class LastStep final : public Layer {
public:
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override { return "last_step"; }
};

// Full-sequence GRU: [B, T, in] -> [B, T, H], zero initial state, BPTT in backward.
class Gru final : public Layer {
public:
    Gru(std::size_t in, std::size_t hidden);
    Tensor forward(const Tensor& x, LayerCache* cache) const override;
    Tensor backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) override;
    Shape output_shape(const Shape& in) const override;
    std::string describe() const override;
    std::vector<Parameter*> parameters() override { return {&w_, &u_, &b_}; }
    void init(Rng& rng) override;

private:
    std::size_t in_, hidden_;
    Parameter w_, u_, b_;
};

}  // namespace proxsense::nn
