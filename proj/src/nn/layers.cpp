#include "proxsense/nn/layers.hpp"

#include "proxsense/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace proxsense::nn {

void xavier_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.data) v = rng.uniform(-bound, bound);
}

namespace {

Parameter make_param(std::string name, Shape shape) {
    Parameter p{std::move(name), Tensor(shape), Tensor(shape)};
    return p;
}

}  // namespace

// --- Linear ---

Linear::Linear(std::size_t in, std::size_t out)
    : in_(in), out_(out), weight_(make_param("W", {in, out})), bias_(make_param("b", {out})) {}

Tensor Linear::forward(const Tensor& x, LayerCache* cache) const {
    if (cache) *cache = {x};
    return linear_forward(x, weight_.value, bias_.value);
}

Tensor Linear::backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) {
    auto g = linear_backward(cache.at(0), weight_.value, grad_out, need_dx);
    for (std::size_t i = 0; i < g.dw.size(); ++i) weight_.grad.data[i] += g.dw.data[i];
    for (std::size_t i = 0; i < g.db.size(); ++i) bias_.grad.data[i] += g.db.data[i];
    return std::move(g.dx);
}

Shape Linear::output_shape(const Shape& in) const {
    if (in.size() != 1 || in[0] != in_)
        throw ShapeError("linear(" + std::to_string(in_) + " -> " + std::to_string(out_) + ") got input " +
                         Tensor(in).shape_string());
    return {out_};
}

std::string Linear::describe() const { return "linear(" + std::to_string(in_) + " -> " + std::to_string(out_) + ")"; }

void Linear::init(Rng& rng) {
    xavier_uniform(weight_.value, in_, out_, rng);
    std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0);
}

// --- Relu ---

Tensor Relu::forward(const Tensor& x, LayerCache* cache) const {
    Tensor y = x;
    for (auto& v : y.data) v = v > 0.0 ? v : 0.0;
    if (cache) *cache = {y};
    return y;
}

Tensor Relu::backward(const LayerCache& cache, const Tensor& grad_out, bool) {
    const auto& y = cache.at(0);
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (!(y.data[i] > 0.0)) dx.data[i] = 0.0;
    return dx;
}

// --- Conv1d ---

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t dilation)
    : cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      dilation_(dilation),
      kernel_(make_param("K", {out_channels, in_channels, kernel})),
      bias_(make_param("b", {out_channels})) {}

Tensor Conv1d::forward(const Tensor& x, LayerCache* cache) const {
    if (cache) *cache = {x};
    return conv1d_forward(x, kernel_.value, bias_.value, dilation_);
}

Tensor Conv1d::backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) {
    auto g = conv1d_backward(cache.at(0), kernel_.value, dilation_, grad_out, need_dx);
    for (std::size_t i = 0; i < g.dkernel.size(); ++i) kernel_.grad.data[i] += g.dkernel.data[i];
    for (std::size_t i = 0; i < g.dbias.size(); ++i) bias_.grad.data[i] += g.dbias.data[i];
    return std::move(g.dx);
}

Shape Conv1d::output_shape(const Shape& in) const {
    const std::size_t span = (k_ - 1) * dilation_ + 1;
    if (in.size() != 2 || in[0] != cin_ || in[1] < span)
        throw ShapeError(describe() + " needs [" + std::to_string(cin_) + ", >=" + std::to_string(span) + "], got " +
                         Tensor(in).shape_string());
    return {cout_, in[1] - (k_ - 1) * dilation_};
}

std::string Conv1d::describe() const {
    return "conv1d(" + std::to_string(cin_) + " -> " + std::to_string(cout_) + ", k=" + std::to_string(k_) +
           ", dilation=" + std::to_string(dilation_) + ")";
}

void Conv1d::init(Rng& rng) {
    xavier_uniform(kernel_.value, cin_ * k_, cout_ * k_, rng);
    std::fill(bias_.value.data.begin(), bias_.value.data.end(), 0.0);
}

// --- MaxPool1d ---

Tensor MaxPool1d::forward(const Tensor& x, LayerCache* cache) const {
    auto r = maxpool1d(x);
    if (cache) {
        Tensor idx({r.argmax.size()});
        for (std::size_t i = 0; i < r.argmax.size(); ++i) idx.data[i] = static_cast<double>(r.argmax[i]);
        *cache = {std::move(idx), Tensor({x.dim(2)})};
    }
    return std::move(r.out);
}

Tensor MaxPool1d::backward(const LayerCache& cache, const Tensor& grad_out, bool) {
    std::vector<std::size_t> argmax(cache.at(0).size());
    for (std::size_t i = 0; i < argmax.size(); ++i) argmax[i] = static_cast<std::size_t>(cache[0].data[i]);
    return maxpool1d_backward(grad_out, argmax, cache.at(1).dim(0));
}

Shape MaxPool1d::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] < 2) throw ShapeError("maxpool1d needs [C, L>=2], got " + Tensor(in).shape_string());
    return {in[0], in[1] / 2};
}

// --- Flatten ---

Tensor Flatten::forward(const Tensor& x, LayerCache* cache) const {
    if (cache) {
        Tensor shape_only;
        shape_only.shape = x.shape;
        *cache = {std::move(shape_only)};
    }
    Tensor y = x;
    y.shape = {x.dim(0), x.size() / std::max<std::size_t>(x.dim(0), 1)};
    return y;
}

Tensor Flatten::backward(const LayerCache& cache, const Tensor& grad_out, bool) {
    Tensor dx = grad_out;
    dx.shape = cache.at(0).shape;
    return dx;
}

Shape Flatten::output_shape(const Shape& in) const { return {element_count(in)}; }

// --- SwapAxes ---

namespace {

Tensor swap12(const Tensor& x) {
    if (x.rank() != 3) throw ShapeError("swap_axes needs a rank-3 tensor, got " + x.shape_string());
    const std::size_t batch = x.dim(0), a = x.dim(1), c = x.dim(2);
    Tensor y({batch, c, a});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = x.raw() + b * a * c;
        double* dst = y.raw() + b * a * c;
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < c; ++j) dst[j * a + i] = src[i * c + j];
    }
    return y;
}

}  // namespace

Tensor SwapAxes::forward(const Tensor& x, LayerCache*) const { return swap12(x); }
Tensor SwapAxes::backward(const LayerCache&, const Tensor& grad_out, bool) { return swap12(grad_out); }

Shape SwapAxes::output_shape(const Shape& in) const {
    if (in.size() != 2) throw ShapeError("swap_axes needs a rank-2 sample shape, got " + Tensor(in).shape_string());
    return {in[1], in[0]};
}

// --- LastStep ---

Tensor LastStep::forward(const Tensor& x, LayerCache* cache) const {
    if (x.rank() != 3) throw ShapeError("last_step needs [B, T, H], got " + x.shape_string());
    const std::size_t batch = x.dim(0), steps = x.dim(1), hid = x.dim(2);
    if (cache) *cache = {Tensor({steps})};
    Tensor y({batch, hid});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = x.raw() + (b * steps + steps - 1) * hid;
        std::copy(src, src + hid, y.raw() + b * hid);
    }
    return y;
}

Tensor LastStep::backward(const LayerCache& cache, const Tensor& grad_out, bool) {
    const std::size_t steps = cache.at(0).dim(0), batch = grad_out.dim(0), hid = grad_out.dim(1);
    Tensor dx({batch, steps, hid});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = grad_out.raw() + b * hid;
        std::copy(src, src + hid, dx.raw() + (b * steps + steps - 1) * hid);
    }
    return dx;
}

Shape LastStep::output_shape(const Shape& in) const {
    if (in.size() != 2) throw ShapeError("last_step needs [T, H], got " + Tensor(in).shape_string());
    return {in[1]};
}

// --- Gru ---

namespace {

Tensor slice_step(const Tensor& seq, std::size_t t) {
    const std::size_t batch = seq.dim(0), steps = seq.dim(1), w = seq.dim(2);
    Tensor out({batch, w});
    for (std::size_t b = 0; b < batch; ++b) {
        const double* src = seq.raw() + (b * steps + t) * w;
        std::copy(src, src + w, out.raw() + b * w);
    }
    return out;
}

void put_step(Tensor& seq, std::size_t t, const Tensor& v) {
    const std::size_t batch = seq.dim(0), steps = seq.dim(1), w = seq.dim(2);
    for (std::size_t b = 0; b < batch; ++b) std::copy(v.raw() + b * w, v.raw() + (b + 1) * w, seq.raw() + (b * steps + t) * w);
}

}  // namespace

Gru::Gru(std::size_t in, std::size_t hidden)
    : in_(in),
      hidden_(hidden),
      w_(make_param("W", {in, 3 * hidden})),
      u_(make_param("U", {hidden, 3 * hidden})),
      b_(make_param("b", {3 * hidden})) {}

// Cache layout: x, h_prev sequence, z, r, cand (each [B, T, *]).
Tensor Gru::forward(const Tensor& x, LayerCache* cache) const {
    if (x.rank() != 3 || x.dim(2) != in_)
        throw ShapeError(describe() + " needs [B, T, " + std::to_string(in_) + "], got " + x.shape_string());
    const std::size_t batch = x.dim(0), steps = x.dim(1);
    Tensor out({batch, steps, hidden_});
    Tensor h({batch, hidden_});
    Tensor hprev, z, r, cand;
    if (cache) {
        hprev = Tensor({batch, steps, hidden_});
        z = Tensor({batch, steps, hidden_});
        r = Tensor({batch, steps, hidden_});
        cand = Tensor({batch, steps, hidden_});
    }
    GruStepCache step;
    for (std::size_t t = 0; t < steps; ++t) {
        const Tensor xt = slice_step(x, t);
        Tensor next = gru_step(xt, h, w_.value, u_.value, b_.value, cache ? &step : nullptr);
        if (cache) {
            put_step(hprev, t, h);
            put_step(z, t, step.z);
            put_step(r, t, step.r);
            put_step(cand, t, step.cand);
        }
        put_step(out, t, next);
        h = std::move(next);
    }
    if (cache) *cache = {x, std::move(hprev), std::move(z), std::move(r), std::move(cand)};
    return out;
}

Tensor Gru::backward(const LayerCache& cache, const Tensor& grad_out, bool need_dx) {
    const Tensor& x = cache.at(0);
    const std::size_t batch = x.dim(0), steps = x.dim(1);
    Tensor dx;
    if (need_dx) dx = Tensor({batch, steps, in_});
    Tensor dh({batch, hidden_});
    for (std::size_t t = steps; t-- > 0;) {
        const Tensor go = slice_step(grad_out, t);
        for (std::size_t i = 0; i < dh.size(); ++i) dh.data[i] += go.data[i];
        const GruStepCache step{slice_step(x, t), slice_step(cache[1], t), slice_step(cache[2], t),
                                slice_step(cache[3], t), slice_step(cache[4], t)};
        auto g = gru_step_backward(step, w_.value, u_.value, dh, w_.grad, u_.grad, b_.grad);
        if (need_dx) put_step(dx, t, g.dx);
        dh = std::move(g.dh_prev);
    }
    return dx;
}

Shape Gru::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != in_)
        throw ShapeError(describe() + " needs [T, " + std::to_string(in_) + "], got " + Tensor(in).shape_string());
    return {in[0], hidden_};
}

std::string Gru::describe() const { return "gru(" + std::to_string(in_) + " -> " + std::to_string(hidden_) + ")"; }

void Gru::init(Rng& rng) {
    xavier_uniform(w_.value, in_, hidden_, rng);
    xavier_uniform(u_.value, hidden_, hidden_, rng);
    std::fill(b_.value.data.begin(), b_.value.data.end(), 0.0);
}

}  // namespace proxsense::nn
