#include "proxsense/nn/model.hpp"

#include "proxsense/container.hpp"

namespace proxsense::nn {

using nlohmann::json;

Shape ModelSpec::input_shape() const {
    if (takes_time_series()) return {steps, width};
    return {width};
}

json ModelSpec::to_json() const {
    return {{"kind", std::string(to_string(kind))}, {"steps", steps},   {"width", width},
            {"hidden", hidden},                     {"num_layers", num_layers}, {"conv_channels", conv_channels},
            {"kernel", kernel},                     {"regression", regression}};
}

ModelSpec ModelSpec::from_json(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.steps = j.at("steps").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.num_layers = j.at("num_layers").get<std::size_t>();
    s.conv_channels = j.at("conv_channels").get<std::size_t>();
    s.kernel = j.at("kernel").get<std::size_t>();
    s.regression = j.at("regression").get<bool>();
    return s;
}

ModelSpec spec_for(const TrainPreset& preset, const Dataset& data, bool regression) {
    preset.validate();
    ModelSpec s;
    s.kind = preset.model_kind;
    s.hidden = static_cast<std::size_t>(preset.hidden_size);
    s.num_layers = static_cast<std::size_t>(preset.num_layers);
    s.regression = regression;
    if (s.takes_time_series()) {
        if (data.representation != Representation::TimeSeries)
            throw ConfigError(std::string(to_string(s.kind)) + " needs time-series input, dataset is " +
                              std::string(to_string(data.representation)));
        s.steps = data.steps;
        s.width = data.width;
    } else {
        if (data.representation == Representation::TimeSeries)
            throw ConfigError("feedforward needs flat or histogram input, dataset is timeseries");
        s.steps = 1;
        s.width = data.width;
    }
    return s;
}

namespace {

std::vector<std::unique_ptr<Layer>> build_layers(const ModelSpec& s) {
    std::vector<std::unique_ptr<Layer>> L;
    const std::size_t out = s.outputs();
    const std::size_t ch = s.conv_channels;
    // Per-sample shape after the layers added so far; validates each layer.
    Shape shape = s.input_shape();
    auto add = [&](auto layer) {
        shape = layer.output_shape(shape);
        L.push_back(std::make_unique<decltype(layer)>(std::move(layer)));
    };
    auto dense_head = [&] {
        add(Flatten{});
        add(Linear(shape[0], s.hidden));
        add(Relu{});
        add(Linear(s.hidden, out));
    };
    auto gru_stack = [&] {
        for (std::size_t i = 0; i < s.num_layers; ++i) add(Gru(shape[1], s.hidden));
    };
    auto conv = [&](std::size_t cout, std::size_t k, std::size_t dilation) {
        add(Conv1d(shape[0], cout, k, dilation));
    };

    switch (s.kind) {
        case ModelKind::FeedForward:
            for (std::size_t i = 0; i < s.num_layers; ++i) {
                add(Linear(shape[0], s.hidden));
                add(Relu{});
            }
            add(Linear(shape[0], out));
            break;
        case ModelKind::Conv1D:
            add(SwapAxes{});
            conv(ch, s.kernel, 1);
            add(Relu{});
            dense_head();
            break;
        case ModelKind::Conv1DDilated:
            add(SwapAxes{});
            for (std::size_t dil : {1, 2, 4}) {
                conv(ch, s.kernel, dil);
                add(Relu{});
            }
            dense_head();
            break;
        case ModelKind::Conv1DMaxPool:
            add(SwapAxes{});
            for (int i = 0; i < 3; ++i) {
                conv(ch, s.kernel, 1);
                add(Relu{});
                add(MaxPool1d{});
            }
            dense_head();
            break;
        case ModelKind::Gru:
            gru_stack();
            add(LastStep{});
            add(Linear(s.hidden, out));
            break;
        case ModelKind::ConvGru:
        case ModelKind::ConvGruNoLinear:
            add(SwapAxes{});
            conv(ch, s.kernel, 1);
            add(Relu{});
            add(SwapAxes{});
            gru_stack();
            if (s.kind == ModelKind::ConvGru) {
                add(LastStep{});
                add(Linear(s.hidden, out));
            } else {
                add(SwapAxes{});
                conv(out, 1, 1);
                add(SwapAxes{});
                add(LastStep{});
            }
            break;
    }
    return L;
}

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : spec_(spec), layers_(build_layers(spec_)) {
    Rng rng(derive_seed(seed, "init"));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i]->init(rng);
        for (auto* p : layers_[i]->parameters()) param_names_.push_back(std::to_string(i) + "." + p->name);
    }
}

Tensor Model::forward(const Tensor& x, Tape* tape) const {
    Shape expected{x.rank() > 0 ? x.dim(0) : 0};
    for (auto d : spec_.input_shape()) expected.push_back(d);
    if (x.shape != expected)
        throw ShapeError("model input " + x.shape_string() + ", expected " + Tensor(expected).shape_string());
    if (tape) tape->assign(layers_.size(), {});
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(h, tape ? &(*tape)[i] : nullptr);
    return h;
}

void Model::backward(const Tape& tape, const Tensor& grad_out) {
    if (tape.size() != layers_.size()) throw std::logic_error("backward: tape does not match model");
    Tensor g = grad_out;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(tape[i], g, i > 0);
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_)
        for (auto* p : l->parameters()) out.push_back(p);
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    std::vector<const Parameter*> out;
    for (auto* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
    return out;
}

void Model::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->value.size();
    return n;
}

std::vector<std::string> Model::describe() const {
    std::vector<std::string> out;
    for (const auto& l : layers_) out.push_back(l->describe());
    return out;
}

std::vector<Shape> Model::layer_output_shapes() const {
    std::vector<Shape> out;
    Shape s = spec_.input_shape();
    for (const auto& l : layers_) out.push_back(s = l->output_shape(s));
    return out;
}

Tensor batch_input(const Dataset& data, std::span<const std::size_t> indices) {
    const std::size_t n = data.feature_count();
    Shape shape{indices.size()};
    if (data.representation == Representation::TimeSeries) {
        shape.push_back(data.steps);
        shape.push_back(data.width);
    } else {
        shape.push_back(data.width);
    }
    Tensor x(shape);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& s = data.samples.at(indices[i]).x;
        if (s.size() != n) throw ShapeError("sample length " + std::to_string(s.size()) + " != " + std::to_string(n));
        std::copy(s.begin(), s.end(), x.raw() + i * n);
    }
    return x;
}

void save_model(const std::filesystem::path& path, const Model& model, const TrainPreset& preset) {
    Container c;
    c.header["kind"] = "model";
    c.header["spec"] = model.spec().to_json();
    c.header["preset"] = to_json(preset);
    c.header["layers"] = model.describe();
    const auto params = model.parameters();
    const auto& names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& v = params[i]->value;
        c.blobs.push_back({names[i], v.shape, std::vector<double>(v.data.begin(), v.data.end())});
    }
    write_container(path, c);
}

LoadedModel load_model(const std::filesystem::path& path) {
    const auto c = read_container(path);
    if (c.header.value("kind", "") != "model") throw std::runtime_error(path.string() + " is not a model checkpoint");
    LoadedModel out{Model(ModelSpec::from_json(c.header.at("spec")), 0), preset_from_json(c.header.at("preset"))};
    auto params = out.model.parameters();
    if (params.size() != c.blobs.size()) throw std::runtime_error(path.string() + ": parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (c.blobs[i].shape != params[i]->value.shape)
            throw ShapeError(path.string() + ": parameter " + c.blobs[i].name + " has the wrong shape");
        params[i]->value.data.assign(c.blobs[i].data.begin(), c.blobs[i].data.end());
    }
    return out;
}

}  // namespace proxsense::nn
