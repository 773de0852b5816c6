#include "proxsense/nn/train.hpp"

#include "proxsense/container.hpp"
#include "proxsense/features.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace proxsense::nn {

namespace {

// Targets for a batch: one-hot rows [B, 4] or meters [B].
struct Targets {
    Tensor onehot;
    std::vector<double> meters;
};

Targets batch_targets(const Dataset& data, std::span<const std::size_t> idx) {
    Targets t{Tensor({idx.size(), kNumClasses}), std::vector<double>(idx.size())};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto label = data.samples[idx[i]].label;
        t.onehot.data[i * kNumClasses + index_of(label)] = 1.0;
        t.meters[i] = meters_of(label);
    }
    return t;
}

// Pairs each row with a shuffled partner and mixes inputs and targets with
// one lambda per row.
void apply_mixup(Tensor& x, Targets& t, double alpha, Rng& rng) {
    const std::size_t b = x.dim(0);
    const std::size_t n = x.size() / b;
    std::vector<std::size_t> partner(b);
    std::iota(partner.begin(), partner.end(), 0);
    rng.shuffle(partner);
    const Tensor x0 = x;
    const Targets t0 = t;
    for (std::size_t i = 0; i < b; ++i) {
        const double lam = rng.beta(alpha, alpha);
        const std::size_t j = partner[i];
        const auto mixed = features::mixup({x0.raw() + i * n, n}, DistanceClass::M1_2, {x0.raw() + j * n, n},
                                           DistanceClass::M1_2, lam);
        std::copy(mixed.x.begin(), mixed.x.end(), x.raw() + i * n);
        for (std::size_t c = 0; c < kNumClasses; ++c)
            t.onehot.data[i * kNumClasses + c] =
                lam * t0.onehot.data[i * kNumClasses + c] + (1.0 - lam) * t0.onehot.data[j * kNumClasses + c];
        t.meters[i] = lam * t0.meters[i] + (1.0 - lam) * t0.meters[j];
    }
}

double step(Model& model, const Tensor& x, const Targets& t, AdamState& adam, double lr) {
    Model::Tape tape;
    const Tensor out = model.forward(x, &tape);
    const LossResult loss =
        model.spec().regression ? mse_loss(out, t.meters) : softmax_cross_entropy(out, t.onehot);
    model.zero_grad();
    model.backward(tape, loss.grad);
    auto params = model.parameters();
    adam_step(params, adam, lr);
    return loss.loss;
}

void check_compatible(const ModelSpec& spec, const Dataset& d, const char* role) {
    const bool ts = d.representation == Representation::TimeSeries;
    if (ts != spec.takes_time_series())
        throw ConfigError(std::string(role) + " set is " + std::string(to_string(d.representation)) + ", " +
                          std::string(to_string(spec.kind)) + " needs " +
                          (spec.takes_time_series() ? "timeseries" : "flat or histogram"));
    const std::size_t want = spec.takes_time_series() ? spec.steps * spec.width : spec.width;
    if (d.feature_count() != want)
        throw ShapeError(std::string(role) + " set has " + std::to_string(d.feature_count()) +
                         " features per sample, model expects " + std::to_string(want));
}

}  // namespace

TrainResult train(const ModelSpec& spec, const TrainPreset& preset, const Dataset& train_set,
                  const Dataset* eval_set, std::uint64_t seed, const TrainOptions& opts) {
    preset.validate();
    opts.rule.validate();
    if (opts.mixup_alpha < 0.0) throw ConfigError("mixup alpha must be >= 0");
    check_compatible(spec, train_set, "train");
    if (eval_set) check_compatible(spec, *eval_set, "eval");
    if (train_set.size() == 0) throw std::invalid_argument("train: empty train set");

    TrainResult result{Model(spec, seed), {}};
    if (preset.epochs == 0) return result;

    const auto eval_truth = eval_set ? eval_set->labels() : std::vector<DistanceClass>{};
    const bool score_eval = eval_set && eval_set->size() > 0 && eval::ndcf_defined(eval_truth, opts.rule);

    AdamState adam;
    std::vector<std::size_t> order(train_set.size());
    const bool mix = opts.mixup_alpha > 0.0 && train_set.representation == Representation::Flat;
    const auto batch = static_cast<std::size_t>(preset.batch_size);
    for (int epoch = 0; epoch < preset.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng(derive_seed(derive_seed(seed, "epoch"), static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
            Tensor x = batch_input(train_set, idx);
            Targets t = batch_targets(train_set, idx);
            if (mix) apply_mixup(x, t, opts.mixup_alpha, rng);
            loss_sum += step(result.model, x, t, adam, preset.learning_rate) * static_cast<double>(idx.size());
        }

        EpochRecord rec{epoch + 1, loss_sum / static_cast<double>(order.size()), std::nullopt};
        if (score_eval) rec.eval_ndcf = eval::ndcf(predict_classes(result.model, *eval_set), eval_truth, opts.rule).ndcf;
        result.history.push_back(rec);
    }
    return result;
}

std::vector<double> fit_batch(Model& model, const Dataset& data, std::span<const std::size_t> indices, int steps,
                              double learning_rate) {
    check_compatible(model.spec(), data, "batch");
    const Tensor x = batch_input(data, indices);
    const Targets t = batch_targets(data, indices);
    AdamState adam;
    std::vector<double> losses;
    losses.reserve(static_cast<std::size_t>(std::max(steps, 0)));
    for (int i = 0; i < steps; ++i) losses.push_back(step(model, x, t, adam, learning_rate));
    return losses;
}

Tensor predict(const Model& model, const Dataset& data, std::size_t batch_size) {
    check_compatible(model.spec(), data, "input");
    if (batch_size == 0) throw std::invalid_argument("predict: batch size must be positive");
    const std::size_t width = model.spec().outputs();
    Tensor out({data.size(), width});
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        idx.resize(std::min(batch_size, data.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        Tensor y = model.forward(batch_input(data, idx));
        if (!model.spec().regression) y = softmax(y);
        std::copy(y.data.begin(), y.data.end(), out.raw() + start * width);
    }
    return out;
}

std::vector<DistanceClass> predict_classes(const Model& model, const Dataset& data, std::size_t batch_size) {
    const Tensor p = predict(model, data, batch_size);
    std::vector<DistanceClass> out(data.size());
    if (model.spec().regression) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = class_from_meters(p.data[i]);
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double* row = p.raw() + i * kNumClasses;
        out[i] = class_from_index(static_cast<std::size_t>(std::max_element(row, row + kNumClasses) - row));
    }
    return out;
}

void write_history(const std::filesystem::path& path, const History& history) {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,train_loss,eval_ndcf\n";
    for (const auto& r : history) {
        os << r.epoch << ',' << r.train_loss << ',';
        if (r.eval_ndcf) os << *r.eval_ndcf;
        os << '\n';
    }
    write_text_atomic(path, os.str());
}

}  // namespace proxsense::nn
