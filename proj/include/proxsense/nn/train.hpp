// train.hpp
// Mini-batch Adam training, inference, and history export.
#pragma once

#include "proxsense/metrics.hpp"
#include "proxsense/nn/model.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace proxsense::nn {

struct TrainOptions {
    // Beta(alpha, alpha) mix-up on flat training batches; other
    // representations ignore it. 0 disables mix-up.
    double mixup_alpha = 0.2;
    eval::ContactRule rule;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> eval_ndcf;  // absent without an eval set or when undefined
};

using History = std::vector<EpochRecord>;

struct TrainResult {
    Model model;
    History history;
};

// Shuffles each epoch with a seed derived from (seed, epoch). Cross-entropy on
// logits, or squared error on meters when spec.regression.
TrainResult train(const ModelSpec& spec, const TrainPreset& preset, const Dataset& train_set,
                  const Dataset* eval_set, std::uint64_t seed, const TrainOptions& opts = {});

// Continues training an existing model for `steps` full-batch updates on the
// given indices; returns the loss after each step.
std::vector<double> fit_batch(Model& model, const Dataset& data, std::span<const std::size_t> indices, int steps,
                              double learning_rate);

// Class probabilities [N, 4], or meters [N, 1] in regression mode.
Tensor predict(const Model& model, const Dataset& data, std::size_t batch_size = 256);
std::vector<DistanceClass> predict_classes(const Model& model, const Dataset& data, std::size_t batch_size = 256);

// epoch,train_loss,eval_ndcf
void write_history(const std::filesystem::path& path, const History& history);

}  // namespace proxsense::nn
