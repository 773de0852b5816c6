#include "proxsense/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace proxsense::eval {

void ContactRule::validate() const {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) throw ConfigError("contact threshold must be positive");
    if (!(w_fn > 0.0) || !(w_fp > 0.0)) throw ConfigError("cost weights must be positive");
}

Contact binarize(DistanceClass c, const ContactRule& rule) {
    return meters_of(c) <= rule.threshold ? Contact::Yes : Contact::No;
}

bool ndcf_defined(std::span<const DistanceClass> truths, const ContactRule& rule) {
    bool pos = false, neg = false;
    for (auto t : truths) (binarize(t, rule) == Contact::Yes ? pos : neg) = true;
    return pos && neg;
}

NdcfResult ndcf(std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths,
                const ContactRule& rule) {
    rule.validate();
    if (predictions.size() != truths.size())
        throw std::invalid_argument("ndcf: " + std::to_string(predictions.size()) + " predictions vs " +
                                    std::to_string(truths.size()) + " truths");
    NdcfResult r;
    r.w_fn = rule.w_fn;
    r.w_fp = rule.w_fp;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool truth = binarize(truths[i], rule) == Contact::Yes;
        const bool pred = binarize(predictions[i], rule) == Contact::Yes;
        if (truth) (pred ? r.counts.tp : r.counts.fn)++;
        else (pred ? r.counts.fp : r.counts.tn)++;
    }
    const auto positives = r.counts.tp + r.counts.fn;
    const auto negatives = r.counts.fp + r.counts.tn;
    if (positives == 0) throw std::invalid_argument("ndcf: no true contacts, miss probability undefined");
    if (negatives == 0) throw std::invalid_argument("ndcf: no true non-contacts, false-alarm probability undefined");
    r.p_fn = static_cast<double>(r.counts.fn) / static_cast<double>(positives);
    r.p_fp = static_cast<double>(r.counts.fp) / static_cast<double>(negatives);
    r.ndcf = (rule.w_fn * r.p_fn + rule.w_fp * r.p_fp) / std::min(rule.w_fn, rule.w_fp);
    return r;
}

double accuracy(std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths) {
    if (predictions.size() != truths.size()) throw std::invalid_argument("accuracy: length mismatch");
    if (truths.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) hit += predictions[i] == truths[i];
    return static_cast<double>(hit) / static_cast<double>(truths.size());
}

}  // namespace proxsense::eval
