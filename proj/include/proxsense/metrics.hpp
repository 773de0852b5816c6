// metrics.hpp
// Contact binarization and the normalized decision cost function.
#pragma once

#include "proxsense/core_types.hpp"

#include <span>

namespace proxsense::eval {

struct ContactRule {
    double threshold = 1.8;  // meters, inclusive
    double w_fn = 1.0;
    double w_fp = 1.0;

    void validate() const;
};

enum class Contact : bool { No = false, Yes = true };

Contact binarize(DistanceClass c, const ContactRule& rule = {});

// P_fn = fn / (fn + tp), P_fp = fp / (fp + tn),
// ndcf = (w_fn * P_fn + w_fp * P_fp) / min(w_fn, w_fp).
// Throws std::invalid_argument for unequal lengths or when the truths contain
// no contact or no non-contact.
NdcfResult ndcf(std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths,
                const ContactRule& rule = {});

// True when both binary truth classes are present, i.e. ndcf is defined.
bool ndcf_defined(std::span<const DistanceClass> truths, const ContactRule& rule = {});

double accuracy(std::span<const DistanceClass> predictions, std::span<const DistanceClass> truths);

}  // namespace proxsense::eval
