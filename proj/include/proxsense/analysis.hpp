// analysis.hpp
// Cross-dataset diagnostics: PCA projection, nearest-neighbour l2 gap and
// nearest-neighbour training subsets.
#pragma once

#include "proxsense/core_types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace proxsense::analysis {

struct PcaModel {
    std::vector<double> mean;                     // D
    std::vector<std::vector<double>> components;  // k rows of length D, orthonormal
    std::vector<double> eigenvalues;              // k, descending, >= 0
    double total_variance = 0.0;                  // trace of the covariance

    std::size_t dim() const { return mean.size(); }
    std::size_t k() const { return components.size(); }
};

// Eigendecomposition of the sample covariance (divisor n - 1). When D exceeds
// the sample count the n x n Gram matrix is decomposed instead, which has the
// same nonzero spectrum. Each component's largest-magnitude entry is positive.
// Throws std::invalid_argument when k == 0, k > D, or fewer than k + 1 rows.
PcaModel pca_fit(std::span<const std::vector<double>> rows, std::size_t k);
PcaModel pca_fit(const Dataset& data, std::size_t k);
std::vector<double> pca_project(const PcaModel& model, std::span<const double> x);

struct NnGapReport {
    double mean_l2 = 0.0;             // over every sample of b and its nearest sample of a
    double mismatched_mean_l2 = 0.0;  // over the pairs whose labels differ; 0 when none
    double mismatch_fraction = 0.0;
    std::size_t pairs = 0;
    std::size_t mismatched = 0;
};

// For each sample of b, the l2-nearest sample of a (ties to the lowest index).
// Throws ShapeError on unequal widths, std::invalid_argument when empty.
std::vector<std::size_t> nearest_in(const Dataset& a, const Dataset& b);
NnGapReport nn_gap(const Dataset& a, const Dataset& b);
std::string format_nn_gap(const NnGapReport& r);

// Union over b of the m nearest samples of a, deduplicated, in a's order.
std::vector<std::size_t> optimal_subset_indices(const Dataset& a, const Dataset& b, std::size_t m = 2);
Dataset optimal_subset(const Dataset& a, const Dataset& b, std::size_t m = 2);

struct ScatterPoint {
    double x = 0.0;
    double y = 0.0;
    DistanceClass label = DistanceClass::M1_2;
};

// SVG scatter coloured by class (axes PC1, PC2) plus a pc1,pc2,label table.
// Throws std::invalid_argument on empty input without writing anything.
void emit_scatter(std::span<const ScatterPoint> points, const std::filesystem::path& svg_path,
                  const std::filesystem::path& csv_path, const std::string& title);
std::string render_scatter_svg(std::span<const ScatterPoint> points, const std::string& title);

}  // namespace proxsense::analysis
