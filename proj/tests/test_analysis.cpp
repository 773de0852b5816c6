// PCA, nearest-neighbour gap, nearest-neighbour subsets and the scatter plot.
#include "proxsense/analysis.hpp"
#include "proxsense/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace proxsense;
using namespace proxsense::analysis;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> random_rows(Rng& rng, std::size_t n, std::size_t d) {
    // Anisotropic so the spectrum has no repeated eigenvalues.
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows)
        for (std::size_t j = 0; j < d; ++j) r[j] = rng.normal(0.3 * static_cast<double>(j), 1.0 + static_cast<double>(j));
    for (auto& r : rows)
        for (std::size_t j = 1; j < d; ++j) r[j] += 0.5 * r[j - 1];
    return rows;
}

Dataset flat(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& labels) {
    Dataset d;
    d.representation = Representation::Flat;
    d.steps = 1;
    d.width = x[0].size();
    for (std::size_t i = 0; i < x.size(); ++i) d.samples.push_back({x[i], class_from_index(labels[i]), "mitre"});
    return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("PCA of points on the line y = x") {
    std::vector<std::vector<double>> rows{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
    const auto m = pca_fit(rows, 2);
    CHECK(m.components[0][0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(m.components[0][1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(m.eigenvalues[0] == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
    CHECK(std::abs(m.eigenvalues[1]) <= 1e-12);
    CHECK(m.total_variance == doctest::Approx(10.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("PCA eigenvalues match a Jacobi eigendecomposition") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const std::size_t d = 2 + rng.below(6), n = d + 2 + rng.below(20);
        const auto rows = random_rows(rng, n, d);
        const auto m = pca_fit(rows, d);
        const auto want = oracle::jacobi_eigen(oracle::covariance(rows));
        double trace = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(std::abs(m.eigenvalues[i] - want.values[i]) <= 1e-8);
            // Components agree up to sign.
            CHECK(std::abs(std::abs(dot(m.components[i], want.vectors[i])) - 1.0) <= 1e-6);
            trace += want.values[i];
        }
        CHECK(m.total_variance == doctest::Approx(trace).epsilon(1e-10));
    }
}

TEST_CASE("PCA through the Gram matrix when width exceeds the sample count") {
    Rng rng(21);
    const std::size_t d = 30, n = 8;
    const auto rows = random_rows(rng, n, d);
    const auto m = pca_fit(rows, 5);
    const auto want = oracle::jacobi_eigen(oracle::covariance(rows));
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(std::abs(m.eigenvalues[i] - want.values[i]) <= 1e-8);
        CHECK(std::abs(std::abs(dot(m.components[i], want.vectors[i])) - 1.0) <= 1e-6);
    }
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            CHECK(std::abs(dot(m.components[i], m.components[j]) - (i == j ? 1.0 : 0.0)) <= 1e-9);
}

TEST_CASE("PCA invariants") {
    Rng rng(5);
    const std::size_t d = 6;
    const auto rows = random_rows(rng, 40, d);
    const auto m = pca_fit(rows, d);
    for (double v : pca_project(m, m.mean)) CHECK(std::abs(v) <= 1e-12);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            CHECK(std::abs(dot(m.components[i], m.components[j]) - (i == j ? 1.0 : 0.0)) <= 1e-9);
        if (i > 0) CHECK(m.eigenvalues[i] <= m.eigenvalues[i - 1]);
        CHECK(m.eigenvalues[i] >= 0.0);
        const auto big = std::max_element(m.components[i].begin(), m.components[i].end(),
                                          [](double a, double b) { return std::abs(a) < std::abs(b); });
        CHECK(*big > 0.0);
    }
    // Full-rank projection reconstructs every row.
    for (const auto& r : rows) {
        const auto p = pca_project(m, r);
        for (std::size_t j = 0; j < d; ++j) {
            double back = m.mean[j];
            for (std::size_t i = 0; i < d; ++i) back += p[i] * m.components[i][j];
            CHECK(std::abs(back - r[j]) <= 1e-9);
        }
    }
    CHECK_THROWS_AS(pca_fit(rows, 0), std::invalid_argument);
    CHECK_THROWS_AS(pca_fit(rows, d + 1), std::invalid_argument);
    CHECK_THROWS_AS(pca_fit(std::vector<std::vector<double>>(rows.begin(), rows.begin() + 2), 2), std::invalid_argument);
}

TEST_CASE("nn_gap of a set against itself is zero") {
    Rng rng(7);
    const auto x = random_rows(rng, 12, 3);
    std::vector<std::size_t> labels(12);
    for (std::size_t i = 0; i < 12; ++i) labels[i] = i % kNumClasses;
    const auto d = flat(x, labels);
    const auto r = nn_gap(d, d);
    CHECK(r.mean_l2 == 0.0);
    CHECK(r.mismatched == 0);
    CHECK(r.mismatched_mean_l2 == 0.0);
    const auto near = nearest_in(d, d);
    for (std::size_t i = 0; i < near.size(); ++i) CHECK(near[i] == i);
}

TEST_CASE("nn_gap of a single pair") {
    const auto a = flat({{0.0, 0.0}}, {0}), b = flat({{3.0, 4.0}}, {2});
    const auto r = nn_gap(a, b);
    CHECK(r.mean_l2 == 5.0);
    CHECK(r.mismatched_mean_l2 == 5.0);
    CHECK(r.mismatch_fraction == 1.0);
    CHECK(r.pairs == 1);
    CHECK_THROWS_AS(nn_gap(a, flat({{1.0}}, {0})), ShapeError);
}

TEST_CASE("nn_gap matches all-pairs search on 50 x 50") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        const auto xa = random_rows(rng, 50, 10), xb = random_rows(rng, 50, 10);
        std::vector<std::size_t> la(50), lb(50);
        for (auto& l : la) l = rng.below(kNumClasses);
        for (auto& l : lb) l = rng.below(kNumClasses);
        const auto a = flat(xa, la), b = flat(xb, lb);
        const auto got = nn_gap(a, b);
        const auto want = oracle::all_pairs_gap(xa, la, xb, lb);
        CHECK(nearest_in(a, b) == want.nearest);
        CHECK(got.mean_l2 == doctest::Approx(want.mean).epsilon(1e-12));
        CHECK(got.mismatched_mean_l2 == doctest::Approx(want.mismatched_mean).epsilon(1e-12));
        CHECK(got.mismatch_fraction == want.fraction);
    }
}

TEST_CASE("nearest ties go to the lowest index") {
    const auto a = flat({{1.0}, {-1.0}, {1.0}}, {0, 1, 2}), b = flat({{0.0}}, {0});
    CHECK(nearest_in(a, b) == std::vector<std::size_t>{0});
}

TEST_CASE("optimal subset properties") {
    Rng rng(9);
    const auto xa = random_rows(rng, 30, 4), xb = random_rows(rng, 6, 4);
    std::vector<std::size_t> la(30), lb(6);
    for (auto& l : la) l = rng.below(kNumClasses);
    for (auto& l : lb) l = rng.below(kNumClasses);
    const auto a = flat(xa, la), b = flat(xb, lb);

    // Saturation: m at least |a| keeps everything.
    const auto all = optimal_subset_indices(a, b, 30);
    CHECK(all.size() == 30);
    // One query, one neighbour: the nearest sample.
    const auto one = flat({xb[0]}, {lb[0]});
    CHECK(optimal_subset_indices(a, one, 1) == nearest_in(a, one));
    for (std::size_t m : {1, 2, 3}) {
        const auto idx = optimal_subset_indices(a, b, m);
        CHECK(idx.size() <= std::min<std::size_t>(30, m * 6));
        CHECK(std::is_sorted(idx.begin(), idx.end()));
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        const auto s = optimal_subset(a, b, m);
        CHECK(s.size() == idx.size());
        CHECK(optimal_subset(s, b, m) == s);
    }
}

TEST_CASE("scatter colours every class and writes both files") {
    std::vector<ScatterPoint> pts;
    for (std::size_t i = 0; i < 12; ++i)
        pts.push_back({static_cast<double>(i), static_cast<double>(i % 5), class_from_index(i % kNumClasses)});
    const auto svg = render_scatter_svg(pts, "pca");
    std::set<std::string> colours;
    std::istringstream lines(svg);
    for (std::string line; std::getline(lines, line);) {
        if (line.find("r=\"3\"") == std::string::npos) continue;
        const auto at = line.find("fill=\"") + 6;
        colours.insert(line.substr(at, line.find('"', at) - at));
    }
    CHECK(colours.size() == 4);

    const auto dir = fs::temp_directory_path() / "proxsense_tests" / "analysis";
    fs::remove_all(dir);
    fs::create_directories(dir);
    emit_scatter(pts, dir / "s.svg", dir / "s.csv", "pca");
    const auto csv = slurp(dir / "s.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
    CHECK(csv.rfind("pc1,pc2,label\n", 0) == 0);

    CHECK_THROWS_AS(emit_scatter({}, dir / "e.svg", dir / "e.csv", "pca"), std::invalid_argument);
    CHECK_FALSE(fs::exists(dir / "e.svg"));
    CHECK_FALSE(fs::exists(dir / "e.csv"));
}
