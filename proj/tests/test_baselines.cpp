// Naive Bayes, CART split search and random forests.
#include "proxsense/baselines.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <numeric>

using namespace proxsense;
using namespace proxsense::baselines;
namespace fs = std::filesystem;

namespace {

Dataset flat(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& labels) {
    Dataset d;
    d.representation = Representation::Flat;
    d.steps = 1;
    d.width = x.empty() ? 0 : x[0].size();
    for (std::size_t i = 0; i < x.size(); ++i) d.samples.push_back({x[i], class_from_index(labels[i]), "mitre"});
    return d;
}

// Every class present, features from per-class Gaussians.
Dataset gaussian_blobs(Rng& rng, std::size_t n, std::size_t width, double spread,
                       std::vector<std::vector<double>>* x_out = nullptr, std::vector<std::size_t>* l_out = nullptr) {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % kNumClasses;
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) row[j] = rng.normal(static_cast<double>(c) * (j % 2 ? -0.5 : 0.7), spread);
        x.push_back(row);
        labels.push_back(c);
    }
    if (x_out) *x_out = x;
    if (l_out) *l_out = labels;
    return flat(x, labels);
}

std::vector<double> meters(const std::vector<std::size_t>& labels) {
    std::vector<double> m;
    for (auto l : labels) m.push_back(meters_of(class_from_index(l)));
    return m;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
    std::vector<std::size_t> r(n);
    std::iota(r.begin(), r.end(), 0);
    return r;
}

}  // namespace

TEST_CASE("naive Bayes posterior matches direct density products") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const std::size_t width = 1 + rng.below(5);
        std::vector<std::vector<double>> x;
        std::vector<std::size_t> labels;
        const auto train = gaussian_blobs(rng, 24 + rng.below(20), width, 1.0, &x, &labels);
        const auto model = gnb_fit(train);
        for (int q = 0; q < 5; ++q) {
            std::vector<double> query(width);
            for (auto& v : query) v = rng.normal(0.0, 1.5);
            const auto got = gnb_predict(model, query);
            const auto want = oracle::gnb_posterior(x, labels, query, kGnbVarianceFloor);
            double total = 0.0;
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                CHECK(std::abs(got[c] - want[c]) <= 1e-9);
                total += got[c];
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("naive Bayes on a separated one-dimensional toy") {
    // Class 0 around 0, the others far away.
    std::vector<std::vector<double>> x{{-0.1}, {0.0}, {0.1}, {10.0}, {10.1}, {20.0}, {20.1}, {30.0}, {30.1}};
    std::vector<std::size_t> labels{0, 0, 0, 1, 1, 2, 2, 3, 3};
    const auto model = gnb_fit(flat(x, labels));
    CHECK(gnb_predict(model, std::vector<double>{0.0})[0] > 0.99);
    CHECK(gnb_predict(model, std::vector<double>{20.05})[2] > 0.99);
}

TEST_CASE("naive Bayes is symmetric between mirrored classes") {
    // Classes 0 and 1 mirror each other about 0; 2 and 3 sit far away.
    std::vector<std::vector<double>> x{{-1.0}, {-2.0}, {1.0}, {2.0}, {100.0}, {101.0}, {200.0}, {201.0}};
    std::vector<std::size_t> labels{0, 0, 1, 1, 2, 2, 3, 3};
    const auto p = gnb_predict(gnb_fit(flat(x, labels)), std::vector<double>{0.0});
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("naive Bayes requires every class and survives constant features") {
    CHECK_THROWS_AS(gnb_fit(flat({{0.0}, {1.0}}, {0, 1})), std::invalid_argument);
    const auto model = gnb_fit(flat({{1.0, 0.0}, {1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}}, {0, 1, 2, 3}));
    const auto p = gnb_predict(model, std::vector<double>{1.0, 2.0});
    for (double v : p) CHECK(std::isfinite(v));
    CHECK(p[2] > 0.99);
}

TEST_CASE("best split matches exhaustive search") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        Rng rng(seed);
        const std::size_t n = 4 + rng.below(47), width = 1 + rng.below(4);
        std::vector<std::vector<double>> x(n, std::vector<double>(width));
        std::vector<std::size_t> labels(n);
        // Values on a quarter grid keep midpoints exact.
        for (auto& row : x)
            for (auto& v : row) v = static_cast<double>(rng.below(12)) / 4.0;
        for (auto& l : labels) l = rng.below(kNumClasses);
        const auto data = flat(x, labels);
        const auto rows = iota_rows(n), features = iota_rows(width);
        for (const bool regress : {false, true}) {
            for (std::size_t min_leaf : {1, 2, 5}) {
                CAPTURE(seed);
                CAPTURE(regress);
                CAPTURE(min_leaf);
                const auto got = best_split(data, rows, features, regress ? ForestMode::Regress : ForestMode::Classify,
                                            min_leaf);
                const auto want = oracle::exhaustive_split(x, meters(labels), labels, regress, min_leaf);
                REQUIRE(got.found == want.found);
                if (!want.found) continue;
                CHECK(got.feature == want.feature);
                CHECK(got.threshold == want.threshold);
                CHECK(got.gain == doctest::Approx(want.gain).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("a depth-one tree reproduces the oracle threshold") {
    std::vector<std::vector<double>> x;
    std::vector<std::size_t> labels;
    for (int i = 0; i < 10; ++i) {
        x.push_back({static_cast<double>(i)});
        labels.push_back(i < 6 ? 0 : 3);
    }
    ForestParams p;
    p.n_trees = 1;
    p.max_depth = 1;
    p.min_leaf = 1;
    p.bootstrap = false;
    p.max_features = 1;
    const auto forest = forest_fit(flat(x, labels), p, 3);
    const auto want = oracle::exhaustive_split(x, meters(labels), labels, false, 1);
    REQUIRE(forest.trees.size() == 1);
    CHECK(forest.trees[0].nodes[0].feature == 0);
    CHECK(forest.trees[0].nodes[0].threshold == want.threshold);
    CHECK(want.threshold == 5.5);
}

TEST_CASE("pure labels give a single leaf") {
    Rng rng(4);
    std::vector<std::vector<double>> x(20, std::vector<double>(3));
    for (auto& r : x)
        for (auto& v : r) v = rng.normal();
    const auto data = flat(x, std::vector<std::size_t>(20, 2));
    ForestParams p;
    p.n_trees = 5;
    const auto forest = forest_fit(data, p, 1);
    for (const auto& t : forest.trees) CHECK(t.nodes.size() == 1);
    CHECK(forest_predict(forest, x[0]) == DistanceClass::M3_0);
    CHECK(forest_predict_proba(forest, x[0])[2] == 1.0);
}

TEST_CASE("regression forest stays inside the class range") {
    Rng rng(6);
    const auto train = gaussian_blobs(rng, 80, 4, 1.0);
    ForestParams p;
    p.mode = ForestMode::Regress;
    p.n_trees = 10;
    const auto forest = forest_fit(train, p, 2);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> q(4);
        for (auto& v : q) v = rng.normal(0.0, 5.0);
        const double m = forest_predict_meters(forest, q);
        CHECK(m >= 1.2);
        CHECK(m <= 4.5);
    }
}

TEST_CASE("one tree without bootstrap over all features is a plain CART tree") {
    Rng rng(8);
    const auto train = gaussian_blobs(rng, 60, 5, 1.0);
    for (const auto mode : {ForestMode::Classify, ForestMode::Regress}) {
        ForestParams p;
        p.mode = mode;
        p.n_trees = 1;
        p.bootstrap = false;
        p.max_features = 5;
        const auto forest = forest_fit(train, p, 9);
        Rng tree_rng(123);
        const auto rows = iota_rows(train.size());
        const auto tree = fit_tree(train, rows, p, tree_rng);
        REQUIRE(forest.trees[0].nodes.size() == tree.nodes.size());
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            CHECK(forest.trees[0].nodes[i].feature == tree.nodes[i].feature);
            CHECK(forest.trees[0].nodes[i].threshold == tree.nodes[i].threshold);
            CHECK(forest.trees[0].nodes[i].dist == tree.nodes[i].dist);
        }
    }
}

TEST_CASE("more trees never raise prediction variance") {
    Rng data_rng(10);
    const auto train = gaussian_blobs(data_rng, 120, 6, 1.5);
    const auto held = gaussian_blobs(data_rng, 40, 6, 1.5);
    auto variance_for = [&](std::size_t n_trees) {
        ForestParams p;
        p.mode = ForestMode::Regress;
        p.n_trees = n_trees;
        std::vector<std::vector<double>> preds;
        for (std::uint64_t r = 0; r < 20; ++r) {
            const auto forest = forest_fit(train, p, 1000 + r);
            std::vector<double> row;
            for (const auto& s : held.samples) row.push_back(forest_predict_meters(forest, s.x));
            preds.push_back(row);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < held.size(); ++j) {
            double m = 0.0, v = 0.0;
            for (const auto& row : preds) m += row[j] / 20.0;
            for (const auto& row : preds) v += (row[j] - m) * (row[j] - m) / 20.0;
            total += v;
        }
        return total / static_cast<double>(held.size());
    };
    const double v1 = variance_for(1), v5 = variance_for(5), v25 = variance_for(25);
    CHECK(v5 <= v1);
    CHECK(v25 <= v5);
}

TEST_CASE("forest fitting is deterministic for a seed") {
    Rng rng(12);
    const auto train = gaussian_blobs(rng, 50, 4, 1.0);
    ForestParams p;
    p.n_trees = 7;
    const auto a = forest_fit(train, p, 5), b = forest_fit(train, p, 5);
    for (const auto& s : train.samples) CHECK(forest_predict_proba(a, s.x) == forest_predict_proba(b, s.x));
}

TEST_CASE("parameter validation") {
    ForestParams p;
    p.n_trees = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.subset_fraction = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.min_leaf = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("baseline persistence round trip") {
    const auto dir = fs::temp_directory_path() / "proxsense_tests" / "baselines";
    fs::create_directories(dir);
    Rng rng(14);
    const auto train = gaussian_blobs(rng, 40, 3, 1.0);
    const auto gnb = gnb_fit(train);
    save_gnb(dir / "gnb.pxc", gnb);
    const auto gnb2 = load_gnb(dir / "gnb.pxc");
    ForestParams p;
    p.n_trees = 4;
    p.mode = ForestMode::Regress;
    const auto forest = forest_fit(train, p, 3);
    save_forest(dir / "rf.pxc", forest, "rf-regressor");
    const auto forest2 = load_forest(dir / "rf.pxc");
    CHECK(forest2.params.mode == ForestMode::Regress);
    CHECK(forest2.trees.size() == 4);
    for (const auto& s : train.samples) {
        CHECK(gnb_predict(gnb2, s.x) == gnb_predict(gnb, s.x));
        CHECK(forest_predict_meters(forest2, s.x) == forest_predict_meters(forest, s.x));
    }
    CHECK_THROWS(load_forest(dir / "gnb.pxc"));
}
