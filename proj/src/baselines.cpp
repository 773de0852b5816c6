#include "proxsense/baselines.hpp"

#include "proxsense/container.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace proxsense::baselines {

namespace {

void check_width(std::size_t expected, std::span<const double> x) {
    if (x.size() != expected)
        throw ShapeError("input has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(expected));
}

std::size_t dataset_width(const Dataset& d) {
    if (d.size() == 0) throw std::invalid_argument("empty training set");
    const std::size_t w = d.samples.front().x.size();
    for (const auto& s : d.samples)
        if (s.x.size() != w) throw ShapeError("samples of unequal length in training set");
    return w;
}

}  // namespace

// --- Gaussian naive Bayes ---

GnbModel gnb_fit(const Dataset& train) {
    GnbModel m;
    m.width = dataset_width(train);
    std::array<std::size_t, kNumClasses> count{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        m.mean[c].assign(m.width, 0.0);
        m.var[c].assign(m.width, 0.0);
    }
    for (const auto& s : train.samples) {
        const auto c = index_of(s.label);
        ++count[c];
        for (std::size_t j = 0; j < m.width; ++j) m.mean[c][j] += s.x[j];
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (count[c] == 0)
            throw std::invalid_argument("gnb_fit: class " + std::string(to_string(kAllClasses[c])) +
                                        " has no training sample");
        for (auto& v : m.mean[c]) v /= static_cast<double>(count[c]);
    }
    for (const auto& s : train.samples) {
        const auto c = index_of(s.label);
        for (std::size_t j = 0; j < m.width; ++j) {
            const double d = s.x[j] - m.mean[c][j];
            m.var[c][j] += d * d;
        }
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        for (auto& v : m.var[c]) v = std::max(v / static_cast<double>(count[c]), kGnbVarianceFloor);
        m.prior[c] = static_cast<double>(count[c]) / static_cast<double>(train.size());
    }
    return m;
}

Distribution gnb_log_joint(const GnbModel& model, std::span<const double> x) {
    check_width(model.width, x);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    Distribution out{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double s = std::log(model.prior[c]);
        for (std::size_t j = 0; j < model.width; ++j) {
            const double d = x[j] - model.mean[c][j];
            s -= 0.5 * (log2pi + std::log(model.var[c][j]) + d * d / model.var[c][j]);
        }
        out[c] = s;
    }
    return out;
}

Distribution gnb_predict(const GnbModel& model, std::span<const double> x) {
    Distribution lj = gnb_log_joint(model, x);
    const double mx = *std::max_element(lj.begin(), lj.end());
    double z = 0.0;
    for (auto& v : lj) z += (v = std::exp(v - mx));
    for (auto& v : lj) v /= z;
    return lj;
}

// --- CART ---

void ForestParams::validate() const {
    if (n_trees == 0) throw ConfigError("forest needs at least one tree");
    if (max_depth == 0) throw ConfigError("max_depth must be positive");
    if (min_leaf == 0) throw ConfigError("min_leaf must be positive");
    if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) throw ConfigError("subset fraction must be in (0, 1]");
}

const TreeNode& Tree::leaf_for(std::span<const double> x) const {
    const TreeNode* n = &nodes.at(0);
    while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
    return *n;
}

std::size_t Tree::depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.feature >= 0) {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }
    return best;
}

namespace {

// Summed impurity of a node: n * gini, or the sum of squared deviations.
struct Stats {
    std::array<double, kNumClasses> count{};
    double n = 0.0, sum = 0.0, sumsq = 0.0;

    void add(DistanceClass c) {
        count[index_of(c)] += 1.0;
        const double y = meters_of(c);
        n += 1.0;
        sum += y;
        sumsq += y * y;
    }
    void remove(DistanceClass c) {
        count[index_of(c)] -= 1.0;
        const double y = meters_of(c);
        n -= 1.0;
        sum -= y;
        sumsq -= y * y;
    }
    double impurity(ForestMode mode) const {
        if (n == 0.0) return 0.0;
        if (mode == ForestMode::Regress) return std::max(0.0, sumsq - sum * sum / n);
        double sq = 0.0;
        for (double c : count) sq += c * c;
        return n - sq / n;
    }
};

// Gains within this relative distance are ties; incremental impurity sums
// carry rounding that must not decide between equal splits.
constexpr double kGainTie = 1e-9;

bool same_gain(double a, double b) { return std::abs(a - b) <= kGainTie * std::max({1.0, std::abs(a), std::abs(b)}); }

bool better(const SplitChoice& cand, const SplitChoice& best) {
    if (!best.found) return true;
    if (!same_gain(cand.gain, best.gain)) return cand.gain > best.gain;
    if (cand.feature != best.feature) return cand.feature < best.feature;
    return cand.threshold < best.threshold;
}

}  // namespace

SplitChoice best_split(const Dataset& data, std::span<const std::size_t> rows, std::span<const std::size_t> features,
                       ForestMode mode, std::size_t min_leaf) {
    SplitChoice best;
    if (rows.size() < 2 * std::max<std::size_t>(min_leaf, 1)) return best;
    Stats parent;
    for (auto r : rows) parent.add(data.samples[r].label);
    const double parent_imp = parent.impurity(mode);
    if (parent_imp <= 0.0) return best;

    std::vector<std::pair<double, std::size_t>> sorted(rows.size());
    for (auto f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) sorted[i] = {data.samples[rows[i]].x[f], rows[i]};
        std::sort(sorted.begin(), sorted.end());
        Stats left, right = parent;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            const auto label = data.samples[sorted[i].second].label;
            left.add(label);
            right.remove(label);
            const double a = sorted[i].first, b = sorted[i + 1].first;
            if (!(a < b)) continue;
            const std::size_t nl = i + 1, nr = sorted.size() - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double gain = parent_imp - left.impurity(mode) - right.impurity(mode);
            if (!(gain > 0.0) || same_gain(gain, 0.0)) continue;
            // Midpoint, kept strictly below b so b falls on the right.
            double mid = (a + b) / 2.0;
            if (!(mid < b)) mid = a;
            SplitChoice cand{true, f, mid, gain};
            if (better(cand, best)) best = cand;
        }
    }
    return best;
}

Tree fit_tree(const Dataset& data, std::span<const std::size_t> rows, const ForestParams& params, Rng& rng) {
    params.validate();
    if (rows.empty()) throw std::invalid_argument("fit_tree: no rows");
    const std::size_t width = data.samples[rows[0]].x.size();
    std::size_t k = params.max_features == 0
                        ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width))))
                        : params.max_features;
    k = std::clamp<std::size_t>(k, 1, width);

    std::vector<std::size_t> pool(width);
    Tree tree;
    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        std::size_t depth;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, {rows.begin(), rows.end()}, 0});
    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();
        Stats st;
        for (auto r : p.rows) st.add(data.samples[r].label);
        {
            auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
            for (std::size_t c = 0; c < kNumClasses; ++c) node.dist[c] = st.count[c] / st.n;
            node.mean = st.sum / st.n;
        }
        if (p.depth >= params.max_depth) continue;

        std::iota(pool.begin(), pool.end(), 0);
        std::span<const std::size_t> candidates(pool);
        if (k < width) {
            for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(width - i)]);
            candidates = candidates.first(k);
        }
        const SplitChoice s = best_split(data, p.rows, candidates, params.mode, params.min_leaf);
        if (!s.found) continue;

        std::vector<std::size_t> lrows, rrows;
        for (auto r : p.rows) (data.samples[r].x[s.feature] <= s.threshold ? lrows : rrows).push_back(r);
        const int l = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
        node.feature = static_cast<int>(s.feature);
        node.threshold = s.threshold;
        node.left = l;
        node.right = l + 1;
        stack.push_back({l + 1, std::move(rrows), p.depth + 1});
        stack.push_back({l, std::move(lrows), p.depth + 1});
    }
    return tree;
}

ForestModel forest_fit(const Dataset& train, const ForestParams& params, std::uint64_t seed) {
    params.validate();
    ForestModel model{params, dataset_width(train), std::vector<Tree>(params.n_trees)};
    const std::size_t n = train.size();
    const std::size_t m =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subset_fraction * static_cast<double>(n))));

    auto grow = [&](std::size_t t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        if (m < n) {
            for (std::size_t i = 0; i < m; ++i) std::swap(all[i], all[i + rng.below(n - i)]);
            all.resize(m);
        }
        std::vector<std::size_t> rows = all;
        if (params.bootstrap)
            for (auto& r : rows) r = all[rng.below(all.size())];
        model.trees[t] = fit_tree(train, rows, params, rng);
    };

    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min<std::size_t>(params.n_trees, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t t; (t = next++) < params.n_trees;) grow(t);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return model;
}

Distribution forest_predict_proba(const ForestModel& model, std::span<const double> x) {
    check_width(model.width, x);
    Distribution out{};
    for (const auto& t : model.trees) {
        const auto& leaf = t.leaf_for(x);
        for (std::size_t c = 0; c < kNumClasses; ++c) out[c] += leaf.dist[c];
    }
    for (auto& v : out) v /= static_cast<double>(model.trees.size());
    return out;
}

double forest_predict_meters(const ForestModel& model, std::span<const double> x) {
    check_width(model.width, x);
    double s = 0.0;
    for (const auto& t : model.trees) s += t.leaf_for(x).mean;
    return s / static_cast<double>(model.trees.size());
}

DistanceClass forest_predict(const ForestModel& model, std::span<const double> x) {
    if (model.params.mode == ForestMode::Regress) return class_from_meters(forest_predict_meters(model, x));
    const auto p = forest_predict_proba(model, x);
    return class_from_index(static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin()));
}

// --- persistence ---

namespace {

Container baseline_container(const std::string& type) {
    Container c;
    c.header["kind"] = "baseline";
    c.header["type"] = type;
    return c;
}

Container read_baseline(const std::filesystem::path& path, const std::string& type) {
    auto c = read_container(path);
    if (c.header.value("kind", "") != "baseline" || c.header.value("type", "") != type)
        throw std::runtime_error(path.string() + " is not a " + type + " checkpoint");
    return c;
}

constexpr std::size_t kNodeFields = 5 + kNumClasses;

}  // namespace

void save_gnb(const std::filesystem::path& path, const GnbModel& m) {
    auto c = baseline_container("gnb");
    c.header["width"] = m.width;
    c.blobs.push_back({"prior", {kNumClasses}, {m.prior.begin(), m.prior.end()}});
    std::vector<double> mean, var;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        mean.insert(mean.end(), m.mean[k].begin(), m.mean[k].end());
        var.insert(var.end(), m.var[k].begin(), m.var[k].end());
    }
    c.blobs.push_back({"mean", {kNumClasses, m.width}, std::move(mean)});
    c.blobs.push_back({"var", {kNumClasses, m.width}, std::move(var)});
    write_container(path, c);
}

GnbModel load_gnb(const std::filesystem::path& path) {
    const auto c = read_baseline(path, "gnb");
    GnbModel m;
    m.width = c.header.at("width").get<std::size_t>();
    const auto& prior = c.blob("prior").data;
    const auto& mean = c.blob("mean").data;
    const auto& var = c.blob("var").data;
    if (prior.size() != kNumClasses || mean.size() != kNumClasses * m.width || var.size() != mean.size())
        throw ShapeError(path.string() + ": gnb blobs have the wrong size");
    for (std::size_t k = 0; k < kNumClasses; ++k) {
        m.prior[k] = prior[k];
        m.mean[k].assign(mean.begin() + static_cast<std::ptrdiff_t>(k * m.width),
                         mean.begin() + static_cast<std::ptrdiff_t>((k + 1) * m.width));
        m.var[k].assign(var.begin() + static_cast<std::ptrdiff_t>(k * m.width),
                        var.begin() + static_cast<std::ptrdiff_t>((k + 1) * m.width));
    }
    return m;
}

void save_forest(const std::filesystem::path& path, const ForestModel& m, const std::string& label) {
    auto c = baseline_container("forest");
    if (!label.empty()) c.header["learner"] = label;
    const auto& p = m.params;
    c.header["width"] = m.width;
    c.header["params"] = {{"mode", p.mode == ForestMode::Classify ? "classify" : "regress"},
                          {"n_trees", p.n_trees},
                          {"max_depth", p.max_depth},
                          {"min_leaf", p.min_leaf},
                          {"max_features", p.max_features},
                          {"bootstrap", p.bootstrap},
                          {"subset_fraction", p.subset_fraction}};
    std::vector<std::size_t> sizes;
    std::vector<double> nodes;
    for (const auto& t : m.trees) {
        sizes.push_back(t.nodes.size());
        for (const auto& n : t.nodes) {
            nodes.insert(nodes.end(), {static_cast<double>(n.feature), n.threshold, static_cast<double>(n.left),
                                       static_cast<double>(n.right), n.mean});
            nodes.insert(nodes.end(), n.dist.begin(), n.dist.end());
        }
    }
    c.header["tree_sizes"] = sizes;
    c.blobs.push_back({"nodes", {nodes.size() / kNodeFields, kNodeFields}, std::move(nodes)});
    write_container(path, c);
}

ForestModel load_forest(const std::filesystem::path& path) {
    const auto c = read_baseline(path, "forest");
    ForestModel m;
    m.width = c.header.at("width").get<std::size_t>();
    const auto& j = c.header.at("params");
    m.params.mode = j.at("mode").get<std::string>() == "regress" ? ForestMode::Regress : ForestMode::Classify;
    m.params.n_trees = j.at("n_trees").get<std::size_t>();
    m.params.max_depth = j.at("max_depth").get<std::size_t>();
    m.params.min_leaf = j.at("min_leaf").get<std::size_t>();
    m.params.max_features = j.at("max_features").get<std::size_t>();
    m.params.bootstrap = j.at("bootstrap").get<bool>();
    m.params.subset_fraction = j.at("subset_fraction").get<double>();
    const auto& nodes = c.blob("nodes").data;
    std::size_t at = 0;
    for (auto size : c.header.at("tree_sizes").get<std::vector<std::size_t>>()) {
        Tree t;
        for (std::size_t i = 0; i < size; ++i, at += kNodeFields) {
            if (at + kNodeFields > nodes.size()) throw ShapeError(path.string() + ": truncated node table");
            TreeNode n;
            n.feature = static_cast<int>(nodes[at]);
            n.threshold = nodes[at + 1];
            n.left = static_cast<int>(nodes[at + 2]);
            n.right = static_cast<int>(nodes[at + 3]);
            n.mean = nodes[at + 4];
            std::copy_n(nodes.begin() + static_cast<std::ptrdiff_t>(at + 5), kNumClasses, n.dist.begin());
            t.nodes.push_back(n);
        }
        m.trees.push_back(std::move(t));
    }
    return m;
}

}  // namespace proxsense::baselines
