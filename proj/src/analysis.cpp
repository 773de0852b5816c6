#include "proxsense/analysis.hpp"

#include "proxsense/container.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace proxsense::analysis {

// --- PCA ---

PcaModel pca_fit(std::span<const std::vector<double>> rows, std::size_t k) {
    if (rows.empty()) throw std::invalid_argument("pca_fit: no samples");
    const std::size_t n = rows.size(), d = rows.front().size();
    if (k == 0) throw std::invalid_argument("pca_fit: k must be at least 1");
    if (k > d) throw std::invalid_argument("pca_fit: k = " + std::to_string(k) + " exceeds feature dim " + std::to_string(d));
    if (n < k + 1) throw std::invalid_argument("pca_fit: need at least k + 1 = " + std::to_string(k + 1) + " samples");

    Eigen::MatrixXd x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != d) throw ShapeError("pca_fit: rows of unequal length");
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const double denom = static_cast<double>(n - 1);

    PcaModel m;
    m.mean.assign(mean.data(), mean.data() + d);
    m.total_variance = x.squaredNorm() / denom;

    // Eigen returns ascending eigenvalues.
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    bool gram = d > n;
    if (gram) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((x * x.transpose()) / denom);
        vals = es.eigenvalues();
        const double floor = 1e-12 * std::max(vals(vals.size() - 1), 1e-300);
        if (vals(vals.size() - static_cast<Eigen::Index>(k)) <= floor) {
            gram = false;  // the requested components reach the null space
        } else {
            vecs = Eigen::MatrixXd(d, static_cast<Eigen::Index>(k));
            for (std::size_t c = 0; c < k; ++c) {
                const Eigen::Index src = vals.size() - 1 - static_cast<Eigen::Index>(c);
                Eigen::VectorXd v = x.transpose() * es.eigenvectors().col(src);
                vecs.col(static_cast<Eigen::Index>(c)) = v.normalized();
            }
            Eigen::VectorXd top(static_cast<Eigen::Index>(k));
            for (std::size_t c = 0; c < k; ++c) top(static_cast<Eigen::Index>(c)) = vals(vals.size() - 1 - static_cast<Eigen::Index>(c));
            vals = top;
        }
    }
    if (!gram) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((x.transpose() * x) / denom);
        vecs = Eigen::MatrixXd(d, static_cast<Eigen::Index>(k));
        Eigen::VectorXd top(static_cast<Eigen::Index>(k));
        for (std::size_t c = 0; c < k; ++c) {
            const Eigen::Index src = static_cast<Eigen::Index>(d - 1 - c);
            vecs.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(src);
            top(static_cast<Eigen::Index>(c)) = es.eigenvalues()(src);
        }
        vals = top;
    }

    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> comp(d);
        Eigen::Index arg = 0;
        vecs.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff(&arg);
        const double sign = vecs(arg, static_cast<Eigen::Index>(c)) < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < d; ++j) comp[j] = sign * vecs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c));
        m.components.push_back(std::move(comp));
        m.eigenvalues.push_back(std::max(0.0, vals(static_cast<Eigen::Index>(c))));
    }
    return m;
}

PcaModel pca_fit(const Dataset& data, std::size_t k) {
    std::vector<std::vector<double>> rows;
    rows.reserve(data.size());
    for (const auto& s : data.samples) rows.push_back(s.x);
    return pca_fit(rows, k);
}

std::vector<double> pca_project(const PcaModel& model, std::span<const double> x) {
    if (x.size() != model.dim())
        throw ShapeError("pca_project: input has " + std::to_string(x.size()) + " features, model has " +
                         std::to_string(model.dim()));
    std::vector<double> out(model.k(), 0.0);
    for (std::size_t c = 0; c < model.k(); ++c)
        for (std::size_t j = 0; j < x.size(); ++j) out[c] += model.components[c][j] * (x[j] - model.mean[j]);
    return out;
}

// --- nearest neighbours ---

namespace {

void check_pair(const Dataset& a, const Dataset& b) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("nearest-neighbour search needs non-empty sets");
    const std::size_t w = a.samples.front().x.size();
    for (const auto* d : {&a, &b})
        for (const auto& s : d->samples)
            if (s.x.size() != w)
                throw ShapeError("feature width mismatch: " + std::to_string(s.x.size()) + " vs " + std::to_string(w));
}

double sq_dist(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<std::size_t> nearest_in(const Dataset& a, const Dataset& b) {
    check_pair(a, b);
    std::vector<std::size_t> out(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = sq_dist(a.samples[i].x, b.samples[j].x);
            if (d < best) {
                best = d;
                out[j] = i;
            }
        }
    }
    return out;
}

NnGapReport nn_gap(const Dataset& a, const Dataset& b) {
    const auto nn = nearest_in(a, b);
    NnGapReport r;
    double sum = 0.0, mism_sum = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
        const double d = std::sqrt(sq_dist(a.samples[nn[j]].x, b.samples[j].x));
        sum += d;
        if (a.samples[nn[j]].label != b.samples[j].label) {
            ++r.mismatched;
            mism_sum += d;
        }
    }
    r.pairs = b.size();
    r.mean_l2 = sum / static_cast<double>(r.pairs);
    r.mismatched_mean_l2 = r.mismatched ? mism_sum / static_cast<double>(r.mismatched) : 0.0;
    r.mismatch_fraction = static_cast<double>(r.mismatched) / static_cast<double>(r.pairs);
    return r;
}

std::string format_nn_gap(const NnGapReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << "pairs " << r.pairs << "\nmismatched " << r.mismatched << "\nmean_l2 " << r.mean_l2
       << "\nmismatched_mean_l2 " << r.mismatched_mean_l2 << "\nmismatch_fraction " << r.mismatch_fraction << '\n';
    return os.str();
}

std::vector<std::size_t> optimal_subset_indices(const Dataset& a, const Dataset& b, std::size_t m) {
    check_pair(a, b);
    if (m == 0 || m > a.size())
        throw std::invalid_argument("optimal_subset: m must be in [1, " + std::to_string(a.size()) + "]");
    std::vector<bool> keep(a.size(), false);
    std::vector<std::pair<double, std::size_t>> dist(a.size());
    for (const auto& q : b.samples) {
        for (std::size_t i = 0; i < a.size(); ++i) dist[i] = {sq_dist(a.samples[i].x, q.x), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m), dist.end());
        for (std::size_t i = 0; i < m; ++i) keep[dist[i].second] = true;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

Dataset optimal_subset(const Dataset& a, const Dataset& b, std::size_t m) {
    Dataset out = a;
    out.samples.clear();
    for (auto i : optimal_subset_indices(a, b, m)) out.samples.push_back(a.samples[i]);
    return out;
}

// --- scatter ---

namespace {

constexpr std::array<const char*, kNumClasses> kClassColors = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string render_scatter_svg(std::span<const ScatterPoint> points, const std::string& title) {
    if (points.empty()) throw std::invalid_argument("emit_scatter: no points");
    constexpr double W = 640, H = 480, pad = 60;
    double x0 = points[0].x, x1 = x0, y0 = points[0].y, y1 = y0;
    for (const auto& p : points) {
        x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    }
    if (x1 - x0 < 1e-12) x0 -= 1, x1 += 1;
    if (y1 - y0 < 1e-12) y0 -= 1, y1 += 1;
    auto sx = [&](double v) { return pad + (v - x0) / (x1 - x0) * (W - 2 * pad); };
    auto sy = [&](double v) { return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape(title) << "</text>\n"
       << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
       << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"" << H - 20 << "\" text-anchor=\"middle\">PC1</text>\n"
       << "<text x=\"20\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << H / 2
       << ")\">PC2</text>\n";
    for (const auto& p : points)
        os << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y)) << "\" r=\"3\" fill=\""
           << kClassColors[index_of(p.label)] << "\" fill-opacity=\"0.7\"/>\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double y = pad + 18.0 * static_cast<double>(c);
        os << "<circle cx=\"" << W - pad + 10 << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << kClassColors[c] << "\"/>\n"
           << "<text x=\"" << W - pad + 20 << "\" y=\"" << y + 4 << "\" font-size=\"12\">" << to_string(kAllClasses[c])
           << " m</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_scatter(std::span<const ScatterPoint> points, const std::filesystem::path& svg_path,
                  const std::filesystem::path& csv_path, const std::string& title) {
    const std::string svg = render_scatter_svg(points, title);
    std::ostringstream csv;
    csv.precision(17);
    csv << "pc1,pc2,label\n";
    for (const auto& p : points) csv << p.x << ',' << p.y << ',' << to_string(p.label) << '\n';
    write_text_atomic(svg_path, svg);
    write_text_atomic(csv_path, csv.str());
}

}  // namespace proxsense::analysis
