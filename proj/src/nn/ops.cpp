#include "proxsense/nn/ops.hpp"

#include "proxsense/core_types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace proxsense::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::RowVectorXd>;

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)), data(element_count(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> values) : shape(std::move(s)), data(values.begin(), values.end()) {
    if (data.size() != element_count(shape))
        throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match shape " + shape_string());
}

std::string Tensor::shape_string() const {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? ", " : "") << shape[i];
    out << ']';
    return out.str();
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void Parameter::zero_grad() {
    if (grad.shape != value.shape) grad = Tensor(value.shape);
    else std::fill(grad.data.begin(), grad.data.end(), 0.0);
}

namespace {

[[noreturn]] void shape_fail(const char* op, const std::string& what) {
    throw ShapeError(std::string(op) + ": " + what);
}

void expect_rank(const char* op, const char* name, const Tensor& t, std::size_t rank) {
    if (t.rank() != rank)
        shape_fail(op, std::string(name) + " must have rank " + std::to_string(rank) + ", got " + t.shape_string());
}

ConstMatMap cmap(const Tensor& t, std::size_t rows, std::size_t cols) {
    return ConstMatMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MatMap mmap(Tensor& t, std::size_t rows, std::size_t cols) {
    return MatMap(t.raw(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

// --- linear ---

Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    expect_rank("linear", "x", x, 2);
    expect_rank("linear", "W", w, 2);
    expect_rank("linear", "b", b, 1);
    const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
    if (w.dim(0) != in)
        shape_fail("linear", "x is [" + std::to_string(batch) + ", " + std::to_string(in) + "] but W is " + w.shape_string());
    if (b.dim(0) != out) shape_fail("linear", "bias length " + std::to_string(b.dim(0)) + " != out " + std::to_string(out));
    Tensor y({batch, out});
    auto ym = mmap(y, batch, out);
    ym.noalias() = cmap(x, batch, in) * cmap(w, in, out);
    ym.rowwise() += ConstVecMap(b.raw(), static_cast<Eigen::Index>(out));
    return y;
}

LinearGrads linear_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, bool need_dx) {
    const std::size_t batch = x.dim(0), in = x.dim(1), out = w.dim(1);
    if (grad_out.shape != std::vector<std::size_t>{batch, out})
        shape_fail("linear_backward", "grad_out " + grad_out.shape_string() + " does not match output");
    LinearGrads g{Tensor(), Tensor({in, out}), Tensor({out})};
    const auto go = cmap(grad_out, batch, out);
    mmap(g.dw, in, out).noalias() = cmap(x, batch, in).transpose() * go;
    VecMap(g.db.raw(), static_cast<Eigen::Index>(out)) = go.colwise().sum();
    if (need_dx) {
        g.dx = Tensor({batch, in});
        mmap(g.dx, batch, in).noalias() = go * cmap(w, in, out).transpose();
    }
    return g;
}

// --- conv1d ---

namespace {

struct ConvDims {
    std::size_t batch, cin, len, cout, k, lout;
};

ConvDims conv_dims(const Tensor& x, const Tensor& kernel, std::size_t dilation) {
    expect_rank("conv1d", "x", x, 3);
    expect_rank("conv1d", "kernel", kernel, 3);
    if (dilation == 0) shape_fail("conv1d", "dilation must be >= 1");
    ConvDims d{x.dim(0), x.dim(1), x.dim(2), kernel.dim(0), kernel.dim(2), 0};
    if (kernel.dim(1) != d.cin)
        shape_fail("conv1d", "input has " + std::to_string(d.cin) + " channels but kernel is " + kernel.shape_string());
    const std::size_t span = (d.k - 1) * dilation + 1;
    if (d.len < span)
        shape_fail("conv1d", "input length " + std::to_string(d.len) + " shorter than minimum " + std::to_string(span) +
                                 " for kernel " + std::to_string(d.k) + " at dilation " + std::to_string(dilation));
    d.lout = d.len - (d.k - 1) * dilation;
    return d;
}

// cols[(c*k + j), t] = x[b, c, t + j*dilation]
void im2col(const double* xb, const ConvDims& d, std::size_t dilation, RowMat& cols) {
    cols.resize(static_cast<Eigen::Index>(d.cin * d.k), static_cast<Eigen::Index>(d.lout));
    for (std::size_t c = 0; c < d.cin; ++c)
        for (std::size_t j = 0; j < d.k; ++j) {
            const double* src = xb + c * d.len + j * dilation;
            std::copy(src, src + d.lout, cols.row(static_cast<Eigen::Index>(c * d.k + j)).data());
        }
}

}  // namespace

Tensor conv1d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t dilation) {
    const auto d = conv_dims(x, kernel, dilation);
    expect_rank("conv1d", "bias", bias, 1);
    if (bias.dim(0) != d.cout) shape_fail("conv1d", "bias length does not match output channels");
    Tensor y({d.batch, d.cout, d.lout});
    const auto kmat = cmap(kernel, d.cout, d.cin * d.k);
    const auto bvec = Eigen::Map<const Eigen::VectorXd>(bias.raw(), static_cast<Eigen::Index>(d.cout));
    RowMat cols;
    for (std::size_t b = 0; b < d.batch; ++b) {
        im2col(x.raw() + b * d.cin * d.len, d, dilation, cols);
        MatMap yb(y.raw() + b * d.cout * d.lout, static_cast<Eigen::Index>(d.cout), static_cast<Eigen::Index>(d.lout));
        yb.noalias() = kmat * cols;
        yb.colwise() += bvec;
    }
    return y;
}

Conv1dGrads conv1d_backward(const Tensor& x, const Tensor& kernel, std::size_t dilation, const Tensor& grad_out,
                            bool need_dx) {
    const auto d = conv_dims(x, kernel, dilation);
    if (grad_out.shape != std::vector<std::size_t>{d.batch, d.cout, d.lout})
        shape_fail("conv1d_backward", "grad_out " + grad_out.shape_string() + " does not match output");
    Conv1dGrads g{Tensor(), Tensor(kernel.shape), Tensor({d.cout})};
    if (need_dx) g.dx = Tensor(x.shape);
    const auto kmat = cmap(kernel, d.cout, d.cin * d.k);
    auto dk = mmap(g.dkernel, d.cout, d.cin * d.k);
    auto db = Eigen::Map<Eigen::VectorXd>(g.dbias.raw(), static_cast<Eigen::Index>(d.cout));
    RowMat cols, dcols;
    for (std::size_t b = 0; b < d.batch; ++b) {
        im2col(x.raw() + b * d.cin * d.len, d, dilation, cols);
        ConstMatMap gb(grad_out.raw() + b * d.cout * d.lout, static_cast<Eigen::Index>(d.cout),
                       static_cast<Eigen::Index>(d.lout));
        dk.noalias() += gb * cols.transpose();
        db += gb.rowwise().sum();
        if (!need_dx) continue;
        dcols.noalias() = kmat.transpose() * gb;
        double* dxb = g.dx.raw() + b * d.cin * d.len;
        for (std::size_t c = 0; c < d.cin; ++c)
            for (std::size_t j = 0; j < d.k; ++j) {
                const double* src = dcols.row(static_cast<Eigen::Index>(c * d.k + j)).data();
                double* dst = dxb + c * d.len + j * dilation;
                for (std::size_t t = 0; t < d.lout; ++t) dst[t] += src[t];
            }
    }
    return g;
}

// --- maxpool ---

MaxPoolResult maxpool1d(const Tensor& x) {
    expect_rank("maxpool1d", "x", x, 3);
    const std::size_t batch = x.dim(0), ch = x.dim(1), len = x.dim(2);
    if (len < 2) shape_fail("maxpool1d", "input length " + std::to_string(len) + " < 2");
    const std::size_t lout = len / 2;
    MaxPoolResult r{Tensor({batch, ch, lout}), std::vector<std::size_t>(batch * ch * lout)};
    for (std::size_t bc = 0; bc < batch * ch; ++bc) {
        const double* src = x.raw() + bc * len;
        for (std::size_t i = 0; i < lout; ++i) {
            const std::size_t a = 2 * i;
            const std::size_t pick = src[a] >= src[a + 1] ? a : a + 1;
            r.out.data[bc * lout + i] = src[pick];
            r.argmax[bc * lout + i] = pick;
        }
    }
    return r;
}

Tensor maxpool1d_backward(const Tensor& grad_out, std::span<const std::size_t> argmax, std::size_t input_length) {
    expect_rank("maxpool1d_backward", "grad_out", grad_out, 3);
    const std::size_t batch = grad_out.dim(0), ch = grad_out.dim(1), lout = grad_out.dim(2);
    if (argmax.size() != grad_out.size()) shape_fail("maxpool1d_backward", "argmax length mismatch");
    Tensor dx({batch, ch, input_length});
    for (std::size_t bc = 0; bc < batch * ch; ++bc)
        for (std::size_t i = 0; i < lout; ++i)
            dx.data[bc * input_length + argmax[bc * lout + i]] += grad_out.data[bc * lout + i];
    return dx;
}

// --- GRU ---

Tensor gru_step(const Tensor& x, const Tensor& h, const Tensor& w, const Tensor& u, const Tensor& b,
                GruStepCache* cache) {
    expect_rank("gru_step", "x", x, 2);
    expect_rank("gru_step", "h", h, 2);
    const std::size_t batch = x.dim(0), in = x.dim(1), hid = h.dim(1);
    if (h.dim(0) != batch) shape_fail("gru_step", "x and h batch sizes differ");
    if (w.shape != std::vector<std::size_t>{in, 3 * hid})
        shape_fail("gru_step", "W is " + w.shape_string() + ", expected [" + std::to_string(in) + ", " +
                                   std::to_string(3 * hid) + "]");
    if (u.shape != std::vector<std::size_t>{hid, 3 * hid})
        shape_fail("gru_step", "U is " + u.shape_string() + ", expected [" + std::to_string(hid) + ", " +
                                   std::to_string(3 * hid) + "]");
    if (b.shape != std::vector<std::size_t>{3 * hid}) shape_fail("gru_step", "b is " + b.shape_string());

    const auto H = static_cast<Eigen::Index>(hid);
    const auto um = cmap(u, hid, 3 * hid);
    const auto hm = cmap(h, batch, hid);
    RowMat a = cmap(x, batch, in) * cmap(w, in, 3 * hid);
    a.rowwise() += ConstVecMap(b.raw(), 3 * H);
    a.leftCols(2 * H).noalias() += hm * um.leftCols(2 * H);

    Tensor z({batch, hid}), r({batch, hid}), cand({batch, hid}), out({batch, hid});
    auto zm = mmap(z, batch, hid);
    auto rm = mmap(r, batch, hid);
    zm = a.leftCols(H).unaryExpr(&sigmoid);
    rm = a.middleCols(H, H).unaryExpr(&sigmoid);
    RowMat rh = rm.cwiseProduct(hm);
    auto cm = mmap(cand, batch, hid);
    cm = (a.rightCols(H) + rh * um.rightCols(H)).array().tanh().matrix();
    mmap(out, batch, hid) = (1.0 - zm.array()).matrix().cwiseProduct(hm) + zm.cwiseProduct(cm);
    if (cache) *cache = {x, h, std::move(z), std::move(r), std::move(cand)};
    return out;
}

GruStepGrads gru_step_backward(const GruStepCache& cache, const Tensor& w, const Tensor& u, const Tensor& dh_next,
                               Tensor& dw, Tensor& du, Tensor& db) {
    const std::size_t batch = cache.x.dim(0), in = cache.x.dim(1), hid = cache.h_prev.dim(1);
    if (dh_next.shape != cache.h_prev.shape) shape_fail("gru_step_backward", "dh shape mismatch");
    const auto H = static_cast<Eigen::Index>(hid);
    const ConstMatMap h = cmap(cache.h_prev, batch, hid);
    const ConstMatMap zm = cmap(cache.z, batch, hid);
    const ConstMatMap r = cmap(cache.r, batch, hid);
    const ConstMatMap cm = cmap(cache.cand, batch, hid);
    const ConstMatMap gm = cmap(dh_next, batch, hid);
    const ConstMatMap um = cmap(u, hid, 3 * hid);
    const auto z = zm.array();
    const auto c = cm.array();
    const auto g = gm.array();

    RowMat da(static_cast<Eigen::Index>(batch), 3 * H);
    // candidate block
    da.rightCols(H) = ((g * z) * (1.0 - c.square())).matrix();
    const RowMat drh = da.rightCols(H) * um.rightCols(H).transpose();
    // update and reset blocks
    da.leftCols(H) = (g * (c - h.array()) * z * (1.0 - z)).matrix();
    da.middleCols(H, H) = (drh.array() * h.array() * r.array() * (1.0 - r.array())).matrix();

    GruStepGrads out{Tensor({batch, in}), Tensor({batch, hid})};
    auto dh = mmap(out.dh_prev, batch, hid);
    dh = (g * (1.0 - z)).matrix() + drh.cwiseProduct(r);
    dh.noalias() += da.leftCols(2 * H) * um.leftCols(2 * H).transpose();

    const RowMat rh = r.cwiseProduct(h);
    auto dum = mmap(du, hid, 3 * hid);
    dum.leftCols(2 * H).noalias() += h.transpose() * da.leftCols(2 * H);
    dum.rightCols(H).noalias() += rh.transpose() * da.rightCols(H);
    mmap(dw, in, 3 * hid).noalias() += cmap(cache.x, batch, in).transpose() * da;
    VecMap(db.raw(), 3 * H) += da.colwise().sum();
    mmap(out.dx, batch, in).noalias() = da * cmap(w, in, 3 * hid).transpose();
    return out;
}

// --- losses ---

Tensor softmax(const Tensor& logits) {
    expect_rank("softmax", "logits", logits, 2);
    Tensor p(logits.shape);
    const std::size_t batch = logits.dim(0), n = logits.dim(1);
    for (std::size_t i = 0; i < batch; ++i) {
        const double* z = logits.raw() + i * n;
        double* out = p.raw() + i * n;
        const double mx = *std::max_element(z, z + n);
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += (out[k] = std::exp(z[k] - mx));
        for (std::size_t k = 0; k < n; ++k) out[k] /= sum;
    }
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const Tensor& targets) {
    expect_rank("softmax_cross_entropy", "logits", logits, 2);
    if (targets.shape != logits.shape)
        shape_fail("softmax_cross_entropy", "targets " + targets.shape_string() + " vs logits " + logits.shape_string());
    const std::size_t batch = logits.dim(0), n = logits.dim(1);
    LossResult res{0.0, softmax(logits)};
    for (std::size_t i = 0; i < batch; ++i) {
        const double* z = logits.raw() + i * n;
        const double* t = targets.raw() + i * n;
        const double mx = *std::max_element(z, z + n);
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += std::exp(z[k] - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t k = 0; k < n; ++k)
            if (t[k] != 0.0) res.loss -= t[k] * (z[k] - lse);
    }
    const double inv = 1.0 / static_cast<double>(batch);
    res.loss *= inv;
    for (std::size_t i = 0; i < res.grad.size(); ++i) res.grad.data[i] = (res.grad.data[i] - targets.data[i]) * inv;
    return res;
}

LossResult mse_loss(const Tensor& pred, std::span<const double> target) {
    expect_rank("mse_loss", "pred", pred, 2);
    if (pred.dim(1) != 1 || pred.dim(0) != target.size())
        shape_fail("mse_loss", "pred " + pred.shape_string() + " vs " + std::to_string(target.size()) + " targets");
    LossResult res{0.0, Tensor(pred.shape)};
    const double inv = 1.0 / static_cast<double>(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double e = pred.data[i] - target[i];
        res.loss += e * e * inv;
        res.grad.data[i] = 2.0 * e * inv;
    }
    return res;
}

// --- Adam ---

void adam_step(std::span<Parameter* const> params, AdamState& s, double lr) {
    if (s.m.size() != params.size()) {
        s.m.clear();
        s.v.clear();
        for (const auto* p : params) {
            s.m.emplace_back(p->value.shape);
            s.v.emplace_back(p->value.shape);
        }
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (p.grad.shape != p.value.shape || s.m[i].shape != p.value.shape)
            shape_fail("adam_step", "state/grad shape mismatch for " + p.name);
        double* theta = p.value.raw();
        const double* g = p.grad.raw();
        double* m = s.m[i].raw();
        double* v = s.v[i].raw();
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            m[j] = s.beta1 * m[j] + (1.0 - s.beta1) * g[j];
            v[j] = s.beta2 * v[j] + (1.0 - s.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            theta[j] -= lr * mhat / (std::sqrt(vhat) + s.eps);
        }
    }
}

}  // namespace proxsense::nn
