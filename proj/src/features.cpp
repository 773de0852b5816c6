#include "proxsense/features.hpp"

#include <algorithm>
#include <cmath>

namespace proxsense::features {

Resampled resample(const Interval& interval, std::size_t steps) {
    interval.validate();
    if (steps == 0) throw std::invalid_argument("resample: steps must be positive");
    Resampled out{Matrix(steps, kSensorWidth, 0.0), {}};

    std::array<std::vector<const SensorReading*>, kNumSensorKinds> by_kind;
    for (const auto& r : interval.readings) by_kind[index_of(r.kind)].push_back(&r);

    const double dt = interval.window / static_cast<double>(steps);
    for (auto kind : kAllSensors) {
        const auto& list = by_kind[index_of(kind)];
        if (list.empty()) {
            out.missing[index_of(kind)] = true;
            continue;
        }
        const std::size_t off = sensor_offset(kind);
        const std::size_t dim = sensor_dim(kind);
        std::size_t next = 0;  // first reading with t > current step time
        for (std::size_t i = 0; i < steps; ++i) {
            const double ti = (static_cast<double>(i) + 0.5) * dt;
            while (next < list.size() && list[next]->t <= ti) ++next;
            const SensorReading* held = next == 0 ? list.front() : list[next - 1];
            for (std::size_t c = 0; c < dim; ++c) out.raw(i, off + c) = held->values[c];
        }
    }
    return out;
}

namespace {

std::size_t kind_of_column(std::size_t col) {
    for (auto k : kAllSensors) {
        if (col < sensor_offset(k) + sensor_dim(k)) return index_of(k);
    }
    throw std::out_of_range("sensor column");
}

Normalizer fit_impl(std::span<const Matrix* const> mats, std::span<const SensorMask* const> masks, double eps) {
    if (mats.empty()) throw std::invalid_argument("fit_normalizer: empty train set");
    const std::size_t width = mats.front()->cols;
    Normalizer n;
    n.epsilon = eps;
    n.mean.assign(width, 0.0);
    n.std.assign(width, eps);
    for (std::size_t c = 0; c < width; ++c) {
        const std::size_t kind = width == kSensorWidth ? kind_of_column(c) : 0;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t s = 0; s < mats.size(); ++s) {
            if (!masks.empty() && (*masks[s])[kind]) continue;
            const Matrix& m = *mats[s];
            for (std::size_t r = 0; r < m.rows; ++r) sum += m(r, c);
            count += m.rows;
        }
        if (count == 0) continue;
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        for (std::size_t s = 0; s < mats.size(); ++s) {
            if (!masks.empty() && (*masks[s])[kind]) continue;
            const Matrix& m = *mats[s];
            for (std::size_t r = 0; r < m.rows; ++r) {
                const double d = m(r, c) - mean;
                ss += d * d;
            }
        }
        n.mean[c] = mean;
        n.std[c] = std::max(std::sqrt(ss / static_cast<double>(count)), eps);
    }
    return n;
}

}  // namespace

Normalizer fit_normalizer(std::span<const Resampled> train, double epsilon) {
    std::vector<const Matrix*> mats;
    std::vector<const SensorMask*> masks;
    for (const auto& r : train) {
        mats.push_back(&r.raw);
        masks.push_back(&r.missing);
    }
    return fit_impl(mats, masks, epsilon);
}

Normalizer fit_normalizer(std::span<const Matrix> train, double epsilon) {
    std::vector<const Matrix*> mats;
    for (const auto& m : train) mats.push_back(&m);
    return fit_impl(mats, {}, epsilon);
}

Matrix apply_normalizer(const Normalizer& norm, const Matrix& raw, const SensorMask& missing) {
    if (raw.cols != norm.mean.size())
        throw ShapeError("apply_normalizer: matrix width " + std::to_string(raw.cols) + " != normalizer width " +
                         std::to_string(norm.mean.size()));
    Matrix out(raw.rows, raw.cols);
    for (std::size_t c = 0; c < raw.cols; ++c) {
        const bool absent = raw.cols == kSensorWidth && missing[kind_of_column(c)];
        for (std::size_t r = 0; r < raw.rows; ++r)
            out(r, c) = absent ? 0.0 : (raw(r, c) - norm.mean[c]) / norm.std[c];
    }
    return out;
}

Matrix invert_normalizer(const Normalizer& norm, const Matrix& normalized) {
    if (normalized.cols != norm.mean.size()) throw ShapeError("invert_normalizer: width mismatch");
    Matrix out(normalized.rows, normalized.cols);
    for (std::size_t r = 0; r < normalized.rows; ++r)
        for (std::size_t c = 0; c < normalized.cols; ++c) out(r, c) = normalized(r, c) * norm.std[c] + norm.mean[c];
    return out;
}

std::vector<double> encode_metadata(const ExperimentMeta& meta, const MetaVocab& vocab) {
    std::vector<double> out;
    out.reserve(vocab.width());
    auto block = [&](const std::vector<std::string>& values, const std::string& v, const char* field) {
        const auto it = std::find(values.begin(), values.end(), v);
        if (it == values.end()) throw ConfigError(std::string("metadata field ") + field + " value '" + v + "' not in vocabulary");
        for (const auto& candidate : values) out.push_back(candidate == v ? 1.0 : 0.0);
    };
    block(vocab.tx_models, meta.tx_model, "tx_model");
    block(vocab.rx_models, meta.rx_model, "rx_model");
    block(vocab.tx_powers, meta.tx_power, "tx_power");
    block(vocab.carriages, meta.carriage, "carriage");
    return out;
}

TimeSeriesSample to_timeseries(const Matrix& normalized, std::span<const double> onehot, DistanceClass label,
                               std::string site) {
    TimeSeriesSample s;
    s.sensor_width = normalized.cols;
    s.label = label;
    s.site = std::move(site);
    s.matrix = Matrix(normalized.rows, normalized.cols + onehot.size());
    for (std::size_t r = 0; r < normalized.rows; ++r) {
        auto dst = s.matrix.row(r);
        const auto src = normalized.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        std::copy(onehot.begin(), onehot.end(), dst.begin() + static_cast<std::ptrdiff_t>(normalized.cols));
    }
    return s;
}

FlatSample to_flat(const TimeSeriesSample& sample) {
    const auto& m = sample.matrix;
    const std::size_t f = sample.sensor_width;
    FlatSample out;
    out.label = sample.label;
    out.site = sample.site;
    out.vector.reserve(m.rows * f + (m.cols - f));
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < f; ++c) out.vector.push_back(m(r, c));
    if (m.rows > 0)
        for (std::size_t c = f; c < m.cols; ++c) out.vector.push_back(m(0, c));
    return out;
}

std::size_t HistogramSpec::buckets() const {
    return static_cast<std::size_t>(std::ceil((hi - lo) / bucket_width - 1e-12));
}

void HistogramSpec::validate() const {
    if (!(lo < hi) || !(bucket_width > 0.0)) throw ConfigError("histogram spec needs lo < hi and width > 0");
}

HistogramSample to_histogram(const Interval& interval, const HistogramSpec& spec) {
    spec.validate();
    const std::size_t b = spec.buckets();
    HistogramSample out;
    out.freqs.assign(b, 0.0);
    out.label = interval.label;
    out.site = interval.meta.site;
    std::size_t total = 0;
    for (const auto& r : interval.readings) {
        if (r.kind != SensorKind::Bluetooth) continue;
        const double pos = std::floor((r.values[0] - spec.lo) / spec.bucket_width);
        const auto idx = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(b - 1)));
        out.freqs[idx] += 1.0;
        ++total;
    }
    if (total > 0)
        for (auto& f : out.freqs) f /= static_cast<double>(total);
    return out;
}

std::array<double, kNumClasses> one_hot(DistanceClass c) {
    std::array<double, kNumClasses> out{};
    out[index_of(c)] = 1.0;
    return out;
}

Mixed mixup(std::span<const double> a, DistanceClass la, std::span<const double> b, DistanceClass lb, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("mixup: lambda outside [0, 1]");
    if (a.size() != b.size())
        throw ShapeError("mixup: length mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    Mixed out;
    out.x.resize(a.size());
    // Rounding can leave the segment by an ulp (even when a[i] == b[i]); the
    // clamp keeps every coordinate between its endpoints.
    for (std::size_t i = 0; i < a.size(); ++i)
        out.x[i] = std::clamp(lambda * a[i] + (1.0 - lambda) * b[i], std::min(a[i], b[i]), std::max(a[i], b[i]));
    const auto ha = one_hot(la);
    const auto hb = one_hot(lb);
    for (std::size_t k = 0; k < kNumClasses; ++k) out.soft_label[k] = lambda * ha[k] + (1.0 - lambda) * hb[k];
    return out;
}

Mixed mixup(const FlatSample& a, const FlatSample& b, double lambda) {
    return mixup(a.vector, a.label, b.vector, b.label, lambda);
}

namespace {

std::vector<Resampled> resample_all(const std::vector<Interval>& intervals, const FeatureOptions& opt) {
    std::vector<Resampled> out;
    out.reserve(intervals.size());
    for (const auto& iv : intervals) {
        auto r = resample(iv, opt.steps);
        for (auto k : kAllSensors) {
            if (opt.sensors.contains(k)) continue;
            r.missing[index_of(k)] = true;
            for (std::size_t row = 0; row < r.raw.rows; ++row)
                for (std::size_t c = 0; c < sensor_dim(k); ++c) r.raw(row, sensor_offset(k) + c) = 0.0;
        }
        out.push_back(std::move(r));
    }
    return out;
}

Dataset empty_dataset(const FeatureOptions& opt, const MetaVocab& vocab, SplitTag tag) {
    Dataset d;
    d.representation = opt.representation;
    d.vocab = vocab;
    d.split = tag;
    d.onehot_width = opt.include_metadata ? vocab.width() : 0;
    switch (opt.representation) {
        case Representation::TimeSeries:
            d.steps = opt.steps;
            d.width = kSensorWidth + d.onehot_width;
            break;
        case Representation::Flat:
            d.steps = 1;
            d.width = opt.steps * kSensorWidth + d.onehot_width;
            break;
        case Representation::Histogram:
            d.steps = 1;
            d.sensor_width = 0;
            d.onehot_width = 0;
            d.width = opt.histogram.buckets();
            break;
    }
    return d;
}

void fill(Dataset& d, const std::vector<Interval>& intervals, const std::vector<Resampled>& raw,
          const Normalizer& norm, const FeatureOptions& opt) {
    d.samples.reserve(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        const auto normalized = apply_normalizer(norm, raw[i].raw, raw[i].missing);
        std::vector<double> onehot;
        if (opt.include_metadata) onehot = encode_metadata(iv.meta, d.vocab);
        auto ts = to_timeseries(normalized, onehot, iv.label, iv.meta.site);
        if (opt.representation == Representation::TimeSeries) {
            d.samples.push_back({std::move(ts.matrix.data), iv.label, iv.meta.site});
        } else {
            d.samples.push_back({to_flat(ts).vector, iv.label, iv.meta.site});
        }
    }
}

}  // namespace

std::pair<Dataset, Dataset> build_datasets(const ingest::Split& split, const FeatureOptions& opt) {
    if (opt.sensors.empty()) throw ConfigError("sensor subset is empty");
    if (split.train.empty()) throw ConfigError("build_datasets: empty train split");
    Dataset train = empty_dataset(opt, split.vocab, SplitTag::Train);
    Dataset eval = empty_dataset(opt, split.vocab, SplitTag::Eval);

    if (opt.representation == Representation::Histogram) {
        for (const auto& iv : split.train) {
            auto h = to_histogram(iv, opt.histogram);
            train.samples.push_back({std::move(h.freqs), h.label, h.site});
        }
        for (const auto& iv : split.eval) {
            auto h = to_histogram(iv, opt.histogram);
            eval.samples.push_back({std::move(h.freqs), h.label, h.site});
        }
        return {std::move(train), std::move(eval)};
    }

    const auto train_raw = resample_all(split.train, opt);
    const auto eval_raw = resample_all(split.eval, opt);
    const auto norm = fit_normalizer(train_raw);
    train.normalizer = norm;
    eval.normalizer = norm;
    fill(train, split.train, train_raw, norm, opt);
    fill(eval, split.eval, eval_raw, norm, opt);
    return {std::move(train), std::move(eval)};
}

}  // namespace proxsense::features
