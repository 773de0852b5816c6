#include "proxsense/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace proxsense {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

const Blob& Container::blob(const std::string& name) const {
    for (const auto& b : blobs)
        if (b.name == name) return b;
    throw std::runtime_error("container has no blob '" + name + "'");
}

namespace {

fs::path temp_sibling(const fs::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    return tmp;
}

}  // namespace

void write_text_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_container(const fs::path& path, const Container& c) {
    json header = c.header;
    json blobs = json::array();
    std::size_t offset = 0;
    for (const auto& b : c.blobs) {
        std::size_t n = 1;
        for (auto d : b.shape) n *= d;
        if (n != b.data.size()) throw ShapeError("blob '" + b.name + "' shape does not match data length");
        blobs.push_back({{"name", b.name}, {"shape", b.shape}, {"offset", offset}});
        offset += n;
    }
    header["blobs"] = blobs;
    const std::string text = header.dump();

    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const auto tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << "PXSC 1\n" << text.size() << '\n' << text;
        for (const auto& b : c.blobs)
            out.write(reinterpret_cast<const char*>(b.data.data()),
                      static_cast<std::streamsize>(b.data.size() * sizeof(double)));
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

Container read_container(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic, len_line;
    std::getline(in, magic);
    if (magic != "PXSC 1") throw std::runtime_error(path.string() + " is not a proxsense container");
    std::getline(in, len_line);
    const auto len = static_cast<std::size_t>(std::stoull(len_line));
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    Container c;
    c.header = json::parse(text);
    for (const auto& entry : c.header.at("blobs")) {
        Blob b;
        b.name = entry.at("name").get<std::string>();
        b.shape = entry.at("shape").get<std::vector<std::size_t>>();
        std::size_t n = 1;
        for (auto d : b.shape) n *= d;
        b.data.resize(n);
        in.read(reinterpret_cast<char*>(b.data.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw std::runtime_error(path.string() + ": truncated payload");
        c.blobs.push_back(std::move(b));
    }
    c.header.erase("blobs");
    return c;
}

json to_json(const MetaVocab& v) {
    return {{"tx_model", v.tx_models}, {"rx_model", v.rx_models}, {"tx_power", v.tx_powers}, {"carriage", v.carriages}};
}

MetaVocab vocab_from_json(const json& j) {
    return {j.at("tx_model").get<std::vector<std::string>>(), j.at("rx_model").get<std::vector<std::string>>(),
            j.at("tx_power").get<std::vector<std::string>>(), j.at("carriage").get<std::vector<std::string>>()};
}

json to_json(const TrainPreset& p) {
    return {{"name", p.name},
            {"model_kind", std::string(to_string(p.model_kind))},
            {"layers_label", p.layers_label},
            {"num_layers", p.num_layers},
            {"epochs", p.epochs},
            {"hidden_size", p.hidden_size},
            {"learning_rate", p.learning_rate},
            {"batch_size", p.batch_size}};
}

TrainPreset preset_from_json(const json& j) {
    TrainPreset p;
    p.name = j.at("name").get<std::string>();
    p.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    p.layers_label = j.value("layers_label", "");
    p.num_layers = j.at("num_layers").get<int>();
    p.epochs = j.at("epochs").get<int>();
    p.hidden_size = j.at("hidden_size").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.batch_size = j.at("batch_size").get<int>();
    return p;
}

void save_dataset(const fs::path& path, const Dataset& d) {
    Container c;
    auto& h = c.header;
    h["kind"] = "dataset";
    h["representation"] = std::string(to_string(d.representation));
    h["T"] = d.steps;
    h["D"] = d.width;
    h["F"] = d.sensor_width;
    h["onehot_width"] = d.onehot_width;
    h["split"] = d.split == SplitTag::Train ? "train" : "eval";
    h["vocab"] = to_json(d.vocab);
    std::vector<int> labels;
    std::vector<std::string> sites;
    Blob x{"x", {d.samples.size(), d.steps, d.width}, {}};
    x.data.reserve(d.samples.size() * d.feature_count());
    for (const auto& s : d.samples) {
        if (s.x.size() != d.feature_count()) throw ShapeError("save_dataset: sample length mismatch");
        labels.push_back(static_cast<int>(index_of(s.label)));
        sites.push_back(s.site);
        x.data.insert(x.data.end(), s.x.begin(), s.x.end());
    }
    h["labels"] = labels;
    h["sites"] = sites;
    if (d.normalizer) {
        h["normalizer"] = {{"epsilon", d.normalizer->epsilon}};
        const auto w = d.normalizer->mean.size();
        c.blobs.push_back({"normalizer.mean", {w}, d.normalizer->mean});
        c.blobs.push_back({"normalizer.std", {w}, d.normalizer->std});
    }
    c.blobs.push_back(std::move(x));
    write_container(path, c);
}

Dataset load_dataset(const fs::path& path) {
    const auto c = read_container(path);
    const auto& h = c.header;
    if (h.value("kind", "") != "dataset") throw std::runtime_error(path.string() + " is not a dataset container");
    Dataset d;
    d.representation = parse_representation(h.at("representation").get<std::string>());
    d.steps = h.at("T").get<std::size_t>();
    d.width = h.at("D").get<std::size_t>();
    d.sensor_width = h.at("F").get<std::size_t>();
    d.onehot_width = h.at("onehot_width").get<std::size_t>();
    d.split = h.at("split").get<std::string>() == "train" ? SplitTag::Train : SplitTag::Eval;
    d.vocab = vocab_from_json(h.at("vocab"));
    if (h.contains("normalizer")) {
        d.normalizer = Normalizer{c.blob("normalizer.mean").data, c.blob("normalizer.std").data,
                                  h["normalizer"].at("epsilon").get<double>()};
    }
    const auto labels = h.at("labels").get<std::vector<int>>();
    const auto sites = h.at("sites").get<std::vector<std::string>>();
    const auto& x = c.blob("x");
    const std::size_t n = d.feature_count();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Sample s;
        s.label = class_from_index(static_cast<std::size_t>(labels[i]));
        s.site = sites.at(i);
        s.x.assign(x.data.begin() + static_cast<std::ptrdiff_t>(i * n),
                   x.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
        d.samples.push_back(std::move(s));
    }
    return d;
}

}  // namespace proxsense
