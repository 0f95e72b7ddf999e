#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/errors.hpp"
#include "diva/matrix.hpp"
#include "diva/rng.hpp"
#include "diva/util.hpp"

namespace diva {

// Provenance carried next to a dataset; persisted as a `<name>.meta.json`
// sidecar so CSV files stay plain feature tables.
struct DatasetMeta {
    std::optional<std::string> source;
    std::optional<std::string> difficulty;
    std::optional<double> noise;
    std::optional<std::string> attack;
    std::optional<double> rate;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<std::size_t>> flipped_indices;

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        if (source) j["source"] = *source;
        if (difficulty) j["difficulty"] = *difficulty;
        if (noise) j["noise"] = *noise;
        if (attack) j["attack"] = *attack;
        if (rate) j["rate"] = *rate;
        if (seed) j["seed"] = *seed;
        if (flipped_indices) j["flipped_indices"] = *flipped_indices;
        return j;
    }

    static DatasetMeta from_json(const nlohmann::json& j) {
        DatasetMeta m;
        if (j.contains("source")) m.source = j["source"].get<std::string>();
        if (j.contains("difficulty")) m.difficulty = j["difficulty"].get<std::string>();
        if (j.contains("noise")) m.noise = j["noise"].get<double>();
        if (j.contains("attack")) m.attack = j["attack"].get<std::string>();
        if (j.contains("rate")) m.rate = j["rate"].get<double>();
        if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("flipped_indices")) m.flipped_indices = j["flipped_indices"].get<std::vector<std::size_t>>();
        return m;
    }
};

// Feature matrix plus binary labels. Immutable by convention once built:
// every transformation in the toolkit returns a new Dataset.
struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // values in {0, 1}
    std::string name;
    DatasetMeta meta;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }

    std::size_t count_label(int label) const {
        std::size_t c = 0;
        for (int y : labels)
            if (y == label) ++c;
        return c;
    }

    Dataset subset(const std::vector<std::size_t>& indices) const {
        Dataset out;
        out.features = Matrix(indices.size(), dim());
        out.labels.reserve(indices.size());
        for (std::size_t r = 0; r < indices.size(); ++r) {
            const auto src = features.row(indices[r]);
            auto dst = out.features.row(r);
            std::copy(src.begin(), src.end(), dst.begin());
            out.labels.push_back(labels[indices[r]]);
        }
        out.name = name;
        out.meta = meta;
        return out;
    }
};

// require_both_classes covers training and measure extraction; plain loads
// only need well-formed rows.
inline void validate_dataset(const Dataset& ds, bool require_both_classes = true) {
    if (ds.size() < 4) throw validation_error("dataset '" + ds.name + "': needs at least 4 examples");
    if (ds.dim() < 1) throw validation_error("dataset '" + ds.name + "': needs at least 1 feature");
    if (ds.features.rows() != ds.size()) throw validation_error("dataset '" + ds.name + "': feature/label count mismatch");
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != 0 && ds.labels[i] != 1)
            throw validation_error("dataset '" + ds.name + "': label not in {0,1} at row " + std::to_string(i + 1));
        for (double v : ds.features.row(i))
            if (!std::isfinite(v))
                throw validation_error("dataset '" + ds.name + "': non-finite feature at row " + std::to_string(i + 1));
    }
    if (require_both_classes) {
        const std::size_t n1 = ds.count_label(1);
        if (n1 == 0 || n1 == ds.size())
            throw validation_error("dataset '" + ds.name + "': only one class present");
    }
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension("");
    p += ".meta.json";
    return p;
}

// CSV schema: header `f1,...,fd,y`, numeric cells, y in {0,1}.
inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw schema_error("'" + path.string() + "': empty file");
    const auto header = split_csv_line(strip_cr(line));
    if (header.size() < 2 || header.back() != "y")
        throw schema_error("'" + path.string() + "': expected header f1,...,fd,y");
    const std::size_t d = header.size() - 1;
    for (std::size_t i = 0; i < d; ++i) {
        if (header[i] != "f" + std::to_string(i + 1))
            throw schema_error("'" + path.string() + "': bad feature column name '" + header[i] + "'");
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != d + 1)
            throw schema_error("'" + path.string() + "' row " + std::to_string(row) + ": expected " +
                               std::to_string(d + 1) + " columns, got " + std::to_string(cells.size()));
        for (std::size_t c = 0; c < d; ++c) {
            double v;
            try {
                v = parse_double(cells[c]);
            } catch (const parse_error&) {
                throw parse_error("'" + path.string() + "' row " + std::to_string(row) + ": non-numeric cell '" + cells[c] + "'");
            }
            if (!std::isfinite(v))
                throw validation_error("'" + path.string() + "' row " + std::to_string(row) + ": non-finite feature value");
            values.push_back(v);
        }
        const std::string& ycell = cells[d];
        if (ycell == "0") {
            labels.push_back(0);
        } else if (ycell == "1") {
            labels.push_back(1);
        } else {
            throw validation_error("'" + path.string() + "' row " + std::to_string(row) + ": label '" + ycell + "' not in {0,1}");
        }
    }

    Dataset ds;
    ds.features = Matrix(labels.size(), d);
    ds.features.data() = std::move(values);
    ds.labels = std::move(labels);
    ds.name = path.stem().string();
    ds.meta.source = path.string();
    validate_dataset(ds);

    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream sin(side);
        nlohmann::json j;
        sin >> j;
        ds.meta = DatasetMeta::from_json(j);
        if (!ds.meta.source) ds.meta.source = path.string();
    }
    return ds;
}

inline void save_csv(const Dataset& ds, const std::filesystem::path& path, bool write_sidecar = true) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    for (std::size_t c = 0; c < ds.dim(); ++c) out << 'f' << (c + 1) << ',';
    out << "y\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) out << format_double(v) << ',';
        out << ds.labels[i] << '\n';
    }
    if (!out) throw io_error("failed writing '" + path.string() + "'");
    if (write_sidecar) {
        std::ofstream side(sidecar_path(path));
        side << ds.meta.to_json().dump(2) << '\n';
    }
}

// Per-feature z-scoring. Zero-variance features keep std 1 so they pass
// through centered instead of dividing by zero.
struct Normalizer {
    std::vector<double> means;
    std::vector<double> stds;

    static Normalizer fit(const Matrix& x) {
        Normalizer nz;
        const std::size_t n = x.rows(), d = x.cols();
        nz.means.assign(d, 0.0);
        nz.stds.assign(d, 1.0);
        if (n == 0) return nz;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < d; ++c) nz.means[c] += x(i, c);
        for (double& m : nz.means) m /= static_cast<double>(n);
        for (std::size_t c = 0; c < d; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dv = x(i, c) - nz.means[c];
                s += dv * dv;
            }
            s = std::sqrt(s / static_cast<double>(n));
            nz.stds[c] = (s > 0.0) ? s : 1.0;
        }
        return nz;
    }

    Matrix apply(const Matrix& x) const {
        Matrix out(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t c = 0; c < x.cols(); ++c)
                out(i, c) = (x(i, c) - means[c]) / stds[c];
        return out;
    }

    void apply_row(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - means[c]) / stds[c];
    }

    Dataset apply(const Dataset& ds) const {
        Dataset out = ds;
        out.features = apply(ds.features);
        return out;
    }
};

struct Split {
    Dataset train;
    Dataset test;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Stratified train/test split: per class, a seeded shuffle then a
// round(ratio * class size) cut. Deterministic for a fixed seed.
inline Split train_test_split(const Dataset& ds, double ratio, std::uint64_t seed) {
    validate_dataset(ds);
    if (ratio <= 0.0 || ratio >= 1.0) throw validation_error("split ratio must be in (0,1)");
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.labels[i] == 0 ? idx0 : idx1).push_back(i);
    if (idx0.size() < 2 || idx1.size() < 2)
        throw validation_error("dataset '" + ds.name + "': cannot stratify, a class has fewer than 2 examples");

    Rng rng(derive_seed(seed, "train_test_split"));
    Split split;
    split.seed = seed;
    for (auto* idx : {&idx0, &idx1}) {
        rng.shuffle(*idx);
        std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx->size())));
        n_train = std::min(idx->size() - 1, std::max<std::size_t>(1, n_train));
        for (std::size_t i = 0; i < idx->size(); ++i)
            (i < n_train ? split.train_indices : split.test_indices).push_back((*idx)[i]);
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    split.train = ds.subset(split.train_indices);
    split.test = ds.subset(split.test_indices);
    return split;
}

inline Split train_test_split(const Dataset& ds, std::uint64_t seed) {
    return train_test_split(ds, 0.8, seed);
}

// Flips exactly round(n * rate) uniformly chosen labels; features untouched.
inline Dataset inject_label_noise(const Dataset& ds, double rate, std::uint64_t seed) {
    if (rate < 0.0 || rate > 0.5) throw validation_error("noise rate must be in [0, 0.5]");
    Dataset out = ds;
    out.meta.noise = rate;
    const std::size_t n_flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(ds.size())));
    if (n_flips == 0) return out;
    Rng rng(derive_seed(seed, "label_noise"));
    for (std::size_t i : rng.sample_without_replacement(ds.size(), n_flips)) out.labels[i] = 1 - out.labels[i];
    return out;
}

} // namespace diva
