#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "diva/dataset.hpp"
#include "diva/rng.hpp"
#include "diva/synthetic.hpp"

namespace testutil {

// Two well-separated (or overlapping) gaussian blobs via the library
// generator; the workhorse fixture for classifier and attack tests.
inline diva::Dataset blobs(std::size_t n, double sep, std::uint64_t seed, std::size_t d = 5) {
    diva::SyntheticSpec spec;
    spec.n = n;
    spec.d = d;
    spec.class_sep = sep;
    return diva::gen_synthetic(spec, seed);
}

// Dataset with iid gaussian features and uniform labels (guaranteed to carry
// both classes).
inline diva::Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    diva::Rng rng(seed);
    diva::Dataset ds;
    ds.features = diva::Matrix(n, d);
    for (auto& v : ds.features.data()) v = rng.normal();
    ds.labels.resize(n);
    for (auto& y : ds.labels) y = static_cast<int>(rng.uniform_index(2));
    ds.labels[0] = 0;
    ds.labels[1] = 1;
    ds.name = "random_" + std::to_string(seed);
    return ds;
}

// 1-D dataset from explicit (value, label) pairs.
inline diva::Dataset one_dimensional(const std::vector<std::pair<double, int>>& points) {
    diva::Dataset ds;
    ds.features = diva::Matrix(points.size(), 1);
    ds.labels.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        ds.features(i, 0) = points[i].first;
        ds.labels[i] = points[i].second;
    }
    ds.name = "one_d";
    return ds;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("diva_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace testutil
