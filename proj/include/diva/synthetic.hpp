#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "diva/classifiers.hpp"
#include "diva/dataset.hpp"
#include "diva/rng.hpp"

namespace diva {

enum class Difficulty { Easy, Normal, Hard };

inline std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::Easy: return "easy";
        case Difficulty::Normal: return "normal";
        default: return "hard";
    }
}

inline Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "normal") return Difficulty::Normal;
    if (s == "hard") return Difficulty::Hard;
    throw validation_error("unknown difficulty '" + s + "'");
}

// Grading thresholds on the nonlinear surrogate's test accuracy:
// < 0.70 hard, [0.70, 0.90) normal, >= 0.90 easy.
inline Difficulty difficulty_from_accuracy(double acc) {
    if (acc < 0.70) return Difficulty::Hard;
    if (acc < 0.90) return Difficulty::Normal;
    return Difficulty::Easy;
}

struct SyntheticSpec {
    std::size_t n = 200;
    std::size_t d = 5;
    double class_sep = 3.0;
    double cluster_spread = 1.0;
    double label_noise = 0.0;
};

// Two Gaussian clusters per class. Classes sit across a random direction u
// at distance class_sep; the two clusters of each class sit across an
// orthogonal direction v, also at distance class_sep. Isotropic covariance
// scaled by cluster_spread. class_sep = 0 collapses everything onto one
// blob (chance-level task); class_sep ~ 6 gives a clean margin.
inline Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.n < 20) throw validation_error("gen_synthetic: n must be >= 20");
    if (spec.d < 2) throw validation_error("gen_synthetic: d must be >= 2");
    if (spec.label_noise < 0.0 || spec.label_noise > 0.5)
        throw validation_error("gen_synthetic: label_noise must be in [0, 0.5]");
    if (spec.class_sep < 0.0 || spec.cluster_spread <= 0.0)
        throw validation_error("gen_synthetic: class_sep must be >= 0 and cluster_spread > 0");

    Rng rng(derive_seed(seed, "gen_synthetic"));

    // Random orthonormal pair via Gram-Schmidt on Gaussian draws.
    std::vector<double> u(spec.d), v(spec.d);
    for (auto& x : u) x = rng.normal();
    double nu = std::sqrt(dot(u, u));
    for (auto& x : u) x /= nu;
    for (;;) {
        for (auto& x : v) x = rng.normal();
        const double proj = dot(u, v);
        for (std::size_t c = 0; c < spec.d; ++c) v[c] -= proj * u[c];
        const double nv = std::sqrt(dot(v, v));
        if (nv > 1e-8) {
            for (auto& x : v) x /= nv;
            break;
        }
    }

    Dataset ds;
    ds.features = Matrix(spec.n, spec.d);
    ds.labels.assign(spec.n, 0);
    const std::size_t n1 = spec.n / 2;           // class 1
    const std::size_t n0 = spec.n - n1;          // class 0 takes the remainder
    const double half = spec.class_sep / 2.0;
    std::size_t row = 0;
    for (int cls = 0; cls < 2; ++cls) {
        const std::size_t nc = cls == 0 ? n0 : n1;
        const double cu = (cls == 0 ? -half : half);
        for (std::size_t i = 0; i < nc; ++i, ++row) {
            const double cv = (i % 2 == 0 ? -half : half);  // alternate clusters
            auto x = ds.features.row(row);
            for (std::size_t c = 0; c < spec.d; ++c)
                x[c] = cu * u[c] + cv * v[c] + spec.cluster_spread * rng.normal();
            ds.labels[row] = cls;
        }
    }
    ds.meta.seed = seed;
    if (spec.label_noise > 0.0)
        ds = inject_label_noise(ds, spec.label_noise, derive_seed(seed, "gen_noise"));
    return ds;
}

// 80-20 split, fit the random-feature surrogate on the normalized training
// part, grade by its test accuracy.
inline Difficulty categorize_difficulty(const Dataset& ds, std::uint64_t seed) {
    const Split split = train_test_split(ds, 0.8, derive_seed(seed, "difficulty_split"));
    const Normalizer nz = Normalizer::fit(split.train.features);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.l2 = 1e-3;
    cfg.seed = derive_seed(seed, "difficulty_fit");
    const RFFModel model = train_rff(nz.apply(split.train), cfg);
    return difficulty_from_accuracy(accuracy(model, nz.apply(split.test)));
}

} // namespace diva
