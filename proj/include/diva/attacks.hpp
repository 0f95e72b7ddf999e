#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "diva/classifiers.hpp"
#include "diva/dataset.hpp"
#include "diva/rng.hpp"

namespace diva {

struct AttackResult {
    Dataset poisoned;
    std::vector<std::size_t> flipped_indices;  // sorted, positions where labels differ
    int rounds_run = 0;
};

inline std::size_t attack_budget(std::size_t n, double rate) {
    if (rate < 0.0 || rate > 0.5) throw validation_error("poisoning rate must be in [0, 0.5]");
    return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n)));
}

namespace detail {

inline Dataset apply_flips(const Dataset& train, const std::vector<std::size_t>& flips,
                           const std::string& attack, double rate, std::uint64_t seed) {
    Dataset out = train;
    for (std::size_t i : flips) out.labels[i] = 1 - out.labels[i];
    out.meta.attack = attack;
    out.meta.rate = rate;
    out.meta.seed = seed;
    out.meta.flipped_indices = flips;
    return out;
}

// Budgeted selection step shared by falfa/alfa: take the `budget` examples
// with the largest scores (the LP over unit-weight flips is solved exactly
// by this sort), ties broken toward the lower index. Scores are measured
// against the original labels, so the flip set never exceeds the budget.
inline std::vector<std::size_t> select_top_flips(const std::vector<double>& scores, std::size_t budget) {
    std::vector<std::size_t> idx(scores.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    idx.resize(std::min(budget, idx.size()));
    std::sort(idx.begin(), idx.end());
    return idx;
}

// Alternating retrain/select skeleton. train_fn(labels) -> per-example
// scores favoring the flip of the ORIGINAL label.
template <typename ScoreFn>
inline AttackResult alternating_flip_attack(const Dataset& train, double rate, int rounds,
                                            const std::string& name, std::uint64_t seed, ScoreFn score_fn) {
    validate_dataset(train);
    const std::size_t budget = attack_budget(train.size(), rate);
    AttackResult result;
    if (budget == 0) {
        result.poisoned = apply_flips(train, {}, name, rate, seed);
        return result;
    }
    std::vector<std::size_t> flips;
    for (int round = 0; round < rounds; ++round) {
        std::vector<int> labels = train.labels;
        for (std::size_t i : flips) labels[i] = 1 - labels[i];
        const std::vector<double> scores = score_fn(labels, round);
        std::vector<std::size_t> next = select_top_flips(scores, budget);
        result.rounds_run = round + 1;
        if (next == flips) break;  // fixed point
        flips = std::move(next);
    }
    result.flipped_indices = flips;
    result.poisoned = apply_flips(train, flips, name, rate, seed);
    return result;
}

} // namespace detail

// Stochastic label noise: exactly round(n * rate) uniform flips. Shares the
// implementation with inject_label_noise so counts agree everywhere.
inline AttackResult sln(const Dataset& train, double rate, std::uint64_t seed) {
    validate_dataset(train);
    if (rate < 0.0 || rate > 0.5) throw validation_error("poisoning rate must be in [0, 0.5]");
    Dataset noisy = inject_label_noise(train, rate, seed);
    AttackResult result;
    result.rounds_run = 1;
    for (std::size_t i = 0; i < train.size(); ++i)
        if (noisy.labels[i] != train.labels[i]) result.flipped_indices.push_back(i);
    result.poisoned = detail::apply_flips(train, result.flipped_indices, "sln", rate, seed);
    result.poisoned.meta.noise = noisy.meta.noise;
    return result;
}

// Label-flip attack against the MLP. Each round retrains the network on the
// current labels and scores every example by the log-odds the model assigns
// to flipping its original label, g_i = log p(1-y_i|x_i) - log p(y_i|x_i)
// (the per-example cross-entropy decrease if flipped). The top-budget set by
// g_i becomes the next flip set; stops early on a repeated set.
inline AttackResult falfa(const Dataset& train, double rate, const TrainConfig& cfg, int rounds = 5) {
    const Normalizer nz = Normalizer::fit(train.features);
    const Matrix x = nz.apply(train.features);
    return detail::alternating_flip_attack(
        train, rate, rounds, "falfa", cfg.seed, [&](const std::vector<int>& labels, int round) {
            Dataset current;
            current.features = x;
            current.labels = labels;
            current.name = train.name;
            const MLPModel model = train_mlp(current, cfg.with_seed(derive_seed(cfg.seed, "falfa_round", round)));
            const std::vector<double> proba = model.predict_proba(x);
            std::vector<double> scores(proba.size());
            for (std::size_t i = 0; i < proba.size(); ++i) {
                const double p1 = detail::clamp_proba(proba[i]);
                const double log_p1 = std::log(p1), log_p0 = std::log(1.0 - p1);
                scores[i] = train.labels[i] == 1 ? log_p0 - log_p1 : log_p1 - log_p0;
            }
            return scores;
        });
}

// Same alternating skeleton against the nonlinear random-feature surrogate;
// scores are hinge-loss differences g_i = loss(x_i, y_i) - loss(x_i, 1-y_i),
// i.e. how strongly the current boundary already prefers the flipped label.
inline AttackResult alfa(const Dataset& train, double rate, const TrainConfig& cfg, int rounds = 5) {
    const Normalizer nz = Normalizer::fit(train.features);
    const Matrix x = nz.apply(train.features);
    return detail::alternating_flip_attack(
        train, rate, rounds, "alfa", cfg.seed, [&](const std::vector<int>& labels, int round) {
            Dataset current;
            current.features = x;
            current.labels = labels;
            current.name = train.name;
            const RFFModel model = train_rff(current, cfg.with_seed(derive_seed(cfg.seed, "alfa_round", round)));
            std::vector<double> scores(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                const int y = train.labels[i];
                scores[i] = model.hinge_loss(x.row(i), y) - model.hinge_loss(x.row(i), 1 - y);
            }
            return scores;
        });
}

inline AttackResult run_attack(const std::string& name, const Dataset& train, double rate,
                               const TrainConfig& cfg, int rounds = 5) {
    if (name == "sln") return sln(train, rate, cfg.seed);
    if (name == "falfa") return falfa(train, rate, cfg, rounds);
    if (name == "alfa") return alfa(train, rate, cfg, rounds);
    throw usage_error("unknown attack '" + name + "'; valid names: sln, falfa, alfa");
}

} // namespace diva
