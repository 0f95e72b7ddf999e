#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/classifiers.hpp"
#include "diva/cmeasures.hpp"
#include "diva/dataset.hpp"
#include "diva/log.hpp"
#include "diva/metalearner.hpp"
#include "diva/util.hpp"

namespace diva {

// Exit codes for pipeline gating: clean, error, poisoned.
inline constexpr int kExitClean = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPoisoned = 3;

struct Verdict {
    std::string dataset;
    double acc_empirical = 0.0;
    double acc_estimated = 0.0;
    double score = 0.0;      // acc_empirical - acc_estimated
    double threshold = 0.0;
    std::string policy;
    bool poisoned = false;   // score > threshold, strict

    nlohmann::json to_json() const {
        return {{"dataset", dataset},
                {"acc_empirical", acc_empirical},
                {"acc_estimated", acc_estimated},
                {"score", score},
                {"threshold", threshold},
                {"policy", policy},
                {"poisoned", poisoned}};
    }
};

// t = acc_empirical * delta / 100 (delta is the tolerated accuracy
// difference in percent).
inline double heuristic_threshold(double acc_empirical, double delta_percent) {
    if (acc_empirical < 0.0 || acc_empirical > 1.0)
        throw validation_error("heuristic_threshold: accuracy must be in [0,1]");
    if (delta_percent < 0.0) throw validation_error("heuristic_threshold: delta must be >= 0");
    return acc_empirical * delta_percent / 100.0;
}

// Smallest score t such that the fraction of clean scores <= t reaches the
// target TNR (empirical quantile, higher interpolation).
inline double calibrate_threshold_tnr(std::vector<double> clean_scores, double target_tnr) {
    if (clean_scores.empty()) throw validation_error("calibrate_threshold_tnr: no calibration scores");
    if (target_tnr <= 0.0 || target_tnr > 1.0)
        throw validation_error("calibrate_threshold_tnr: target must be in (0,1]");
    if (clean_scores.size() < 10)
        log::warn("calibrate_threshold_tnr: only " + std::to_string(clean_scores.size()) +
                  " calibration scores; the quantile will be coarse");
    std::sort(clean_scores.begin(), clean_scores.end());
    return quantile_higher(clean_scores, target_tnr);
}

struct ThresholdPolicy {
    enum class Kind { heuristic, calibrated_tnr };
    Kind kind = Kind::heuristic;
    double delta_percent = 5.0;
    double target_tnr = 0.98;
    std::vector<double> calibration_scores;

    static ThresholdPolicy heuristic(double delta = 5.0) {
        ThresholdPolicy p;
        p.kind = Kind::heuristic;
        p.delta_percent = delta;
        return p;
    }

    static ThresholdPolicy calibrated_tnr(std::vector<double> scores, double target = 0.98) {
        ThresholdPolicy p;
        p.kind = Kind::calibrated_tnr;
        p.target_tnr = target;
        p.calibration_scores = std::move(scores);
        return p;
    }

    double threshold_for(double acc_empirical) const {
        if (kind == Kind::heuristic) return heuristic_threshold(acc_empirical, delta_percent);
        return diva::calibrate_threshold_tnr(calibration_scores, target_tnr);
    }

    std::string describe() const {
        if (kind == Kind::heuristic) return "heuristic(delta=" + format_double(delta_percent) + ")";
        return "tnr(target=" + format_double(target_tnr) + ")";
    }
};

inline Verdict make_verdict(const std::string& dataset, double acc_empirical, double acc_estimated,
                            double threshold, const std::string& policy) {
    Verdict v;
    v.dataset = dataset;
    v.acc_empirical = acc_empirical;
    v.acc_estimated = acc_estimated;
    v.score = acc_empirical - acc_estimated;
    v.threshold = threshold;
    v.policy = policy;
    v.poisoned = v.score > threshold;
    return v;
}

// The decision procedure: empirical accuracy by 5-fold CV on the suspect
// training data, estimated clean accuracy from the meta-learner, flag when
// their difference exceeds the threshold.
inline Verdict detect(const Dataset& ds, const MetaLearner& ml, const ThresholdPolicy& policy,
                      const TrainConfig& cfg, std::uint64_t seed) {
    validate_dataset(ds);
    const double acc_empirical = cross_val_accuracy(ds, 5, cfg.with_seed(derive_seed(seed, "detect_cv")));
    const CMVector cmv = extract(ds, derive_seed(seed, "detect_cm"));
    const double acc_estimated = ml.predict_clean_acc(cmv);
    return make_verdict(ds.name, acc_empirical, acc_estimated, policy.threshold_for(acc_empirical),
                        policy.describe());
}

// The raw DIVA score without a policy; used by evaluation sweeps that apply
// a frozen threshold afterwards.
inline double diva_score(const Dataset& ds, const MetaLearner& ml, const TrainConfig& cfg, std::uint64_t seed) {
    const double acc_empirical = cross_val_accuracy(ds, 5, cfg.with_seed(derive_seed(seed, "detect_cv")));
    const CMVector cmv = extract(ds, derive_seed(seed, "detect_cm"));
    return acc_empirical - ml.predict_clean_acc(cmv);
}

} // namespace diva
