#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/cmeasures.hpp"
#include "diva/log.hpp"
#include "diva/matrix.hpp"
#include "diva/metadb.hpp"
#include "diva/rng.hpp"
#include "diva/util.hpp"

namespace diva {

inline constexpr int kMetaLearnerSchemaVersion = 1;

// Ridge regression from the 27 meta-features to clean accuracy. Features are
// standardized at fit time; predictions clamp to [0,1].
struct MetaLearner {
    std::vector<double> weights;        // length 27
    double bias = 0.0;
    double alpha = 1.0;
    std::vector<double> feature_means;  // standardization, length 27
    std::vector<double> feature_stds;
    std::vector<std::string> training_row_ids;  // dataset_id per training row, for leakage audits
    double cv_rmse = 0.0;               // pooled CV RMSE at the chosen alpha

    double predict_clean_acc(const CMVector& cmv) const {
        double z = bias;
        for (std::size_t i = 0; i < kMeasureCount; ++i)
            z += weights[i] * (cmv[i] - feature_means[i]) / feature_stds[i];
        return clamp01(z);
    }

    nlohmann::json to_json() const {
        return {{"schema_version", kMetaLearnerSchemaVersion},
                {"kind", "ridge"},
                {"weights", weights},
                {"bias", bias},
                {"alpha", alpha},
                {"feature_means", feature_means},
                {"feature_stds", feature_stds},
                {"cv_rmse", cv_rmse},
                {"training_row_ids", training_row_ids}};
    }

    static MetaLearner from_json(const nlohmann::json& j) {
        if (j.at("schema_version").get<int>() != kMetaLearnerSchemaVersion)
            throw schema_error("meta-learner schema version mismatch");
        MetaLearner ml;
        ml.weights = j.at("weights").get<std::vector<double>>();
        ml.bias = j.at("bias").get<double>();
        ml.alpha = j.at("alpha").get<double>();
        ml.feature_means = j.at("feature_means").get<std::vector<double>>();
        ml.feature_stds = j.at("feature_stds").get<std::vector<double>>();
        if (j.contains("cv_rmse")) ml.cv_rmse = j.at("cv_rmse").get<double>();
        if (j.contains("training_row_ids"))
            ml.training_row_ids = j.at("training_row_ids").get<std::vector<std::string>>();
        if (ml.weights.size() != kMeasureCount || ml.feature_means.size() != kMeasureCount ||
            ml.feature_stds.size() != kMeasureCount)
            throw schema_error("meta-learner weight vector has wrong length");
        return ml;
    }
};

inline const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> grid{0.01, 0.1, 1.0, 10.0, 100.0};
    return grid;
}

namespace detail {

struct Standardization {
    std::vector<double> means, stds;
};

inline Standardization standardize_rows(const std::vector<const MetaRow*>& rows) {
    Standardization s;
    s.means.assign(kMeasureCount, 0.0);
    s.stds.assign(kMeasureCount, 1.0);
    const double n = static_cast<double>(rows.size());
    for (const MetaRow* r : rows)
        for (std::size_t c = 0; c < kMeasureCount; ++c) s.means[c] += r->cmv[c];
    for (auto& m : s.means) m /= n;
    for (std::size_t c = 0; c < kMeasureCount; ++c) {
        double v = 0.0;
        for (const MetaRow* r : rows) {
            const double dv = r->cmv[c] - s.means[c];
            v += dv * dv;
        }
        v = std::sqrt(v / n);
        s.stds[c] = v > 0.0 ? v : 1.0;
    }
    return s;
}

// Closed-form ridge on standardized features and centered targets:
// w = (X^T X + alpha I)^-1 X^T (y - ybar), bias = ybar (unpenalized).
struct RidgeFit {
    std::vector<double> weights;
    double bias = 0.0;
};

inline RidgeFit ridge_solve(const std::vector<const MetaRow*>& rows, const Standardization& s, double alpha) {
    const std::size_t d = kMeasureCount;
    double ybar = 0.0;
    for (const MetaRow* r : rows) ybar += r->acc_clean;
    ybar /= static_cast<double>(rows.size());

    Matrix gram(d, d);
    std::vector<double> rhs(d, 0.0);
    std::vector<double> x(d);
    for (const MetaRow* r : rows) {
        for (std::size_t c = 0; c < d; ++c) x[c] = (r->cmv[c] - s.means[c]) / s.stds[c];
        const double yc = r->acc_clean - ybar;
        for (std::size_t a = 0; a < d; ++a) {
            rhs[a] += x[a] * yc;
            for (std::size_t b = a; b < d; ++b) gram(a, b) += x[a] * x[b];
        }
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) gram(b, a) = gram(a, b);
        gram(a, a) += alpha;
    }
    RidgeFit fit;
    fit.weights = cholesky_solve(gram, rhs);
    fit.bias = ybar;
    return fit;
}

} // namespace detail

// Fits the meta-learner with alpha chosen by group-aware K-fold CV: folds
// are built over dataset_ids so the variants of one dataset never straddle
// a fold boundary. Ties in CV RMSE resolve toward the larger alpha.
inline MetaLearner fit_metalearner(const MetaDatabase& db, const std::vector<double>& alpha_grid_in,
                                   int folds = 5, std::uint64_t seed = 0) {
    if (db.rows.size() < 10) throw validation_error("fit_metalearner: need at least 10 rows");
    if (alpha_grid_in.empty()) throw validation_error("fit_metalearner: empty alpha grid");
    for (double a : alpha_grid_in)
        if (a <= 0.0) throw validation_error("fit_metalearner: alpha values must be > 0");
    std::vector<double> alpha_grid = alpha_grid_in;
    std::sort(alpha_grid.begin(), alpha_grid.end());

    std::vector<const MetaRow*> all_rows;
    for (const auto& r : db.rows) all_rows.push_back(&r);

    std::vector<std::string> ids = db.dataset_ids();
    if (static_cast<int>(ids.size()) < folds) {
        log::warn("fit_metalearner: only " + std::to_string(ids.size()) + " distinct dataset ids, reducing folds from " +
                  std::to_string(folds));
        folds = static_cast<int>(ids.size());
    }

    double chosen_alpha = alpha_grid.back();
    double chosen_rmse = 0.0;
    if (folds >= 2) {
        Rng rng(derive_seed(seed, "meta_cv"));
        rng.shuffle(ids);
        std::map<std::string, int> fold_of;
        for (std::size_t i = 0; i < ids.size(); ++i) fold_of[ids[i]] = static_cast<int>(i % folds);

        double best_rmse = std::numeric_limits<double>::infinity();
        for (double alpha : alpha_grid) {
            double sq_err = 0.0;
            std::size_t count = 0;
            for (int f = 0; f < folds; ++f) {
                std::vector<const MetaRow*> train, val;
                for (const MetaRow* r : all_rows)
                    (fold_of[r->dataset_id] == f ? val : train).push_back(r);
                if (train.empty() || val.empty()) continue;
                const auto s = detail::standardize_rows(train);
                const auto fit = detail::ridge_solve(train, s, alpha);
                for (const MetaRow* r : val) {
                    double z = fit.bias;
                    for (std::size_t c = 0; c < kMeasureCount; ++c)
                        z += fit.weights[c] * (r->cmv[c] - s.means[c]) / s.stds[c];
                    const double err = clamp01(z) - r->acc_clean;
                    sq_err += err * err;
                    ++count;
                }
            }
            const double rmse = std::sqrt(sq_err / static_cast<double>(count));
            if (rmse <= best_rmse) {  // ties go to the larger alpha (grid is ascending)
                best_rmse = rmse;
                chosen_alpha = alpha;
            }
        }
        chosen_rmse = best_rmse;
    } else {
        chosen_alpha = alpha_grid[alpha_grid.size() / 2];
        log::warn("fit_metalearner: too few dataset ids for CV, using alpha = " + format_double(chosen_alpha));
    }

    const auto s = detail::standardize_rows(all_rows);
    const auto fit = detail::ridge_solve(all_rows, s, chosen_alpha);

    MetaLearner ml;
    ml.weights = fit.weights;
    ml.bias = fit.bias;
    ml.alpha = chosen_alpha;
    ml.feature_means = s.means;
    ml.feature_stds = s.stds;
    ml.cv_rmse = chosen_rmse;
    for (const auto& r : db.rows) ml.training_row_ids.push_back(r.dataset_id);
    return ml;
}

inline MetaLearner fit_metalearner(const MetaDatabase& db, std::uint64_t seed = 0) {
    return fit_metalearner(db, default_alpha_grid(), 5, seed);
}

// Infinity norm of (X^T X + alpha I) w - X^T (y - ybar) on the learner's own
// standardization; the closed-form solve should drive this to ~0.
inline double ridge_residual_inf_norm(const MetaDatabase& db, const MetaLearner& ml) {
    const std::size_t d = kMeasureCount;
    Matrix gram(d, d);
    std::vector<double> rhs(d, 0.0), x(d);
    for (const auto& r : db.rows) {
        for (std::size_t c = 0; c < d; ++c) x[c] = (r.cmv[c] - ml.feature_means[c]) / ml.feature_stds[c];
        const double yc = r.acc_clean - ml.bias;
        for (std::size_t a = 0; a < d; ++a) {
            rhs[a] += x[a] * yc;
            for (std::size_t b = 0; b < d; ++b) gram(a, b) += x[a] * x[b];
        }
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        double lhs = ml.alpha * ml.weights[a];
        for (std::size_t b = 0; b < d; ++b) lhs += gram(a, b) * ml.weights[b];
        worst = std::max(worst, std::abs(lhs - rhs[a]));
    }
    return worst;
}

inline void save_metalearner(const MetaLearner& ml, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << ml.to_json().dump(2) << '\n';
}

inline MetaLearner load_metalearner(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    nlohmann::json j;
    in >> j;
    return MetaLearner::from_json(j);
}

} // namespace diva
