#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/attacks.hpp"
#include "diva/dataset.hpp"
#include "diva/detector.hpp"
#include "diva/metadb.hpp"
#include "diva/metalearner.hpp"
#include "diva/synthetic.hpp"
#include "diva/util.hpp"

namespace diva {

// ---------------------------------------------------------------------------
// ROC / AUC
// ---------------------------------------------------------------------------

struct RocCurve {
    std::vector<double> thresholds;  // unique scores, ascending
    std::vector<double> tpr;         // rate at "score > threshold", non-increasing
    std::vector<double> fpr;
    double auc = 0.0;
};

// Threshold sweep over the unique scores; ties step simultaneously. The AUC
// is the trapezoidal area under the (fpr, tpr) polyline, accumulated with
// integer counts so tied groups contribute their exact diagonal area.
inline RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw validation_error("roc_auc: scores/labels size mismatch");
    std::size_t pos = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw validation_error("roc_auc: labels must be 0/1");
        pos += static_cast<std::size_t>(y);
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw validation_error("roc_auc: both label values must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    double area2 = 0.0;  // 2 * unnormalized area, exact in integers
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> points_desc;  // score -> (tp, fp) before group
    while (i < scores.size()) {
        const double s = scores[order[i]];
        points_desc.push_back({s, {tp, fp}});  // operating point for threshold == s
        std::size_t gp = 0, gn = 0;
        while (i < scores.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? gp : gn) += 1;
            ++i;
        }
        area2 += static_cast<double>(gn) * static_cast<double>(2 * tp + gp);
        tp += gp;
        fp += gn;
    }
    curve.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));

    for (auto it = points_desc.rbegin(); it != points_desc.rend(); ++it) {
        curve.thresholds.push_back(it->first);
        curve.tpr.push_back(static_cast<double>(it->second.first) / static_cast<double>(pos));
        curve.fpr.push_back(static_cast<double>(it->second.second) / static_cast<double>(neg));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Evaluation bank: per dataset, the clean 80-20 split plus every requested
// attack x rate variant, each carrying its meta-database row. All rows use
// the same seed derivation as build_metadb, so a bank slice equals a fresh
// build on the same inputs.
// ---------------------------------------------------------------------------

struct VariantRecord {
    std::string dataset_id;
    Difficulty difficulty = Difficulty::Normal;
    std::optional<double> noise;  // base dataset label-noise rate, when known
    Variant variant = Variant::clean;
    double rate = 0.0;
    Dataset poisoned_train;
    Dataset clean_test;
    MetaRow row;
    std::optional<double> acc_estimated;
    std::optional<double> acc_empirical;
    std::optional<double> score;

    bool is_poisoned() const { return variant != Variant::clean; }
};

struct EvalBank {
    std::vector<VariantRecord> records;

    std::vector<std::string> dataset_ids() const {
        std::set<std::string> ids;
        for (const auto& r : records) ids.insert(r.dataset_id);
        return {ids.begin(), ids.end()};
    }
};

inline EvalBank build_eval_bank(const std::vector<Dataset>& datasets, const std::vector<double>& rates,
                                const std::vector<std::string>& attacks, const MetaDbConfig& cfg) {
    EvalBank bank;
    struct Job {
        std::size_t dataset_index;
        Variant variant;
        double rate;
        std::uint64_t seed;
    };
    std::vector<Split> splits(datasets.size());
    std::vector<Difficulty> difficulty(datasets.size());
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const std::string& id = datasets[i].name;
        splits[i] = train_test_split(datasets[i], 0.8, derive_seed(cfg.seed, "split:" + id));
        difficulty[i] = datasets[i].meta.difficulty
                            ? difficulty_from_string(*datasets[i].meta.difficulty)
                            : categorize_difficulty(datasets[i], derive_seed(cfg.seed, "grade:" + id));
        const std::uint64_t base = derive_seed(cfg.seed, "row:" + id);
        jobs.push_back({i, Variant::clean, 0.0, derive_seed(base, "clean")});
        for (const auto& attack : attacks) {
            const Variant variant = variant_from_string(attack);
            for (double rate : rates)
                jobs.push_back({i, variant, rate, derive_seed(base, attack + "@" + format_double(rate))});
        }
    }

    bank.records.resize(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
        const Job& job = jobs[j];
        const Dataset& base = datasets[job.dataset_index];
        const Split& split = splits[job.dataset_index];
        VariantRecord rec;
        rec.dataset_id = base.name;
        rec.difficulty = difficulty[job.dataset_index];
        rec.noise = base.meta.noise;
        rec.variant = job.variant;
        rec.rate = job.variant == Variant::clean ? 0.0 : job.rate;
        rec.clean_test = split.test;
        switch (job.variant) {
            case Variant::clean: rec.poisoned_train = split.train; break;
            case Variant::sln:
                rec.poisoned_train = sln(split.train, job.rate, derive_seed(job.seed, "attack")).poisoned;
                break;
            case Variant::falfa:
                rec.poisoned_train =
                    falfa(split.train, job.rate, cfg.train.with_seed(derive_seed(job.seed, "attack")), cfg.attack_rounds)
                        .poisoned;
                break;
            case Variant::alfa:
                rec.poisoned_train =
                    alfa(split.train, job.rate, cfg.train.with_seed(derive_seed(job.seed, "attack")), cfg.attack_rounds)
                        .poisoned;
                break;
        }
        // Row pieces: victim fit + clean-test accuracy + measures. The attack
        // already ran above, so assemble the row directly from the variant.
        const Normalizer nz = Normalizer::fit(rec.poisoned_train.features);
        const MLPModel victim = train_mlp(nz.apply(rec.poisoned_train), cfg.train.with_seed(derive_seed(job.seed, "victim")));
        rec.row.dataset_id = rec.dataset_id;
        rec.row.variant = rec.variant;
        rec.row.rate = rec.rate;
        rec.row.seed = job.seed;
        rec.row.acc_clean = accuracy(victim, nz.apply(rec.clean_test));
        rec.row.acc_train_poisoned = accuracy(victim, nz.apply(rec.poisoned_train));
        rec.row.cmv = extract(rec.poisoned_train, derive_seed(job.seed, "cmeasures"));
        bank.records[j] = std::move(rec);
    });
    return bank;
}

// Leave-one-dataset-out estimates: for each dataset id, fit the meta-learner
// on every other dataset's clean/sln/falfa rows, then predict the clean
// accuracy of ALL rows of the held-out dataset (alfa rows included, playing
// the unknown attack). Returns the per-held-out-id learners.
inline std::map<std::string, MetaLearner> lodo_estimates(EvalBank& bank,
                                                         const std::vector<double>& alpha_grid,
                                                         int folds, std::uint64_t seed,
                                                         const std::vector<std::string>& train_attacks = {"sln", "falfa"}) {
    std::set<Variant> train_variants{Variant::clean};
    for (const auto& a : train_attacks) train_variants.insert(variant_from_string(a));

    std::map<std::string, MetaLearner> learners;
    for (const std::string& held_out : bank.dataset_ids()) {
        MetaDatabase db;
        for (const auto& rec : bank.records)
            if (rec.dataset_id != held_out && train_variants.count(rec.variant)) db.rows.push_back(rec.row);
        MetaLearner ml = fit_metalearner(db, alpha_grid, folds, derive_seed(seed, "lodo:" + held_out));
        for (const std::string& id : ml.training_row_ids)
            if (id == held_out)
                throw error("lodo_estimates: held-out dataset '" + held_out + "' leaked into training rows");
        for (auto& rec : bank.records) {
            if (rec.dataset_id != held_out) continue;
            rec.acc_estimated = ml.predict_clean_acc(rec.row.cmv);
            if (rec.acc_empirical) rec.score = *rec.acc_empirical - *rec.acc_estimated;
        }
        learners.emplace(held_out, std::move(ml));
    }
    return learners;
}

// Fills acc_empirical (5-fold CV of the MLP on the suspect training split)
// and the DIVA score for every record selected by the predicate.
inline void empirical_scores(EvalBank& bank, const std::function<bool(const VariantRecord&)>& select,
                             const TrainConfig& cfg, unsigned threads = 1) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < bank.records.size(); ++i)
        if (select(bank.records[i]) && !bank.records[i].acc_empirical) todo.push_back(i);
    parallel_for(todo.size(), threads, [&](std::size_t j) {
        VariantRecord& rec = bank.records[todo[j]];
        rec.acc_empirical =
            cross_val_accuracy(rec.poisoned_train, 5, cfg.with_seed(derive_seed(rec.row.seed, "detect_cv")));
        if (rec.acc_estimated) rec.score = *rec.acc_empirical - *rec.acc_estimated;
    });
}

// ---------------------------------------------------------------------------
// RMSE table (leave-one-dataset-out regression quality, per attack)
// ---------------------------------------------------------------------------

struct RmseTable {
    std::vector<std::string> dataset_ids;                  // rows
    std::vector<std::string> columns;                      // "clean" + attacks
    std::vector<std::vector<double>> rmse;                 // NaN when a cell has no rows
    std::map<std::string, double> mean_per_column;

    double mean_for(const std::string& column) const {
        const auto it = mean_per_column.find(column);
        if (it == mean_per_column.end()) throw validation_error("rmse table: no column '" + column + "'");
        return it->second;
    }
};

inline RmseTable rmse_table(const EvalBank& bank) {
    RmseTable table;
    table.dataset_ids = bank.dataset_ids();
    std::set<Variant> variants;
    for (const auto& rec : bank.records) variants.insert(rec.variant);
    for (Variant v : {Variant::clean, Variant::sln, Variant::falfa, Variant::alfa})
        if (variants.count(v)) table.columns.push_back(to_string(v));

    const double nan = std::numeric_limits<double>::quiet_NaN();
    table.rmse.assign(table.dataset_ids.size(), std::vector<double>(table.columns.size(), nan));
    for (std::size_t i = 0; i < table.dataset_ids.size(); ++i) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const Variant v = variant_from_string(table.columns[c]);
            double sq = 0.0;
            std::size_t count = 0;
            for (const auto& rec : bank.records) {
                if (rec.dataset_id != table.dataset_ids[i] || rec.variant != v) continue;
                if (!rec.acc_estimated) throw validation_error("rmse_table: record missing estimate; run lodo_estimates first");
                const double err = *rec.acc_estimated - rec.row.acc_clean;
                sq += err * err;
                ++count;
            }
            if (count > 0) table.rmse[i][c] = std::sqrt(sq / static_cast<double>(count));
        }
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < table.dataset_ids.size(); ++i) {
            if (std::isnan(table.rmse[i][c])) continue;
            total += table.rmse[i][c];
            ++count;
        }
        table.mean_per_column[table.columns[c]] = count ? total / static_cast<double>(count) : nan;
    }
    return table;
}

// Spec-shaped convenience wrapper: bank + LODO + table in one call.
inline RmseTable lodo_rmse(const std::vector<Dataset>& datasets, const std::vector<std::string>& attacks_eval,
                           const std::vector<double>& rates, const MetaDbConfig& cfg,
                           const std::vector<double>& alpha_grid = default_alpha_grid(), int folds = 5) {
    if (datasets.size() < 3) throw validation_error("lodo_rmse: need at least 3 datasets");
    EvalBank bank = build_eval_bank(datasets, rates, attacks_eval, cfg);
    lodo_estimates(bank, alpha_grid, folds, cfg.seed);
    return rmse_table(bank);
}

// ---------------------------------------------------------------------------
// Heatmaps (difficulty x rate, noise x rate)
// ---------------------------------------------------------------------------

struct HeatmapCell {
    double value = 0.0;
    std::size_t count = 0;  // datasets behind the cell
    bool missing = true;
};

struct HeatmapGrid {
    std::string detector_name;
    std::string row_axis;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;  // "clean" first, then the rates
    std::vector<std::vector<HeatmapCell>> cells;
};

// Generic grid: the clean column reports TNR (score <= threshold), the rate
// columns report TPR (score > threshold). `score_of` supplies the detector
// score; records without one are skipped.
inline HeatmapGrid heatmap_grid(const EvalBank& bank, const std::vector<double>& rates, double threshold,
                                const std::string& detector_name, const std::string& row_axis,
                                const std::vector<std::string>& row_labels,
                                const std::function<std::optional<std::string>(const VariantRecord&)>& row_of,
                                const std::function<std::optional<double>(const VariantRecord&)>& score_of) {
    HeatmapGrid grid;
    grid.detector_name = detector_name;
    grid.row_axis = row_axis;
    grid.row_labels = row_labels;
    grid.col_labels.push_back("clean");
    for (double r : rates) grid.col_labels.push_back(format_double(r));
    grid.cells.assign(row_labels.size(), std::vector<HeatmapCell>(grid.col_labels.size()));

    for (std::size_t ri = 0; ri < row_labels.size(); ++ri) {
        for (std::size_t ci = 0; ci < grid.col_labels.size(); ++ci) {
            std::size_t hits = 0, count = 0;
            for (const auto& rec : bank.records) {
                const auto label = row_of(rec);
                if (!label || *label != row_labels[ri]) continue;
                const bool want_clean = ci == 0;
                if (want_clean != !rec.is_poisoned()) continue;
                if (!want_clean && std::abs(rec.rate - rates[ci - 1]) > 1e-12) continue;
                const auto s = score_of(rec);
                if (!s) continue;
                ++count;
                const bool flagged = *s > threshold;
                if (want_clean ? !flagged : flagged) ++hits;
            }
            auto& cell = grid.cells[ri][ci];
            cell.count = count;
            cell.missing = count == 0;
            cell.value = count ? static_cast<double>(hits) / static_cast<double>(count) : 0.0;
        }
    }
    return grid;
}

inline HeatmapGrid heatmap_by_difficulty(const EvalBank& bank, const std::vector<double>& rates,
                                         double threshold, const std::string& detector_name,
                                         const std::function<std::optional<double>(const VariantRecord&)>& score_of) {
    return heatmap_grid(bank, rates, threshold, detector_name, "difficulty", {"easy", "normal", "hard"},
                        [](const VariantRecord& rec) { return std::optional<std::string>(to_string(rec.difficulty)); },
                        score_of);
}

inline HeatmapGrid heatmap_by_noise(const EvalBank& bank, const std::vector<double>& noise_levels,
                                    const std::vector<double>& rates, double threshold,
                                    const std::string& detector_name,
                                    const std::function<std::optional<double>(const VariantRecord&)>& score_of) {
    std::vector<std::string> labels;
    for (double nl : noise_levels) labels.push_back(format_double(nl));
    return heatmap_grid(bank, rates, threshold, detector_name, "noise", labels,
                        [](const VariantRecord& rec) {
                            return rec.noise ? std::optional<std::string>(format_double(*rec.noise)) : std::nullopt;
                        },
                        score_of);
}

// ---------------------------------------------------------------------------
// Baseline: kNN label-sanitization turned into a dataset-level detector.
// ---------------------------------------------------------------------------

struct BaselineResult {
    double relabel_fraction = 0.0;
    bool poisoned = false;
};

// For each point, the k nearest neighbors (excluding itself, Euclidean on
// z-scored features) vote; when the most common neighbor label reaches
// frequency eta and disagrees with the point, the point would be relabeled.
// Relabeling decisions are all taken against the original labels.
inline double knn_relabel_fraction(const Dataset& ds, int k = 10, double eta = 0.6) {
    validate_dataset(ds, false);
    if (k < 1 || static_cast<std::size_t>(k) >= ds.size())
        throw validation_error("knn_relabel_fraction: need 1 <= k < n");
    const Matrix x = Normalizer::fit(ds.features).apply(ds.features);
    const std::size_t n = ds.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    std::size_t relabeled = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            dist[j] = {j == i ? std::numeric_limits<double>::infinity() : squared_distance(x.row(i), x.row(j)), j};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        int votes1 = 0;
        for (int j = 0; j < k; ++j) votes1 += ds.labels[dist[j].second];
        const int majority = 2 * votes1 > k ? 1 : 0;
        const int majority_count = majority == 1 ? votes1 : k - votes1;
        if (majority != ds.labels[i] &&
            static_cast<double>(majority_count) >= eta * static_cast<double>(k) - 1e-12)
            ++relabeled;
    }
    return static_cast<double>(relabeled) / static_cast<double>(n);
}

inline BaselineResult baseline_knn_defense(const Dataset& ds, int k, double eta, double dataset_threshold) {
    BaselineResult out;
    out.relabel_fraction = knn_relabel_fraction(ds, k, eta);
    out.poisoned = out.relabel_fraction > dataset_threshold;
    return out;
}

// ---------------------------------------------------------------------------
// Plot-ready CSV outputs
// ---------------------------------------------------------------------------

inline void write_rmse_csv(const RmseTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << "dataset_id";
    for (const auto& c : table.columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < table.dataset_ids.size(); ++i) {
        out << table.dataset_ids[i];
        for (double v : table.rmse[i]) out << ',' << (std::isnan(v) ? "" : format_double(v));
        out << '\n';
    }
    out << "mean";
    for (const auto& c : table.columns) {
        const double v = table.mean_per_column.at(c);
        out << ',' << (std::isnan(v) ? "" : format_double(v));
    }
    out << '\n';
}

inline void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << "threshold,fpr,tpr\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
        out << format_double(curve.thresholds[i]) << ',' << format_double(curve.fpr[i]) << ','
            << format_double(curve.tpr[i]) << '\n';
}

inline void write_heatmap_csv(const HeatmapGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << "# detector: " << grid.detector_name << '\n';
    out << "# rows: " << grid.row_axis << '\n';
    out << "# cols: poisoning rate (clean column reports TNR, others TPR)\n";
    out << grid.row_axis;
    for (const auto& c : grid.col_labels) out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < grid.row_labels.size(); ++r) {
        out << grid.row_labels[r];
        for (const auto& cell : grid.cells[r]) out << ',' << (cell.missing ? "" : format_double(cell.value));
        out << '\n';
    }
}

} // namespace diva
