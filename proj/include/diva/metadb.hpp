#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/attacks.hpp"
#include "diva/classifiers.hpp"
#include "diva/cmeasures.hpp"
#include "diva/dataset.hpp"
#include "diva/log.hpp"
#include "diva/util.hpp"

namespace diva {

enum class Variant { clean, sln, falfa, alfa };

inline std::string to_string(Variant v) {
    switch (v) {
        case Variant::clean: return "clean";
        case Variant::sln: return "sln";
        case Variant::falfa: return "falfa";
        default: return "alfa";
    }
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "clean") return Variant::clean;
    if (s == "sln") return Variant::sln;
    if (s == "falfa") return Variant::falfa;
    if (s == "alfa") return Variant::alfa;
    throw schema_error("unknown variant '" + s + "'");
}

// One meta-database row: meta-features of a (possibly poisoned) training
// split, plus the victim's accuracy on the untouched test split.
struct MetaRow {
    std::string dataset_id;
    Variant variant = Variant::clean;
    double rate = 0.0;
    std::uint64_t seed = 0;
    CMVector cmv;                     // extracted from the training split only
    double acc_clean = 0.0;           // victim accuracy on the clean test split
    double acc_train_poisoned = 0.0;  // diagnostic: victim accuracy on its own training data

    std::string key() const {
        return dataset_id + "/" + to_string(variant) + "/" + format_double(rate) + "/" + std::to_string(seed);
    }
};

struct MetaDbConfig {
    std::vector<double> rates{0.05, 0.10, 0.20, 0.30};
    std::vector<std::string> attacks{"sln", "falfa"};
    TrainConfig train;
    int attack_rounds = 5;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double max_failure_fraction = 0.20;

    nlohmann::json to_json() const {
        return {{"rates", rates},
                {"attacks", attacks},
                {"epochs", train.epochs},
                {"learning_rate", train.learning_rate},
                {"batch_size", train.batch_size},
                {"l2", train.l2},
                {"attack_rounds", attack_rounds},
                {"seed", seed}};
    }
};

inline constexpr int kMetaDbSchemaVersion = 1;
inline constexpr const char* kMetaDbSchemaTag = "# diva.metadb.v1";

struct MetaDatabase {
    std::vector<MetaRow> rows;
    nlohmann::json build_config;

    std::vector<std::string> dataset_ids() const {
        std::set<std::string> ids;
        for (const auto& r : rows) ids.insert(r.dataset_id);
        return {ids.begin(), ids.end()};
    }

    MetaDatabase filter(const std::function<bool(const MetaRow&)>& keep) const {
        MetaDatabase out;
        out.build_config = build_config;
        for (const auto& r : rows)
            if (keep(r)) out.rows.push_back(r);
        return out;
    }
};

// Poison the clean training split per `variant`, train the MLP victim on it,
//評valuate on the clean test split, and extract C-Measures from the poisoned
// training split. `seed` drives the attack and all model fits.
inline MetaRow make_meta_row(const std::string& dataset_id, const Dataset& train_split,
                             const Dataset& test_split, Variant variant, double rate,
                             std::uint64_t seed, const TrainConfig& cfg, int attack_rounds = 5) {
    Dataset poisoned;
    switch (variant) {
        case Variant::clean: poisoned = train_split; break;
        case Variant::sln: poisoned = sln(train_split, rate, derive_seed(seed, "attack")).poisoned; break;
        case Variant::falfa:
            poisoned = falfa(train_split, rate, cfg.with_seed(derive_seed(seed, "attack")), attack_rounds).poisoned;
            break;
        case Variant::alfa:
            poisoned = alfa(train_split, rate, cfg.with_seed(derive_seed(seed, "attack")), attack_rounds).poisoned;
            break;
    }

    const Normalizer nz = Normalizer::fit(poisoned.features);
    const MLPModel victim = train_mlp(nz.apply(poisoned), cfg.with_seed(derive_seed(seed, "victim")));

    MetaRow row;
    row.dataset_id = dataset_id;
    row.variant = variant;
    row.rate = variant == Variant::clean ? 0.0 : rate;
    row.seed = seed;
    row.acc_clean = accuracy(victim, nz.apply(test_split));
    row.acc_train_poisoned = accuracy(victim, nz.apply(poisoned));
    row.cmv = extract(poisoned, derive_seed(seed, "cmeasures"));
    return row;
}

namespace detail {

struct RowJob {
    std::string dataset_id;
    Variant variant;
    double rate;
    const Dataset* train;
    const Dataset* test;
    std::uint64_t seed;
};

} // namespace detail

// Builds the meta-database: per dataset an 80-20 split, one clean row, and
// one row per (attack x rate). Failed rows are skipped with a warning; the
// build aborts only when more than max_failure_fraction of rows fail. Rows
// come out sorted by key so rebuilds are byte-identical at any thread count.
inline MetaDatabase build_metadb(const std::vector<Dataset>& datasets, const MetaDbConfig& cfg) {
    if (datasets.empty()) throw validation_error("build_metadb: no datasets");
    std::set<std::string> names;
    for (const auto& ds : datasets)
        if (!names.insert(ds.name).second)
            throw validation_error("build_metadb: duplicate dataset name '" + ds.name + "'");

    std::vector<Split> splits(datasets.size());
    for (std::size_t i = 0; i < datasets.size(); ++i)
        splits[i] = train_test_split(datasets[i], 0.8, derive_seed(cfg.seed, "split:" + datasets[i].name));

    std::vector<detail::RowJob> jobs;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        const std::string& id = datasets[i].name;
        const std::uint64_t base = derive_seed(cfg.seed, "row:" + id);
        jobs.push_back({id, Variant::clean, 0.0, &splits[i].train, &splits[i].test, derive_seed(base, "clean")});
        for (const auto& attack : cfg.attacks) {
            const Variant variant = variant_from_string(attack);
            for (double rate : cfg.rates)
                jobs.push_back({id, variant, rate, &splits[i].train, &splits[i].test,
                                derive_seed(base, attack + "@" + format_double(rate))});
        }
    }

    std::vector<std::optional<MetaRow>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    parallel_for(jobs.size(), cfg.threads, [&](std::size_t j) {
        const auto& job = jobs[j];
        try {
            results[j] = make_meta_row(job.dataset_id, *job.train, *job.test, job.variant, job.rate,
                                       job.seed, cfg.train, cfg.attack_rounds);
        } catch (const std::exception& e) {
            failures[j] = e.what();
        }
    });

    MetaDatabase db;
    std::size_t failed = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (results[j]) {
            db.rows.push_back(std::move(*results[j]));
        } else {
            ++failed;
            log::warn("metadb row " + jobs[j].dataset_id + "/" + to_string(jobs[j].variant) + "@" +
                      format_double(jobs[j].rate) + " failed: " + failures[j]);
        }
    }
    if (static_cast<double>(failed) > cfg.max_failure_fraction * static_cast<double>(jobs.size()))
        throw error("build_metadb: " + std::to_string(failed) + " of " + std::to_string(jobs.size()) +
                    " rows failed (limit " + format_double(cfg.max_failure_fraction * 100) + "%)");

    std::sort(db.rows.begin(), db.rows.end(),
              [](const MetaRow& a, const MetaRow& b) { return a.key() < b.key(); });
    std::set<std::string> keys;
    for (const auto& r : db.rows)
        if (!keys.insert(r.key()).second) throw error("build_metadb: duplicate row key " + r.key());
    db.build_config = cfg.to_json();
    db.build_config["schema_version"] = kMetaDbSchemaVersion;
    return db;
}

inline std::vector<std::string> metadb_header_columns() {
    std::vector<std::string> cols = {"dataset_id", "variant", "rate", "seed"};
    for (const auto& name : measure_names()) cols.push_back(name);
    cols.push_back("acc_clean");
    cols.push_back("acc_train_poisoned");
    return cols;
}

inline void save_metadb(const MetaDatabase& db, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << kMetaDbSchemaTag << '\n';
    const auto cols = metadb_header_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << cols[c] << (c + 1 < cols.size() ? ',' : '\n');
    for (const auto& r : db.rows) {
        out << r.dataset_id << ',' << to_string(r.variant) << ',' << format_double(r.rate) << ',' << r.seed;
        for (double v : r.cmv.values) out << ',' << format_double(v);
        out << ',' << format_double(r.acc_clean) << ',' << format_double(r.acc_train_poisoned) << '\n';
    }
    if (!out) throw io_error("failed writing '" + path.string() + "'");
    std::ofstream side(sidecar_path(path));
    side << db.build_config.dump(2) << '\n';
}

inline MetaDatabase load_metadb(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw schema_error("'" + path.string() + "': empty file");
    if (strip_cr(line) != kMetaDbSchemaTag)
        throw schema_error("'" + path.string() + "': schema version mismatch, expected " +
                           std::string(kMetaDbSchemaTag));
    if (!std::getline(in, line)) throw schema_error("'" + path.string() + "': missing header");
    const auto cols = split_csv_line(strip_cr(line));
    const auto expected = metadb_header_columns();
    if (cols != expected) {
        std::string missing;
        for (const auto& c : expected)
            if (std::find(cols.begin(), cols.end(), c) == cols.end()) missing += c + " ";
        throw schema_error("'" + path.string() + "': header mismatch" +
                           (missing.empty() ? "" : " (missing: " + missing + ")"));
    }

    MetaDatabase db;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++rowno;
        const auto cells = split_csv_line(line);
        if (cells.size() != expected.size())
            throw schema_error("'" + path.string() + "' row " + std::to_string(rowno) + ": wrong column count");
        MetaRow r;
        r.dataset_id = cells[0];
        r.variant = variant_from_string(cells[1]);
        r.rate = parse_double(cells[2]);
        r.seed = std::stoull(cells[3]);
        for (std::size_t i = 0; i < kMeasureCount; ++i) r.cmv[i] = parse_double(cells[4 + i]);
        r.acc_clean = parse_double(cells[4 + kMeasureCount]);
        r.acc_train_poisoned = parse_double(cells[5 + kMeasureCount]);
        db.rows.push_back(std::move(r));
    }
    std::set<std::string> keys;
    for (const auto& r : db.rows)
        if (!keys.insert(r.key()).second)
            throw schema_error("'" + path.string() + "': duplicate row key " + r.key());
    const auto side = sidecar_path(path);
    if (std::filesystem::exists(side)) {
        std::ifstream sin(side);
        sin >> db.build_config;
        if (db.build_config.contains("schema_version") &&
            db.build_config["schema_version"].get<int>() != kMetaDbSchemaVersion)
            throw schema_error("'" + path.string() + "': sidecar schema version mismatch");
    }
    return db;
}

} // namespace diva
