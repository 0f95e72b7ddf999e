#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "diva/attacks.hpp"
#include "diva/synthetic.hpp"
#include "helpers.hpp"

using namespace diva;

namespace {

std::size_t count_flips(const Dataset& before, const Dataset& after) {
    std::size_t flips = 0;
    for (std::size_t i = 0; i < before.size(); ++i)
        if (before.labels[i] != after.labels[i]) ++flips;
    return flips;
}

} // namespace

TEST_CASE("sln flips exactly round(n * rate) labels and nothing else") {
    const Dataset ds = testutil::blobs(100, 4.0, 3);

    SECTION("rate zero leaves the dataset alone") {
        const AttackResult r = sln(ds, 0.0, 1);
        REQUIRE(r.flipped_indices.empty());
        REQUIRE(r.poisoned.labels == ds.labels);
        REQUIRE(r.poisoned.features == ds.features);
    }

    SECTION("n=10 rate=0.2 flips exactly 2") {
        std::vector<std::pair<double, int>> pts;
        for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i), 0});
        for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i) + 10, 1});
        const AttackResult r = sln(testutil::one_dimensional(pts), 0.2, 5);
        REQUIRE(r.flipped_indices.size() == 2);
    }

    SECTION("flip list matches the label diff and is sorted") {
        const AttackResult r = sln(ds, 0.3, 7);
        REQUIRE(r.flipped_indices.size() == 30);
        REQUIRE(std::is_sorted(r.flipped_indices.begin(), r.flipped_indices.end()));
        for (std::size_t i : r.flipped_indices) REQUIRE(r.poisoned.labels[i] == 1 - ds.labels[i]);
        REQUIRE(count_flips(ds, r.poisoned) == 30);
        REQUIRE(r.poisoned.meta.attack == "sln");
        REQUIRE(r.poisoned.meta.rate == 0.3);
    }

    SECTION("out-of-range rate is rejected") {
        REQUIRE_THROWS_AS(sln(ds, 0.6, 1), validation_error);
    }
}

TEST_CASE("attack budgets and determinism hold for all attacks") {
    const Dataset ds = testutil::blobs(60, 5.0, 9);
    TrainConfig cfg;
    cfg.epochs = 120;
    cfg.seed = 4;
    for (const std::string name : {"sln", "falfa", "alfa"}) {
        const AttackResult a = run_attack(name, ds, 0.25, cfg);
        const AttackResult b = run_attack(name, ds, 0.25, cfg);
        REQUIRE(a.poisoned.labels == b.poisoned.labels);
        REQUIRE(a.flipped_indices == b.flipped_indices);
        REQUIRE(a.poisoned.features == ds.features);
        REQUIRE(a.poisoned.size() == ds.size());
        const std::size_t budget = static_cast<std::size_t>(std::floor(0.25 * 60));
        if (name == "sln") {
            REQUIRE(a.flipped_indices.size() == std::llround(0.25 * 60));
        } else {
            REQUIRE(a.flipped_indices.size() <= budget);
        }
    }
    REQUIRE_THROWS_AS(run_attack("poissvm", ds, 0.1, cfg), usage_error);
}

TEST_CASE("falfa at rate zero is the identity") {
    const Dataset ds = testutil::blobs(40, 3.0, 2);
    TrainConfig cfg;
    cfg.epochs = 30;
    const AttackResult r = falfa(ds, 0.0, cfg);
    REQUIRE(r.poisoned.labels == ds.labels);
    REQUIRE(r.rounds_run == 0);
}

TEST_CASE("falfa stops early once the flip set repeats") {
    const Dataset ds = testutil::blobs(60, 6.0, 21);
    TrainConfig cfg;
    cfg.epochs = 150;
    cfg.seed = 8;
    const AttackResult r = falfa(ds, 0.05, cfg, 8);
    REQUIRE(r.rounds_run < 8);  // fixed point well before the round cap
    REQUIRE(r.flipped_indices.size() == 3);
}

TEST_CASE("falfa degrades clean test accuracy while training accuracy stays high") {
    // Fig-3-style check on one easy dataset; the acceptance suite sweeps 10.
    const Dataset ds = testutil::blobs(200, 6.0, 31);
    const Split split = train_test_split(ds, 0.8, 5);
    const Normalizer nz = Normalizer::fit(split.train.features);
    TrainConfig cfg;
    cfg.seed = 3;

    const MLPModel clean_model = train_mlp(nz.apply(split.train), cfg);
    const double clean_train = accuracy(clean_model, nz.apply(split.train));
    const double clean_test = accuracy(clean_model, nz.apply(split.test));

    const AttackResult r = falfa(split.train, 0.3, cfg);
    const Dataset poisoned = nz.apply(r.poisoned);
    const MLPModel victim = train_mlp(poisoned, cfg);
    const double p_train = accuracy(victim, poisoned);
    const double p_test = accuracy(victim, nz.apply(split.test));

    REQUIRE(clean_test - p_test >= 0.10);          // test accuracy drops
    REQUIRE(clean_train - p_train <= 0.10);        // training accuracy holds
}

TEST_CASE("sln training and cv accuracy fall together") {
    const Dataset ds = testutil::blobs(200, 6.0, 33);
    const Split split = train_test_split(ds, 0.8, 6);
    TrainConfig cfg;
    cfg.seed = 11;
    const AttackResult r = sln(split.train, 0.3, 17);
    const Normalizer nz = Normalizer::fit(r.poisoned.features);
    const Dataset poisoned = nz.apply(r.poisoned);
    const MLPModel victim = train_mlp(poisoned, cfg);
    const double train_acc = accuracy(victim, poisoned);
    const double cv_acc = cross_val_accuracy(r.poisoned, 5, cfg);
    REQUIRE(std::abs(train_acc - cv_acc) <= 0.10);  // both sink, no train/test gap
}

TEST_CASE("alfa at rate zero is the identity") {
    const Dataset ds = testutil::blobs(40, 3.0, 12);
    TrainConfig cfg;
    cfg.epochs = 30;
    const AttackResult r = alfa(ds, 0.0, cfg);
    REQUIRE(r.poisoned.labels == ds.labels);
}

TEST_CASE("alfa single-flip pick matches the exhaustive retrain oracle") {
    // 1-D separable set: the greedy pick must match the flip that maximizes
    // the surrogate's post-retrain error on the original labels.
    const Dataset ds = testutil::one_dimensional({{-3.0, 0}, {-2.5, 0}, {-2.0, 0}, {-0.3, 0},
                                                  {0.3, 1}, {2.0, 1}, {2.5, 1}, {3.0, 1}});
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 13;
    const AttackResult r = alfa(ds, 0.13, cfg, 1);  // budget = floor(8 * 0.13) = 1
    REQUIRE(r.flipped_indices.size() == 1);

    const Normalizer nz = Normalizer::fit(ds.features);
    double best_error = -1.0;
    std::vector<std::size_t> argmax;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        Dataset flipped = ds;
        flipped.labels[i] = 1 - flipped.labels[i];
        const RFFModel m = train_rff(nz.apply(flipped), cfg);
        const double err = 1.0 - accuracy(m, nz.apply(ds));  // error on original labels
        if (err > best_error + 1e-9) {
            best_error = err;
            argmax = {i};
        } else if (err > best_error - 1e-9) {
            argmax.push_back(i);
        }
    }
    REQUIRE(std::find(argmax.begin(), argmax.end(), r.flipped_indices[0]) != argmax.end());

    // the greedy pick is one of the two boundary points
    REQUIRE((r.flipped_indices[0] == 3 || r.flipped_indices[0] == 4));
}

TEST_CASE("alfa on hard data raises training accuracy with a small test shift") {
    const Dataset ds = testutil::blobs(200, 0.5, 35);
    const Split split = train_test_split(ds, 0.8, 7);
    const Normalizer nz = Normalizer::fit(split.train.features);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 15;

    const RFFModel clean_model = train_rff(nz.apply(split.train), cfg);
    const double clean_train = accuracy(clean_model, nz.apply(split.train));
    const double clean_test = accuracy(clean_model, nz.apply(split.test));

    const AttackResult r = alfa(split.train, 0.3, cfg);
    const Dataset poisoned = nz.apply(r.poisoned);
    const RFFModel victim = train_rff(poisoned, cfg);
    const double p_train = accuracy(victim, poisoned);
    const double p_test = accuracy(victim, nz.apply(split.test));

    REQUIRE(p_train > clean_train);                 // relabeling agrees with the boundary
    REQUIRE(std::abs(clean_test - p_test) < 0.08);  // little room to fall on hard data
}

TEST_CASE("falfa outdamages sln at the same rate on easy data") {
    // mini version of the effectiveness property; acceptance runs 10 datasets
    std::vector<double> falfa_drop, sln_drop, falfa_gap, sln_gap;
    for (std::uint64_t seed : {101, 102, 103}) {
        const Dataset ds = testutil::blobs(160, 6.0, seed);
        const Split split = train_test_split(ds, 0.8, seed);
        const Normalizer nz = Normalizer::fit(split.train.features);
        TrainConfig cfg;
        cfg.seed = seed;
        const MLPModel clean_model = train_mlp(nz.apply(split.train), cfg);
        const double clean_test = accuracy(clean_model, nz.apply(split.test));

        const AttackResult fa = falfa(split.train, 0.3, cfg);
        const Dataset ftr = nz.apply(fa.poisoned);
        const MLPModel fm = train_mlp(ftr, cfg);
        falfa_drop.push_back(clean_test - accuracy(fm, nz.apply(split.test)));
        falfa_gap.push_back(accuracy(fm, ftr) - accuracy(fm, nz.apply(split.test)));

        const AttackResult sl = sln(split.train, 0.3, seed);
        const Dataset str = nz.apply(sl.poisoned);
        const MLPModel sm = train_mlp(str, cfg);
        sln_drop.push_back(clean_test - accuracy(sm, nz.apply(split.test)));
        sln_gap.push_back(accuracy(sm, str) - accuracy(sm, nz.apply(split.test)));
    }
    REQUIRE(median(falfa_drop) >= median(sln_drop));
    REQUIRE(median(falfa_gap) > median(sln_gap));
}
