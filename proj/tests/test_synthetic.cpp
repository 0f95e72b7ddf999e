#include <catch2/catch_amalgamated.hpp>

#include "diva/synthetic.hpp"
#include "helpers.hpp"

using namespace diva;

TEST_CASE("difficulty thresholds follow the grading bands") {
    REQUIRE(difficulty_from_accuracy(0.95) == Difficulty::Easy);
    REQUIRE(difficulty_from_accuracy(0.90) == Difficulty::Easy);
    REQUIRE(difficulty_from_accuracy(0.8999) == Difficulty::Normal);
    REQUIRE(difficulty_from_accuracy(0.70) == Difficulty::Normal);  // inclusive on the left
    REQUIRE(difficulty_from_accuracy(0.6999) == Difficulty::Hard);
    REQUIRE(difficulty_from_accuracy(0.0) == Difficulty::Hard);
}

TEST_CASE("well separated blobs grade easy, overlapping blobs grade hard") {
    int easy = 0, hard = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SyntheticSpec spec;
        spec.n = 200;
        spec.d = 5;
        spec.class_sep = 6.0;
        if (categorize_difficulty(gen_synthetic(spec, seed), seed) == Difficulty::Easy) ++easy;
        spec.class_sep = 0.0;
        if (categorize_difficulty(gen_synthetic(spec, 100 + seed), seed) == Difficulty::Hard) ++hard;
    }
    REQUIRE(easy >= 6);  // majority easy
    REQUIRE(hard >= 6);  // majority hard (chance-level task)
}

TEST_CASE("generator is deterministic and balanced") {
    SyntheticSpec spec;
    spec.n = 101;
    spec.d = 4;
    spec.class_sep = 2.0;
    const Dataset a = gen_synthetic(spec, 42);
    const Dataset b = gen_synthetic(spec, 42);
    REQUIRE(a.features == b.features);
    REQUIRE(a.labels == b.labels);
    const std::size_t n1 = a.count_label(1);
    REQUIRE(std::abs(static_cast<long>(n1) - static_cast<long>(a.size() - n1)) <= 1);

    spec.label_noise = 0.0;
    const Dataset c = gen_synthetic(spec, 42);
    REQUIRE(c.features == a.features);  // explicit zero noise matches the default
    REQUIRE(c.labels == a.labels);
}

TEST_CASE("generator label_noise flips the expected count") {
    SyntheticSpec spec;
    spec.n = 100;
    spec.d = 3;
    spec.class_sep = 5.0;
    const Dataset clean = gen_synthetic(spec, 7);
    spec.label_noise = 0.1;
    const Dataset noisy = gen_synthetic(spec, 7);
    REQUIRE(noisy.features == clean.features);
    int flips = 0;
    for (std::size_t i = 0; i < clean.size(); ++i)
        if (noisy.labels[i] != clean.labels[i]) ++flips;
    REQUIRE(flips == 10);
}

TEST_CASE("generator rejects degenerate requests") {
    SyntheticSpec spec;
    spec.n = 10;
    REQUIRE_THROWS_AS(gen_synthetic(spec, 1), validation_error);
    spec.n = 50;
    spec.d = 1;
    REQUIRE_THROWS_AS(gen_synthetic(spec, 1), validation_error);
}

TEST_CASE("random labels grade hard") {
    Dataset ds = testutil::random_dataset(120, 4, 31);
    REQUIRE(categorize_difficulty(ds, 5) == Difficulty::Hard);
}
