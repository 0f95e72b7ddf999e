#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <set>

#include "diva/dataset.hpp"
#include "helpers.hpp"

using namespace diva;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

} // namespace

TEST_CASE("load_csv maps rows and columns") {
    testutil::TempDir tmp("load");
    const auto path = tmp.path() / "small.csv";
    write_file(path, "f1,f2,y\n1,2,0\n3,4,1\n5,6,0\n7,8,1\n");
    const Dataset ds = load_csv(path);
    REQUIRE(ds.size() == 4);
    REQUIRE(ds.dim() == 2);
    REQUIRE(ds.features(2, 1) == 6.0);
    REQUIRE(ds.labels == std::vector<int>{0, 1, 0, 1});
    REQUIRE(ds.name == "small");
    REQUIRE(ds.meta.source.has_value());
}

TEST_CASE("load_csv rejects bad labels naming the row") {
    testutil::TempDir tmp("badlabel");
    const auto path = tmp.path() / "bad.csv";
    write_file(path, "f1,y\n1,0\n2,1\n3,2\n4,1\n");
    REQUIRE_THROWS_WITH(load_csv(path), Catch::Matchers::ContainsSubstring("row 3"));
}

TEST_CASE("load_csv rejects schema and parse problems") {
    testutil::TempDir tmp("schema");
    write_file(tmp.path() / "cols.csv", "f1,f2,y\n1,2,0\n3,1\n");
    REQUIRE_THROWS_AS(load_csv(tmp.path() / "cols.csv"), schema_error);
    write_file(tmp.path() / "parse.csv", "f1,y\n1,0\nfoo,1\n2,0\n3,1\n");
    REQUIRE_THROWS_WITH(load_csv(tmp.path() / "parse.csv"), Catch::Matchers::ContainsSubstring("row 2"));
    write_file(tmp.path() / "oneclass.csv", "f1,y\n1,1\n2,1\n3,1\n4,1\n");
    REQUIRE_THROWS_AS(load_csv(tmp.path() / "oneclass.csv"), validation_error);
    write_file(tmp.path() / "header.csv", "a,b,y\n1,2,0\n3,4,1\n");
    REQUIRE_THROWS_AS(load_csv(tmp.path() / "header.csv"), schema_error);
}

TEST_CASE("save/load round-trip preserves features exactly") {
    testutil::TempDir tmp("roundtrip");
    const Dataset ds = testutil::random_dataset(50, 5, 99);
    const auto path = tmp.path() / "rt.csv";
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.size() == ds.size());
    REQUIRE(back.dim() == ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        REQUIRE(back.labels[i] == ds.labels[i]);
        for (std::size_t c = 0; c < ds.dim(); ++c)
            REQUIRE(back.features(i, c) == ds.features(i, c));  // exact, not 1e-12
    }
}

TEST_CASE("sidecar meta json survives the round-trip") {
    testutil::TempDir tmp("sidecar");
    Dataset ds = testutil::random_dataset(20, 2, 5);
    ds.meta.difficulty = "easy";
    ds.meta.noise = 0.05;
    ds.meta.attack = "sln";
    ds.meta.rate = 0.1;
    ds.meta.seed = 42;
    ds.meta.flipped_indices = std::vector<std::size_t>{1, 3};
    const auto path = tmp.path() / "meta.csv";
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.meta.difficulty == "easy");
    REQUIRE(back.meta.noise == 0.05);
    REQUIRE(back.meta.attack == "sln");
    REQUIRE(back.meta.rate == 0.1);
    REQUIRE(back.meta.seed == 42);
    REQUIRE(back.meta.flipped_indices == std::vector<std::size_t>{1, 3});
}

TEST_CASE("normalizer yields zero mean unit std and passes zero-variance through") {
    Dataset ds = testutil::random_dataset(64, 3, 17);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.features(i, 1) = 7.5;  // constant feature
    const Normalizer nz = Normalizer::fit(ds.features);
    REQUIRE(nz.stds[1] == 1.0);
    const Matrix z = nz.apply(ds.features);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) mean += z(i, c);
        mean /= static_cast<double>(z.rows());
        REQUIRE(std::abs(mean) < 1e-9);
        if (c != 1) {
            double var = 0.0;
            for (std::size_t i = 0; i < z.rows(); ++i) var += z(i, c) * z(i, c);
            REQUIRE(std::sqrt(var / static_cast<double>(z.rows())) == Catch::Approx(1.0).margin(1e-9));
        } else {
            for (std::size_t i = 0; i < z.rows(); ++i) REQUIRE(z(i, 1) == 0.0);
        }
    }
}

TEST_CASE("train_test_split is stratified, disjoint, deterministic") {
    const Dataset ds = testutil::blobs(100, 3.0, 21);
    const Split a = train_test_split(ds, 0.8, 7);
    const Split b = train_test_split(ds, 0.8, 7);
    REQUIRE(a.train_indices == b.train_indices);
    REQUIRE(a.test_indices == b.test_indices);
    REQUIRE(a.train.size() == 80);
    REQUIRE(a.test.size() == 20);

    std::set<std::size_t> train_set(a.train_indices.begin(), a.train_indices.end());
    for (std::size_t i : a.test_indices) REQUIRE(train_set.count(i) == 0);
    REQUIRE(a.train_indices.size() + a.test_indices.size() == ds.size());

    const double p_orig = static_cast<double>(ds.count_label(1)) / static_cast<double>(ds.size());
    const double p_train = static_cast<double>(a.train.count_label(1)) / static_cast<double>(a.train.size());
    const double p_test = static_cast<double>(a.test.count_label(1)) / static_cast<double>(a.test.size());
    REQUIRE(std::abs(p_train - p_orig) <= 0.02);
    REQUIRE(std::abs(p_test - p_orig) <= 0.02 + 1e-12);
}

TEST_CASE("split of a 5/5 dataset lands 4/4 train, 1/1 test") {
    std::vector<std::pair<double, int>> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i), 0});
    for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(10 + i), 1});
    const Dataset ds = testutil::one_dimensional(pts);
    const Split s = train_test_split(ds, 0.8, 3);
    REQUIRE(s.train.count_label(0) == 4);
    REQUIRE(s.train.count_label(1) == 4);
    REQUIRE(s.test.count_label(0) == 1);
    REQUIRE(s.test.count_label(1) == 1);
}

TEST_CASE("split refuses classes with fewer than two members") {
    const Dataset ds = testutil::one_dimensional({{0, 0}, {1, 0}, {2, 0}, {3, 1}});
    REQUIRE_THROWS_AS(train_test_split(ds, 0.8, 1), validation_error);
}

TEST_CASE("stratification holds within 2 points across random datasets") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset ds = testutil::random_dataset(50 + 13 * seed, 3, 1000 + seed);
        const Split s = train_test_split(ds, 0.8, seed);
        const double p = static_cast<double>(ds.count_label(1)) / static_cast<double>(ds.size());
        const double pt = static_cast<double>(s.train.count_label(1)) / static_cast<double>(s.train.size());
        REQUIRE(std::abs(pt - p) <= 0.02 + 1e-12);
    }
}

TEST_CASE("inject_label_noise flips exactly round(n * rate) labels") {
    const Dataset ds = testutil::blobs(100, 4.0, 5);

    SECTION("rate zero is the identity") {
        const Dataset out = inject_label_noise(ds, 0.0, 9);
        REQUIRE(out.labels == ds.labels);
        REQUIRE(out.features == ds.features);
    }

    SECTION("n=10 rate=0.2 flips exactly two") {
        std::vector<std::pair<double, int>> pts;
        for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i), 0});
        for (int i = 0; i < 5; ++i) pts.push_back({static_cast<double>(i + 10), 1});
        const Dataset small = testutil::one_dimensional(pts);
        const Dataset out = inject_label_noise(small, 0.2, 4);
        int flips = 0;
        for (std::size_t i = 0; i < small.size(); ++i)
            if (out.labels[i] != small.labels[i]) ++flips;
        REQUIRE(flips == 2);
        REQUIRE(out.meta.noise == 0.2);
    }

    SECTION("flip count and feature identity across rates and seeds") {
        for (double rate : {0.05, 0.1, 0.25, 0.4, 0.5}) {
            for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
                const Dataset out = inject_label_noise(ds, rate, seed);
                int flips = 0;
                for (std::size_t i = 0; i < ds.size(); ++i)
                    if (out.labels[i] != ds.labels[i]) ++flips;
                REQUIRE(flips == static_cast<int>(std::llround(rate * 100)));
                REQUIRE(out.features == ds.features);
                const Dataset again = inject_label_noise(ds, rate, seed);
                REQUIRE(again.labels == out.labels);
            }
        }
    }

    SECTION("rate outside [0, 0.5] is rejected") {
        REQUIRE_THROWS_AS(inject_label_noise(ds, 0.51, 1), validation_error);
        REQUIRE_THROWS_AS(inject_label_noise(ds, -0.1, 1), validation_error);
    }
}

TEST_CASE("noise grid over 50 base datasets yields 450 variants") {
    std::size_t count = 0;
    for (std::uint64_t b = 0; b < 50; ++b) {
        const Dataset base = testutil::blobs(20, 3.0, 7000 + b, 2);
        for (int step = 0; step <= 8; ++step) {
            const Dataset noisy = inject_label_noise(base, 0.05 * step, 100 + step);
            REQUIRE(noisy.size() == base.size());
            ++count;
        }
    }
    REQUIRE(count == 450);
}

TEST_CASE("validate_dataset catches structural problems") {
    Dataset tiny = testutil::one_dimensional({{0, 0}, {1, 1}, {2, 0}});
    REQUIRE_THROWS_AS(validate_dataset(tiny), validation_error);  // n < 4

    Dataset nan_ds = testutil::one_dimensional({{0, 0}, {1, 1}, {2, 0}, {3, 1}});
    nan_ds.features(2, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(validate_dataset(nan_ds), validation_error);
}
