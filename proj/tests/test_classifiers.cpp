#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "diva/classifiers.hpp"
#include "diva/synthetic.hpp"
#include "helpers.hpp"

using namespace diva;

namespace {

Dataset normalized(const Dataset& ds) {
    return Normalizer::fit(ds.features).apply(ds);
}

// XOR-style four-blob layout: linearly inseparable, nonlinearly easy.
Dataset xor_blobs(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.features = Matrix(n, 2);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int qx = static_cast<int>(i % 2);
        const int qy = static_cast<int>((i / 2) % 2);
        ds.features(i, 0) = (qx ? 3.0 : -3.0) + 0.5 * rng.normal();
        ds.features(i, 1) = (qy ? 3.0 : -3.0) + 0.5 * rng.normal();
        ds.labels[i] = qx ^ qy;
    }
    ds.name = "xor";
    return ds;
}

} // namespace

TEST_CASE("train_linear separates a 1-D margin problem") {
    const Dataset ds = testutil::one_dimensional({{-2, 0}, {-1, 0}, {1, 1}, {2, 1}});
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 1;
    const LinearModel m = train_linear(ds, cfg);
    REQUIRE(m.weights[0] > 0.0);
    REQUIRE(accuracy(m, ds) == 1.0);
}

TEST_CASE("train_linear handles duplicated single points per class") {
    const Dataset ds = testutil::one_dimensional({{-1, 0}, {-1, 0}, {1, 1}, {1, 1}});
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 2;
    const LinearModel m = train_linear(ds, cfg);
    REQUIRE(accuracy(m, ds) == 1.0);
}

TEST_CASE("huge l2 collapses the weights") {
    const Dataset ds = normalized(testutil::blobs(60, 4.0, 3));
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.l2 = 1e6;
    cfg.seed = 3;
    const LinearModel m = train_linear(ds, cfg);
    REQUIRE(std::sqrt(dot(m.weights, m.weights)) < 1e-2);
}

TEST_CASE("linear objective never ends above its first epoch") {
    const Dataset ds = normalized(testutil::random_dataset(80, 4, 11));
    TrainConfig cfg;
    cfg.epochs = 100;
    cfg.seed = 7;
    const LinearModel m = train_linear(ds, cfg);
    // one epoch, same seed: the best-snapshot contract means the returned
    // objective can only improve with more epochs
    TrainConfig one = cfg;
    one.epochs = 1;
    const LinearModel first = train_linear(ds, one);
    REQUIRE(detail::linear_objective(m, ds.features, ds.labels, cfg.l2) <=
            detail::linear_objective(first, ds.features, ds.labels, cfg.l2) + 1e-12);
}

TEST_CASE("linear decision is stable under duplicating the training set") {
    const Dataset ds = testutil::one_dimensional({{-2, 0}, {-1, 0}, {1, 1}, {2, 1}});
    Dataset doubled;
    doubled.features = Matrix(8, 1);
    doubled.labels.resize(8);
    for (int r = 0; r < 2; ++r)
        for (std::size_t i = 0; i < 4; ++i) {
            doubled.features(r * 4 + i, 0) = ds.features(i, 0);
            doubled.labels[r * 4 + i] = ds.labels[i];
        }
    doubled.name = "doubled";
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 5;
    const LinearModel a = train_linear(ds, cfg);
    const LinearModel b = train_linear(doubled, cfg);
    REQUIRE(a.predict(ds.features) == b.predict(ds.features));
}

TEST_CASE("train_mlp reaches high accuracy on separable blobs") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset ds = normalized(testutil::blobs(120, 6.0, 40 + seed));
        TrainConfig cfg;
        cfg.seed = seed;
        const MLPModel m = train_mlp(ds, cfg);
        if (accuracy(m, ds) >= 0.98) ++wins;
    }
    REQUIRE(wins == 10);
}

TEST_CASE("train_mlp memorizes random labels while CV stays at chance") {
    const Dataset ds = normalized(testutil::random_dataset(200, 5, 77));
    TrainConfig cfg;
    cfg.learning_rate = 0.05;  // memorization needs a hotter run than the default
    cfg.epochs = 1000;
    cfg.l2 = 0.0;
    cfg.seed = 4;
    const MLPModel m = train_mlp(ds, cfg);
    REQUIRE(accuracy(m, ds) >= 0.85);
    const double cv = cross_val_accuracy(ds, 5, cfg);
    REQUIRE(cv > 0.3);
    REQUIRE(cv < 0.7);
}

TEST_CASE("train_mlp final loss never exceeds the first epoch loss") {
    const Dataset ds = normalized(testutil::blobs(100, 2.0, 13));
    TrainConfig cfg;
    cfg.seed = 6;
    TrainConfig one = cfg;
    one.epochs = 1;
    const MLPModel first = train_mlp(ds, one);
    const MLPModel full = train_mlp(ds, cfg);
    REQUIRE(mlp_loss(full, ds) <= mlp_loss(first, ds) + 1e-12);
}

TEST_CASE("zero epochs are rejected") {
    const Dataset ds = normalized(testutil::blobs(40, 2.0, 1));
    TrainConfig cfg;
    cfg.epochs = 0;
    REQUIRE_THROWS_AS(train_mlp(ds, cfg), validation_error);
    REQUIRE_THROWS_AS(train_linear(ds, cfg), validation_error);
}

TEST_CASE("mlp gradients match central finite differences") {
    // 5-example batch at random parameters, relative error <= 1e-4
    const Dataset ds = normalized(testutil::random_dataset(5, 3, 21));
    MLPModel m = init_mlp(3, 9);
    detail::MLPWorkspace ws;
    ws.resize(5, 3);
    std::vector<std::size_t> order{0, 1, 2, 3, 4};
    TrainConfig cfg;
    cfg.learning_rate = 0.0;  // no update; we only want the gradient fields
    cfg.l2 = 0.0;

    // analytic gradients: run one batch step with lr=0 (weights unchanged)
    detail::mlp_batch_step(m, ws, ds.features, ds.labels, order, 0, 5, cfg, true);

    const double h = 1e-5;
    auto loss_at = [&](MLPModel& model) {
        return detail::mlp_batch_step(model, ws, ds.features, ds.labels, order, 0, 5, cfg, false);
    };
    double worst = 0.0;
    auto check = [&](double& param, double grad) {
        const double save = param;
        param = save + h;
        const double up = loss_at(m);
        param = save - h;
        const double down = loss_at(m);
        param = save;
        const double fd = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad), 1e-8});
        worst = std::max(worst, std::abs(fd - grad) / denom);
    };
    // exhaustive over the small layers, sampled over w2
    Rng pick(33);
    for (std::size_t i = 0; i < m.w1.data().size(); ++i) check(m.w1.data()[i], ws.gw1.data()[i]);
    for (int t = 0; t < 60; ++t) {
        const std::size_t i = pick.uniform_index(m.w2.data().size());
        check(m.w2.data()[i], ws.gw2.data()[i]);
    }
    for (std::size_t j = 0; j < MLPModel::hidden; ++j) {
        check(m.w3[j], ws.gw3[j]);
        check(m.b1[j], ws.gb1[j]);
        check(m.b2[j], ws.gb2[j]);
    }
    check(m.b3, ws.gb3);
    REQUIRE(worst <= 1e-4);
}

TEST_CASE("rff beats the linear model on xor data") {
    const Dataset ds = normalized(xor_blobs(120, 17));
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.seed = 2;
    const RFFModel rff = train_rff(ds, cfg);
    const LinearModel lin = train_linear(ds, cfg);
    REQUIRE(accuracy(rff, ds) >= 0.9);
    REQUIRE(accuracy(lin, ds) <= 0.7);
}

TEST_CASE("rff is deterministic per seed and generalizes on easy blobs") {
    const Dataset ds = testutil::blobs(150, 6.0, 8);
    const Split split = train_test_split(ds, 0.8, 4);
    const Normalizer nz = Normalizer::fit(split.train.features);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.seed = 11;
    const RFFModel a = train_rff(nz.apply(split.train), cfg);
    const RFFModel b = train_rff(nz.apply(split.train), cfg);
    REQUIRE(a.projection == b.projection);
    REQUIRE(a.phase == b.phase);
    REQUIRE(accuracy(a, nz.apply(split.test)) >= 0.9);
}

TEST_CASE("rff bandwidth needs two points") {
    Matrix x(1, 2);
    REQUIRE_THROWS_AS(median_pairwise_distance(x), validation_error);
}

TEST_CASE("knn tie-breaks and majorities follow the contract") {
    const Dataset train = testutil::one_dimensional({{0, 0}, {1, 0}, {10, 1}});

    SECTION("query equal to a training point returns its label") {
        Matrix q(1, 1);
        q(0, 0) = 10.0;
        REQUIRE(knn_predict(train, q, 1) == std::vector<int>{1});
    }

    SECTION("nearest neighbor wins at k=1") {
        Matrix q(1, 1);
        q(0, 0) = 9.0;
        REQUIRE(knn_predict(train, q, 1) == std::vector<int>{1});
    }

    SECTION("k=n yields the global majority everywhere") {
        Matrix q(2, 1);
        q(0, 0) = -100.0;
        q(1, 0) = 100.0;
        const auto pred = knn_predict(train, q, 3);
        REQUIRE(pred == std::vector<int>{0, 0});  // majority label 0
    }

    SECTION("vote ties resolve to label 0") {
        const Dataset tie = testutil::one_dimensional({{0, 1}, {2, 0}});
        Matrix q(1, 1);
        q(0, 0) = 1.0;
        REQUIRE(knn_predict(tie, q, 2) == std::vector<int>{0});
    }

    SECTION("bad k and empty training set are rejected") {
        Matrix q(1, 1);
        REQUIRE_THROWS_AS(knn_predict(train, q, 0), validation_error);
        REQUIRE_THROWS_AS(knn_predict(train, q, 4), validation_error);
        Dataset empty;
        empty.features = Matrix(0, 1);
        REQUIRE_THROWS_AS(knn_predict(empty, q, 1), validation_error);
    }
}

TEST_CASE("knn is invariant to training row permutation on tie-free data") {
    const Dataset train = testutil::random_dataset(40, 3, 55);
    const Dataset query = testutil::random_dataset(15, 3, 56);
    const auto base = knn_predict(train, query.features, 5);

    std::vector<std::size_t> perm(train.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(77);
    rng.shuffle(perm);
    const Dataset shuffled = train.subset(perm);
    REQUIRE(knn_predict(shuffled, query.features, 5) == base);
}

TEST_CASE("accuracy is the fraction of correct predictions") {
    const Dataset ds = testutil::one_dimensional({{-1, 0}, {-2, 0}, {1, 1}, {2, 1}});
    LinearModel all_one;
    all_one.weights = {0.0};
    all_one.bias = 1.0;  // constant predictor: label 1
    REQUIRE(accuracy(all_one, ds) == 0.5);
    LinearModel perfect;
    perfect.weights = {1.0};
    perfect.bias = 0.0;
    REQUIRE(accuracy(perfect, ds) == 1.0);
    Matrix wrong_dim(2, 3);
    REQUIRE_THROWS_AS(perfect.predict(wrong_dim), validation_error);
}

TEST_CASE("cross_val_accuracy hits the expected bands") {
    TrainConfig cfg;
    cfg.seed = 9;

    SECTION("separable blobs score high") {
        const Dataset ds = testutil::blobs(100, 6.0, 23);
        REQUIRE(cross_val_accuracy(ds, 5, cfg) >= 0.95);
    }

    SECTION("coin-flip labels sit at chance") {
        const Dataset ds = testutil::random_dataset(150, 3, 29);
        const double cv = cross_val_accuracy(ds, 5, cfg);
        REQUIRE(cv >= 0.35);
        REQUIRE(cv <= 0.65);
    }

    SECTION("two folds on a 4-point balanced set run") {
        const Dataset ds = testutil::one_dimensional({{-2, 0}, {-1, 0}, {1, 1}, {2, 1}});
        TrainConfig fast = cfg;
        fast.epochs = 5;
        REQUIRE_NOTHROW(cross_val_accuracy(ds, 2, fast));
    }

    SECTION("class smaller than fold count is rejected") {
        const Dataset ds = testutil::one_dimensional({{-2, 0}, {-1, 0}, {1, 1}, {2, 1}});
        REQUIRE_THROWS_AS(cross_val_accuracy(ds, 3, cfg), validation_error);
    }
}

TEST_CASE("training is deterministic given data and seed") {
    const Dataset ds = normalized(testutil::blobs(80, 3.0, 31));
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 12;
    const MLPModel m1 = train_mlp(ds, cfg);
    const MLPModel m2 = train_mlp(ds, cfg);
    REQUIRE(m1.w1 == m2.w1);
    REQUIRE(m1.w3 == m2.w3);
    const LinearModel l1 = train_linear(ds, cfg);
    const LinearModel l2 = train_linear(ds, cfg);
    REQUIRE(l1.weights == l2.weights);
}

TEST_CASE("model json round-trips preserve predictions") {
    const Dataset ds = normalized(testutil::blobs(60, 3.0, 37));
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.seed = 2;

    const AnyModel models[] = {train_linear(ds, cfg), train_rff(ds, cfg), train_mlp(ds, cfg)};
    const char* kinds[] = {"linear", "rff", "mlp"};
    for (int i = 0; i < 3; ++i) {
        const nlohmann::json j = model_to_json(models[i]);
        REQUIRE(j.at("kind").get<std::string>() == kinds[i]);
        const AnyModel back = model_from_json(j);
        const auto pred_a = std::visit([&](const auto& m) { return m.predict(ds.features); }, models[i]);
        const auto pred_b = std::visit([&](const auto& m) { return m.predict(ds.features); }, back);
        REQUIRE(pred_a == pred_b);
    }
    REQUIRE_THROWS_AS(model_from_json({{"kind", "forest"}}), schema_error);
}
