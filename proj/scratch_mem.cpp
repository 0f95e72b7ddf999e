#include <chrono>
#include <iostream>

#include "diva/classifiers.hpp"
#include "diva/synthetic.hpp"

using namespace diva;

int main(int argc, char** argv) {
    const double lr = argc > 1 ? std::atof(argv[1]) : 0.01;
    // random labels on gaussian features
    Rng rng(99);
    Dataset ds;
    ds.features = Matrix(200, 5);
    for (auto& v : ds.features.data()) v = rng.normal();
    ds.labels.resize(200);
    for (auto& y : ds.labels) y = rng.uniform_index(2);
    ds.name = "random";

    Normalizer nz = Normalizer::fit(ds.features);
    Dataset tr = nz.apply(ds);
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.l2 = 0.0;
    cfg.seed = 1;
    for (int epochs : {400, 1000, 2000}) {
        cfg.epochs = epochs;
        auto t0 = std::chrono::steady_clock::now();
        MLPModel m = train_mlp(tr, cfg);
        auto t1 = std::chrono::steady_clock::now();
        std::cout << "epochs=" << epochs << " lr=" << lr
                  << " train_acc=" << accuracy(m, tr)
                  << " loss=" << mlp_loss(m, tr)
                  << " time=" << std::chrono::duration<double>(t1 - t0).count() << "s\n";
    }
    return 0;
}
