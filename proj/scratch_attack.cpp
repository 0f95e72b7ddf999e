#include <chrono>
#include <iostream>

#include "diva/attacks.hpp"
#include "diva/synthetic.hpp"

using namespace diva;

int main() {
    for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
        SyntheticSpec spec;
        spec.n = 200;
        spec.d = 5;
        spec.class_sep = 6.0;
        Dataset ds = gen_synthetic(spec, seed);
        Split sp = train_test_split(ds, 0.8, derive_seed(seed, "sp"));
        Normalizer nz = Normalizer::fit(sp.train.features);
        Dataset tr = nz.apply(sp.train);
        Dataset te = nz.apply(sp.test);
        TrainConfig cfg;
        cfg.seed = derive_seed(seed, "cfg");

        MLPModel clean_model = train_mlp(tr, cfg);
        double clean_train = accuracy(clean_model, tr);
        double clean_test = accuracy(clean_model, te);

        auto t0 = std::chrono::steady_clock::now();
        AttackResult fa = falfa(sp.train, 0.3, cfg);
        auto t1 = std::chrono::steady_clock::now();
        Dataset ftr = nz.apply(fa.poisoned);
        MLPModel fmodel = train_mlp(ftr, cfg);
        double f_train = accuracy(fmodel, ftr);   // on poisoned labels
        double f_test = accuracy(fmodel, te);     // clean test

        AttackResult sl = sln(sp.train, 0.3, derive_seed(seed, "sln"));
        Dataset str = nz.apply(sl.poisoned);
        MLPModel smodel = train_mlp(str, cfg);
        double s_train = accuracy(smodel, str);
        double s_test = accuracy(smodel, te);

        AttackResult al = alfa(sp.train, 0.3, cfg);
        Dataset atr = nz.apply(al.poisoned);
        MLPModel amodel = train_mlp(atr, cfg);
        double a_train = accuracy(amodel, atr);
        double a_test = accuracy(amodel, te);

        std::cout << "seed " << seed << " clean(train/test)=" << clean_train << "/" << clean_test
                  << " | falfa rounds=" << fa.rounds_run << " flips=" << fa.flipped_indices.size()
                  << " train=" << f_train << " test=" << f_test
                  << " drop=" << (clean_test - f_test) * 100 << "pts gap=" << (f_train - f_test) * 100
                  << "pts t=" << std::chrono::duration<double>(t1 - t0).count() << "s"
                  << " | sln train=" << s_train << " test=" << s_test << " gap=" << (s_train - s_test) * 100
                  << "pts | alfa train=" << a_train << " test=" << a_test
                  << " drop=" << (clean_test - a_test) * 100 << "pts\n";
    }
    return 0;
}
