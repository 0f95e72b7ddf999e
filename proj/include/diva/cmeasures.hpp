#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "diva/classifiers.hpp"
#include "diva/dataset.hpp"
#include "diva/log.hpp"
#include "diva/matrix.hpp"
#include "diva/rng.hpp"
#include "diva/util.hpp"

namespace diva {

inline constexpr std::size_t kMeasureCount = 27;

// Canonical column order of the meta-feature vector: 22 normalized measures
// (feature, linearity, neighborhood, network, dimensionality, balance
// families) followed by 5 per-instance standard deviations.
inline const std::array<std::string, kMeasureCount>& measure_names() {
    static const std::array<std::string, kMeasureCount> names = {
        "F1",  "F1v", "F2",      "F3",      "F4",   "L1", "L2", "L3", "N1",
        "N2",  "N3",  "N4",      "T1",      "LSC",  "density", "clsCoef", "hubs",
        "T2",  "T3",  "T4",      "C1",      "C2",
        "std_N2", "std_N3", "std_N4", "std_L1", "std_L2"};
    return names;
}

struct CMVector {
    std::array<double, kMeasureCount> values{};

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double at(const std::string& name) const {
        const auto& names = measure_names();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return values[i];
        throw validation_error("unknown measure name '" + name + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::ordered_json j;
        const auto& names = measure_names();
        for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
        return j;
    }
};

namespace cm {

// Precomputed state shared by the measure family functions: canonically
// ordered rows (lexicographic by features, then label), z-scored features,
// the full distance matrix and per-point nearest same/other class distances.
// The fingerprint seeds the stochastic sub-measures; it hashes only shape
// and canonical labels so it is invariant to row order and to positive
// per-feature rescaling.
struct Context {
    Matrix x;             // n x d, standardized, canonical order
    std::vector<int> y;
    Matrix dist;          // n x n
    std::array<std::vector<std::size_t>, 2> class_idx;
    std::vector<double> nearest_enemy;   // distance to nearest other-class point
    std::vector<double> nearest_friend;  // distance to nearest same-class point (0 if none)
    std::uint64_t fingerprint = 0;

    std::size_t size() const { return y.size(); }
    std::size_t dim() const { return x.cols(); }

    static Context build(const Dataset& ds, std::uint64_t seed) {
        const std::size_t n = ds.size(), d = ds.dim();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto ra = ds.features.row(a), rb = ds.features.row(b);
            for (std::size_t c = 0; c < d; ++c) {
                if (ra[c] < rb[c]) return true;
                if (ra[c] > rb[c]) return false;
            }
            return ds.labels[a] < ds.labels[b];
        });

        Context ctx;
        Matrix raw(n, d);
        ctx.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = ds.features.row(order[i]);
            std::copy(src.begin(), src.end(), raw.row(i).begin());
            ctx.y[i] = ds.labels[order[i]];
        }
        ctx.x = Normalizer::fit(raw).apply(raw);

        std::uint64_t h = rng_detail::fnv1a("cmeasures");
        h = rng_detail::mix(h, n);
        h = rng_detail::mix(h, d);
        for (std::size_t i = 0; i < n; ++i) h = rng_detail::mix(h, static_cast<std::uint64_t>(ctx.y[i]));
        ctx.fingerprint = rng_detail::mix(h, seed);

        ctx.dist = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dij = euclidean_distance(ctx.x.row(i), ctx.x.row(j));
                ctx.dist(i, j) = dij;
                ctx.dist(j, i) = dij;
            }

        for (std::size_t i = 0; i < n; ++i) ctx.class_idx[ctx.y[i]].push_back(i);

        const double inf = std::numeric_limits<double>::infinity();
        ctx.nearest_enemy.assign(n, inf);
        ctx.nearest_friend.assign(n, inf);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                auto& slot = ctx.y[i] == ctx.y[j] ? ctx.nearest_friend[i] : ctx.nearest_enemy[i];
                slot = std::min(slot, ctx.dist(i, j));
            }
            if (!std::isfinite(ctx.nearest_friend[i])) ctx.nearest_friend[i] = 0.0;
        }
        return ctx;
    }
};

// --- feature family -------------------------------------------------------

// Fisher discriminant ratio per feature; F1 = 1 / (1 + max_f r_f).
inline double f1(const Context& ctx) {
    const std::size_t n = ctx.size(), d = ctx.dim();
    double max_r = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += ctx.x(i, f);
        mu /= static_cast<double>(n);
        double numer = 0.0, denom = 0.0;
        for (int cls = 0; cls < 2; ++cls) {
            const auto& idx = ctx.class_idx[cls];
            double mc = 0.0;
            for (std::size_t i : idx) mc += ctx.x(i, f);
            mc /= static_cast<double>(idx.size());
            numer += static_cast<double>(idx.size()) * (mc - mu) * (mc - mu);
            for (std::size_t i : idx) denom += (ctx.x(i, f) - mc) * (ctx.x(i, f) - mc);
        }
        if (denom <= 0.0) {
            if (numer > 0.0) return 0.0;  // perfectly separated feature
            continue;
        }
        max_r = std::max(max_r, numer / denom);
    }
    return 1.0 / (1.0 + max_r);
}

// Directional-vector Fisher ratio along w = (S_W + lambda I)^-1 (mu1 - mu0).
inline double f1v(const Context& ctx) {
    const std::size_t d = ctx.dim();
    std::vector<double> mu0(d, 0.0), mu1(d, 0.0);
    for (std::size_t i : ctx.class_idx[0])
        for (std::size_t c = 0; c < d; ++c) mu0[c] += ctx.x(i, c);
    for (std::size_t i : ctx.class_idx[1])
        for (std::size_t c = 0; c < d; ++c) mu1[c] += ctx.x(i, c);
    const double n0 = static_cast<double>(ctx.class_idx[0].size());
    const double n1 = static_cast<double>(ctx.class_idx[1].size());
    for (std::size_t c = 0; c < d; ++c) {
        mu0[c] /= n0;
        mu1[c] /= n1;
    }
    const double p0 = n0 / (n0 + n1), p1 = n1 / (n0 + n1);
    Matrix sw(d, d);
    for (int cls = 0; cls < 2; ++cls) {
        const auto& idx = ctx.class_idx[cls];
        const auto& mu = cls == 0 ? mu0 : mu1;
        const double w = (cls == 0 ? p0 : p1) / static_cast<double>(idx.size());
        for (std::size_t i : idx)
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    sw(a, b) += w * (ctx.x(i, a) - mu[a]) * (ctx.x(i, b) - mu[b]);
    }
    std::vector<double> delta(d);
    for (std::size_t c = 0; c < d; ++c) delta[c] = mu1[c] - mu0[c];
    Matrix reg = sw;
    for (std::size_t c = 0; c < d; ++c) reg(c, c) += 1e-6;
    const std::vector<double> w = cholesky_solve(reg, delta);
    double wsw = 0.0;
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) wsw += w[a] * sw(a, b) * w[b];
    const double wd = dot(w, delta);
    if (wsw <= 1e-300) return 0.0;
    const double df = wd * wd / wsw;
    return 1.0 / (1.0 + df);
}

struct FeatureBounds {
    double lo0, hi0, lo1, hi1;
    double overlap_lo() const { return std::max(lo0, lo1); }
    double overlap_hi() const { return std::min(hi0, hi1); }
};

inline FeatureBounds feature_bounds(const Context& ctx, std::size_t f, const std::vector<std::size_t>& subset) {
    const double inf = std::numeric_limits<double>::infinity();
    FeatureBounds b{inf, -inf, inf, -inf};
    for (std::size_t i : subset) {
        const double v = ctx.x(i, f);
        if (ctx.y[i] == 0) {
            b.lo0 = std::min(b.lo0, v);
            b.hi0 = std::max(b.hi0, v);
        } else {
            b.lo1 = std::min(b.lo1, v);
            b.hi1 = std::max(b.hi1, v);
        }
    }
    return b;
}

// Volume of the per-feature class-overlap intervals, product over features.
inline double f2(const Context& ctx) {
    std::vector<std::size_t> all(ctx.size());
    std::iota(all.begin(), all.end(), 0);
    double prod = 1.0;
    for (std::size_t f = 0; f < ctx.dim(); ++f) {
        const FeatureBounds b = feature_bounds(ctx, f, all);
        const double range = std::max(b.hi0, b.hi1) - std::min(b.lo0, b.lo1);
        if (range <= 0.0) continue;  // degenerate feature: no discrimination, full overlap
        const double overlap = std::max(0.0, b.overlap_hi() - b.overlap_lo());
        prod *= overlap / range;
    }
    return prod;
}

inline std::size_t overlap_count(const Context& ctx, std::size_t f, const std::vector<std::size_t>& subset) {
    const FeatureBounds b = feature_bounds(ctx, f, subset);
    if (!std::isfinite(b.lo0) || !std::isfinite(b.lo1)) return 0;  // a class is absent
    const double lo = b.overlap_lo(), hi = b.overlap_hi();
    if (hi < lo) return 0;
    std::size_t count = 0;
    for (std::size_t i : subset) {
        const double v = ctx.x(i, f);
        if (v >= lo && v <= hi) ++count;
    }
    return count;
}

// Maximum individual feature efficiency: smallest fraction of points left in
// any single feature's class-overlap region.
inline double f3(const Context& ctx) {
    std::vector<std::size_t> all(ctx.size());
    std::iota(all.begin(), all.end(), 0);
    std::size_t best = ctx.size();
    for (std::size_t f = 0; f < ctx.dim(); ++f) best = std::min(best, overlap_count(ctx, f, all));
    return static_cast<double>(best) / static_cast<double>(ctx.size());
}

// Collective feature efficiency: greedily peel off points separable by the
// most efficient remaining feature; fraction never separated.
inline double f4(const Context& ctx) {
    std::vector<std::size_t> remaining(ctx.size());
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<bool> feature_used(ctx.dim(), false);
    for (std::size_t round = 0; round < ctx.dim() && !remaining.empty(); ++round) {
        std::size_t best_f = ctx.dim();
        std::size_t best_count = std::numeric_limits<std::size_t>::max();
        for (std::size_t f = 0; f < ctx.dim(); ++f) {
            if (feature_used[f]) continue;
            const std::size_t cnt = overlap_count(ctx, f, remaining);
            if (cnt < best_count) {
                best_count = cnt;
                best_f = f;
            }
        }
        if (best_f == ctx.dim()) break;
        feature_used[best_f] = true;
        const FeatureBounds b = feature_bounds(ctx, best_f, remaining);
        std::vector<std::size_t> kept;
        if (std::isfinite(b.lo0) && std::isfinite(b.lo1) && b.overlap_hi() >= b.overlap_lo()) {
            for (std::size_t i : remaining) {
                const double v = ctx.x(i, best_f);
                if (v >= b.overlap_lo() && v <= b.overlap_hi()) kept.push_back(i);
            }
        }
        remaining = std::move(kept);
    }
    return static_cast<double>(remaining.size()) / static_cast<double>(ctx.size());
}

// --- linearity family ------------------------------------------------------

struct LinearMeasures {
    double l1 = 0.0, l2 = 0.0, l3 = 0.0;
    std::vector<double> l1_per_instance;
    std::vector<double> l2_per_instance;
};

inline TrainConfig linear_measure_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 64;
    cfg.l2 = 1e-3;
    cfg.seed = seed;
    return cfg;
}

// Draws an interpolated point between two random same-class examples and
// writes it to `out`; returns the class label.
inline int interpolate_point(const Context& ctx, Rng& rng, int cls, std::span<double> out) {
    const auto& idx = ctx.class_idx[cls];
    const std::size_t a = idx[rng.uniform_index(idx.size())];
    const std::size_t b = idx[rng.uniform_index(idx.size())];
    const double u = rng.uniform();
    for (std::size_t c = 0; c < ctx.dim(); ++c)
        out[c] = ctx.x(a, c) + u * (ctx.x(b, c) - ctx.x(a, c));
    return cls;
}

inline LinearMeasures linear_measures(const Context& ctx, std::size_t interp_samples = 500) {
    Dataset train;
    train.features = ctx.x;
    train.labels = ctx.y;
    train.name = "cmeasures";
    const LinearModel model = train_linear(train, linear_measure_config(derive_seed(ctx.fingerprint, "cm_linear")));

    LinearMeasures out;
    const std::size_t n = ctx.size();
    out.l1_per_instance.resize(n);
    out.l2_per_instance.resize(n);
    double sum_hinge = 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double eps = model.hinge_loss(ctx.x.row(i), ctx.y[i]);
        sum_hinge += eps;
        out.l1_per_instance[i] = eps / (1.0 + eps);
        const bool wrong = model.predict_one(ctx.x.row(i)) != ctx.y[i];
        out.l2_per_instance[i] = wrong ? 1.0 : 0.0;
        if (wrong) ++errors;
    }
    const double mean_hinge = sum_hinge / static_cast<double>(n);
    out.l1 = mean_hinge / (1.0 + mean_hinge);
    out.l2 = static_cast<double>(errors) / static_cast<double>(n);

    Rng rng(derive_seed(ctx.fingerprint, "cm_l3"));
    std::vector<double> point(ctx.dim());
    std::size_t interp_errors = 0;
    for (std::size_t t = 0; t < interp_samples; ++t) {
        const int cls = interpolate_point(ctx, rng, static_cast<int>(t % 2), point);
        if (model.predict_one(point) != cls) ++interp_errors;
    }
    out.l3 = static_cast<double>(interp_errors) / static_cast<double>(interp_samples);
    return out;
}

// --- neighborhood family ---------------------------------------------------

// Edges of the Euclidean MST via Prim's algorithm, deterministic tie-break
// toward the lower vertex index.
inline std::vector<std::pair<std::size_t, std::size_t>> mst_edges(const Matrix& dist) {
    const std::size_t n = dist.rows();
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    in_tree[0] = true;
    for (std::size_t j = 1; j < n; ++j) best[j] = dist(0, j);
    for (std::size_t step = 1; step < n; ++step) {
        std::size_t pick = n;
        double pick_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            if (best[j] < pick_dist) {
                pick_dist = best[j];
                pick = j;
            }
        }
        in_tree[pick] = true;
        edges.emplace_back(std::min(parent[pick], pick), std::max(parent[pick], pick));
        for (std::size_t j = 0; j < n; ++j) {
            if (in_tree[j]) continue;
            if (dist(pick, j) < best[j]) {
                best[j] = dist(pick, j);
                parent[j] = pick;
            }
        }
    }
    return edges;
}

// Fraction of points incident to a cross-class MST edge.
inline double n1(const Context& ctx) {
    std::vector<bool> borderline(ctx.size(), false);
    for (const auto& [a, b] : mst_edges(ctx.dist)) {
        if (ctx.y[a] != ctx.y[b]) {
            borderline[a] = true;
            borderline[b] = true;
        }
    }
    std::size_t count = 0;
    for (bool f : borderline)
        if (f) ++count;
    return static_cast<double>(count) / static_cast<double>(ctx.size());
}

struct N2Result {
    double value = 0.0;
    std::vector<double> per_instance;
};

// Intra/extra 1NN distance ratio, normalized to [0,1).
inline N2Result n2(const Context& ctx) {
    N2Result out;
    out.per_instance.resize(ctx.size());
    double intra = 0.0, extra = 0.0;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        const double di = ctx.nearest_friend[i];
        const double de = ctx.nearest_enemy[i];
        intra += di;
        extra += de;
        out.per_instance[i] = (di + de) > 0.0 ? di / (di + de) : 0.0;
    }
    const double r = extra > 0.0 ? intra / extra : 0.0;
    out.value = r / (1.0 + r);
    return out;
}

inline std::size_t nearest_neighbor(const Matrix& dist, std::size_t i) {
    std::size_t best = dist.rows();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < dist.rows(); ++j) {
        if (j == i) continue;
        if (dist(i, j) < best_d) {
            best_d = dist(i, j);
            best = j;
        }
    }
    return best;
}

struct N3Result {
    double value = 0.0;
    std::vector<double> per_instance;
};

// Leave-one-out 1NN error rate.
inline N3Result n3(const Context& ctx) {
    N3Result out;
    out.per_instance.resize(ctx.size());
    std::size_t errors = 0;
    for (std::size_t i = 0; i < ctx.size(); ++i) {
        const bool wrong = ctx.y[nearest_neighbor(ctx.dist, i)] != ctx.y[i];
        out.per_instance[i] = wrong ? 1.0 : 0.0;
        if (wrong) ++errors;
    }
    out.value = static_cast<double>(errors) / static_cast<double>(ctx.size());
    return out;
}

struct N4Result {
    double value = 0.0;
    std::vector<double> per_instance;  // one entry per interpolated test point
};

// 1NN error on class-conditional interpolated test points.
inline N4Result n4(const Context& ctx, std::size_t interp_samples = 500) {
    N4Result out;
    out.per_instance.resize(interp_samples);
    Rng rng(derive_seed(ctx.fingerprint, "cm_n4"));
    std::vector<double> point(ctx.dim());
    std::size_t errors = 0;
    for (std::size_t t = 0; t < interp_samples; ++t) {
        const int cls = interpolate_point(ctx, rng, static_cast<int>(t % 2), point);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < ctx.size(); ++j) {
            const double dj = squared_distance(point, ctx.x.row(j));
            if (dj < best_d) {
                best_d = dj;
                best = j;
            }
        }
        const bool wrong = ctx.y[best] != cls;
        out.per_instance[t] = wrong ? 1.0 : 0.0;
        if (wrong) ++errors;
    }
    out.value = static_cast<double>(errors) / static_cast<double>(interp_samples);
    return out;
}

// Fraction of maximal same-class hyperspheres remaining after absorption.
// Sphere radius is the distance to the nearest enemy; a sphere is absorbed
// by a strictly larger same-class sphere that contains it.
inline double t1(const Context& ctx) {
    const std::size_t n = ctx.size();
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool absorbed = false;
        const double ri = ctx.nearest_enemy[i];
        for (std::size_t j = 0; j < n && !absorbed; ++j) {
            if (j == i || ctx.y[j] != ctx.y[i]) continue;
            const double rj = ctx.nearest_enemy[j];
            if (ctx.dist(i, j) + ri <= rj && (rj > ri || (rj == ri && j < i))) absorbed = true;
        }
        if (!absorbed) ++remaining;
    }
    return static_cast<double>(remaining) / static_cast<double>(n);
}

inline std::size_t local_set_cardinality(const Context& ctx, std::size_t i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < ctx.size(); ++j) {
        if (j == i) continue;
        if (ctx.dist(i, j) < ctx.nearest_enemy[i]) ++count;
    }
    return count;
}

// Local-set average cardinality, inverted: 1 - mean|LS| / n.
inline double lsc(const Context& ctx) {
    const std::size_t n = ctx.size();
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += static_cast<double>(local_set_cardinality(ctx, i));
    return 1.0 - total / (static_cast<double>(n) * static_cast<double>(n));
}

// --- network family --------------------------------------------------------

struct GraphMeasures {
    double density = 1.0;
    double cls_coef = 1.0;
    double hubs = 1.0;
};

// epsilon-NN graph: connect i,j when their distance is within the 15th
// percentile of all pairwise distances and each lies in the other's local
// set (closer than both nearest enemies, hence same class).
inline GraphMeasures graph_measures(const Context& ctx) {
    const std::size_t n = ctx.size();
    std::vector<double> all_dists;
    all_dists.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) all_dists.push_back(ctx.dist(i, j));
    std::sort(all_dists.begin(), all_dists.end());
    const double eps = quantile_higher(all_dists, 0.15);

    std::vector<std::vector<std::size_t>> adj(n);
    std::size_t edge_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dij = ctx.dist(i, j);
            if (dij <= eps && dij < ctx.nearest_enemy[i] && dij < ctx.nearest_enemy[j]) {
                adj[i].push_back(j);
                adj[j].push_back(i);
                ++edge_count;
            }
        }
    }

    GraphMeasures out;
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    out.density = 1.0 - static_cast<double>(edge_count) / pairs;

    double coef_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = adj[i].size();
        if (k < 2) continue;
        std::size_t links = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                const std::size_t u = adj[i][a], v = adj[i][b];
                if (std::binary_search(adj[u].begin(), adj[u].end(), v)) ++links;
            }
        coef_sum += 2.0 * static_cast<double>(links) / (static_cast<double>(k) * static_cast<double>(k - 1));
    }
    out.cls_coef = 1.0 - coef_sum / static_cast<double>(n);

    // Hub scores: dominant eigenvector of the adjacency matrix by power
    // iteration, normalized by its maximum entry.
    std::vector<double> v(n), next(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(adj[i].size());
    if (edge_count > 0) {
        for (int iter = 0; iter < 50; ++iter) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j : adj[i]) s += v[j];
                next[i] = s;
            }
            double norm = std::sqrt(dot(next, next));
            if (norm <= 0.0) break;
            for (std::size_t i = 0; i < n; ++i) v[i] = next[i] / norm;
        }
    } else {
        std::fill(v.begin(), v.end(), 0.0);
    }
    const double vmax = *std::max_element(v.begin(), v.end());
    double hub_sum = 0.0;
    if (vmax > 0.0)
        for (double h : v) hub_sum += h / vmax;
    out.hubs = 1.0 - hub_sum / static_cast<double>(n);
    return out;
}

// --- dimensionality family -------------------------------------------------

// Number of principal components explaining 95% of variance, via Jacobi
// eigendecomposition of the feature covariance.
inline std::size_t pca_components_95(const Context& ctx) {
    const std::size_t n = ctx.size(), d = ctx.dim();
    Matrix cov(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += ctx.x(i, a) * ctx.x(i, b);
            cov(a, b) = cov(b, a) = s / static_cast<double>(n);  // features are centered
        }
    std::vector<double> eig = symmetric_eigenvalues(cov);
    double total = 0.0;
    for (double& e : eig) {
        e = std::max(0.0, e);
        total += e;
    }
    if (total <= 0.0) return 0;
    double cum = 0.0;
    for (std::size_t k = 0; k < eig.size(); ++k) {
        cum += eig[k];
        if (cum >= 0.95 * total - 1e-12) return k + 1;
    }
    return eig.size();
}

// --- balance family --------------------------------------------------------

inline double c1(const Context& ctx) {
    const double n = static_cast<double>(ctx.size());
    double h = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
        const double p = static_cast<double>(ctx.class_idx[cls].size()) / n;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h / std::log(2.0);
}

inline double c2(const Context& ctx) {
    const double n0 = static_cast<double>(ctx.class_idx[0].size());
    const double n1c = static_cast<double>(ctx.class_idx[1].size());
    const double ir = 0.5 * (n0 / n1c + n1c / n0);
    return 1.0 - 1.0 / ir;
}

} // namespace cm

// Extracts the full 27-value meta-feature vector. Deterministic for a given
// (dataset, seed); invariant to row permutation and to positive per-feature
// rescaling. The 22 normalized measures are clamped to [0,1] post-hoc; any
// clamp is logged as a warning so formula overshoots stay visible.
inline CMVector extract(const Dataset& ds, std::uint64_t seed) {
    validate_dataset(ds);
    if (ds.size() < 10) throw validation_error("dataset '" + ds.name + "': C-Measures need n >= 10");

    const cm::Context ctx = cm::Context::build(ds, seed);
    const cm::LinearMeasures lin = cm::linear_measures(ctx);
    const cm::N2Result rn2 = cm::n2(ctx);
    const cm::N3Result rn3 = cm::n3(ctx);
    const cm::N4Result rn4 = cm::n4(ctx);
    const cm::GraphMeasures graph = cm::graph_measures(ctx);
    const std::size_t d95 = cm::pca_components_95(ctx);
    const double n = static_cast<double>(ctx.size());
    const double d = static_cast<double>(ctx.dim());

    CMVector v;
    std::size_t k = 0;
    v[k++] = cm::f1(ctx);
    v[k++] = cm::f1v(ctx);
    v[k++] = cm::f2(ctx);
    v[k++] = cm::f3(ctx);
    v[k++] = cm::f4(ctx);
    v[k++] = lin.l1;
    v[k++] = lin.l2;
    v[k++] = lin.l3;
    v[k++] = cm::n1(ctx);
    v[k++] = rn2.value;
    v[k++] = rn3.value;
    v[k++] = rn4.value;
    v[k++] = cm::t1(ctx);
    v[k++] = cm::lsc(ctx);
    v[k++] = graph.density;
    v[k++] = graph.cls_coef;
    v[k++] = graph.hubs;
    v[k++] = d / n;                       // T2
    v[k++] = static_cast<double>(d95) / n;  // T3
    v[k++] = static_cast<double>(d95) / d;  // T4
    v[k++] = cm::c1(ctx);
    v[k++] = cm::c2(ctx);
    v[k++] = stddev(rn2.per_instance);
    v[k++] = stddev(rn3.per_instance);
    v[k++] = stddev(rn4.per_instance);
    v[k++] = stddev(lin.l1_per_instance);
    v[k++] = stddev(lin.l2_per_instance);

    for (std::size_t i = 0; i < 22; ++i) {
        if (v[i] < -1e-12 || v[i] > 1.0 + 1e-12)
            log::warn("measure " + measure_names()[i] + " = " + format_double(v[i]) +
                      " clamped to [0,1] for dataset '" + ds.name + "'");
        v[i] = clamp01(v[i]);
    }
    for (std::size_t i = 0; i < kMeasureCount; ++i)
        if (!std::isfinite(v[i])) throw error("measure " + measure_names()[i] + " is not finite");
    return v;
}

} // namespace diva
