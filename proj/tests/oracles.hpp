#pragma once

// Brute-force oracles, independent of the implementation paths they check.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "diva/dataset.hpp"
#include "diva/matrix.hpp"

namespace oracle {

// Kruskal MST over explicitly sorted edges (the library uses Prim), then
// count points touching a cross-class edge.
inline double n1_kruskal(const diva::Matrix& x, const std::vector<int>& y) {
    const std::size_t n = y.size();
    struct Edge {
        double w;
        std::size_t a, b;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            edges.push_back({diva::euclidean_distance(x.row(i), x.row(j)), i, j});
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.w != b.w) return a.w < b.w;
        if (a.a != b.a) return a.a < b.a;
        return a.b < b.b;
    });
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    std::vector<bool> cross(n, false);
    std::size_t used = 0;
    for (const Edge& e : edges) {
        const std::size_t ra = find(e.a), rb = find(e.b);
        if (ra == rb) continue;
        parent[ra] = rb;
        ++used;
        if (y[e.a] != y[e.b]) {
            cross[e.a] = true;
            cross[e.b] = true;
        }
        if (used + 1 == n) break;
    }
    std::size_t count = 0;
    for (bool c : cross)
        if (c) ++count;
    return static_cast<double>(count) / static_cast<double>(n);
}

// Leave-one-out 1NN error with a full sort per query point.
inline double n3_loo(const diva::Matrix& x, const std::vector<int>& y) {
    const std::size_t n = y.size();
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back({diva::euclidean_distance(x.row(i), x.row(j)), j});
        std::sort(d.begin(), d.end());
        if (y[d.front().second] != y[i]) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(n);
}

// Fisher discriminant ratio, direct formula on the given features.
inline double f1_direct(const diva::Matrix& x, const std::vector<int>& y) {
    const std::size_t n = y.size(), d = x.cols();
    double max_r = 0.0;
    for (std::size_t f = 0; f < d; ++f) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, f);
        mu /= static_cast<double>(n);
        double numer = 0.0, denom = 0.0;
        for (int cls = 0; cls < 2; ++cls) {
            double mc = 0.0;
            std::size_t nc = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (y[i] == cls) {
                    mc += x(i, f);
                    ++nc;
                }
            mc /= static_cast<double>(nc);
            numer += static_cast<double>(nc) * (mc - mu) * (mc - mu);
            for (std::size_t i = 0; i < n; ++i)
                if (y[i] == cls) denom += (x(i, f) - mc) * (x(i, f) - mc);
        }
        if (denom <= 0.0) {
            if (numer > 0.0) return 0.0;
            continue;
        }
        max_r = std::max(max_r, numer / denom);
    }
    return 1.0 / (1.0 + max_r);
}

inline double c1_entropy(const std::vector<int>& y) {
    const double n = static_cast<double>(y.size());
    double n1 = 0.0;
    for (int v : y) n1 += v;
    double h = 0.0;
    for (double p : {n1 / n, 1.0 - n1 / n})
        if (p > 0.0) h -= p * std::log(p);
    return h / std::log(2.0);
}

// Mann-Whitney pair statistic: (concordant + half-ties) / (pos * neg).
inline double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels) {
    double stat = 0.0;
    std::size_t pos = 0, neg = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1) continue;
        ++pos;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) stat += 1.0;
            else if (scores[i] == scores[j]) stat += 0.5;
        }
    }
    for (int y : labels) neg += (y == 0);
    return stat / (static_cast<double>(pos) * static_cast<double>(neg));
}

// kNN-majority relabeling, written as a direct double loop.
inline double knn_relabel_direct(const diva::Matrix& x, const std::vector<int>& y, int k, double eta) {
    const std::size_t n = y.size();
    std::size_t relabeled = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back({diva::euclidean_distance(x.row(i), x.row(j)), j});
        std::sort(d.begin(), d.end());
        int votes1 = 0;
        for (int j = 0; j < k; ++j) votes1 += y[d[j].second];
        const int majority = 2 * votes1 > k ? 1 : 0;
        const int count = majority == 1 ? votes1 : k - votes1;
        if (majority != y[i] && count >= eta * k - 1e-12) ++relabeled;
    }
    return static_cast<double>(relabeled) / static_cast<double>(n);
}

} // namespace oracle
