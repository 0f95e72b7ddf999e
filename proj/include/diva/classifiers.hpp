#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "diva/dataset.hpp"
#include "diva/errors.hpp"
#include "diva/matrix.hpp"
#include "diva/rng.hpp"
#include "diva/util.hpp"

namespace diva {

struct TrainConfig {
    int epochs = 400;
    double learning_rate = 0.01;
    int batch_size = 128;
    double l2 = 1e-4;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw validation_error("epochs must be >= 1");
        if (learning_rate <= 0.0) throw validation_error("learning_rate must be > 0");
        if (batch_size < 1) throw validation_error("batch_size must be >= 1");
        if (l2 < 0.0) throw validation_error("l2 must be >= 0");
    }

    TrainConfig with_seed(std::uint64_t s) const {
        TrainConfig c = *this;
        c.seed = s;
        return c;
    }
};

enum class LossKind { hinge, logistic };

// ---------------------------------------------------------------------------
// Linear margin classifier, trained by mini-batch SGD.
// ---------------------------------------------------------------------------

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
    LossKind loss_kind = LossKind::hinge;

    double margin(std::span<const double> x) const { return dot(weights, x) + bias; }

    int predict_one(std::span<const double> x) const { return margin(x) >= 0.0 ? 1 : 0; }

    std::vector<int> predict(const Matrix& x) const {
        if (x.cols() != weights.size()) throw validation_error("linear model: feature dimension mismatch");
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict_one(x.row(i));
        return out;
    }

    double hinge_loss(std::span<const double> x, int label) const {
        const double y = label == 1 ? 1.0 : -1.0;
        return std::max(0.0, 1.0 - y * margin(x));
    }
};

namespace detail {

inline double linear_objective(const LinearModel& m, const Matrix& x, const std::vector<int>& y, double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double yi = y[i] == 1 ? 1.0 : -1.0;
        const double mg = yi * m.margin(x.row(i));
        if (m.loss_kind == LossKind::hinge) {
            loss += std::max(0.0, 1.0 - mg);
        } else {
            loss += mg > -30.0 ? std::log1p(std::exp(-mg)) : -mg;
        }
    }
    loss /= static_cast<double>(x.rows());
    return loss + 0.5 * l2 * dot(m.weights, m.weights);
}

} // namespace detail

// Hinge (or logistic) loss + L2, SGD with per-epoch shuffling. Keeps the
// best-objective snapshot across epochs, so the returned model's objective
// never exceeds that of any earlier epoch.
inline LinearModel train_linear(const Dataset& train, const TrainConfig& cfg, LossKind loss = LossKind::hinge) {
    cfg.validate();
    validate_dataset(train);
    const std::size_t n = train.size(), d = train.dim();
    LinearModel model;
    model.loss_kind = loss;
    model.weights.assign(d, 0.0);

    Rng rng(derive_seed(cfg.seed, "train_linear"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(d);

    LinearModel best = model;
    double best_obj = detail::linear_objective(model, train.features, train.labels, cfg.l2);
    const double weight_decay = std::max(0.0, 1.0 - cfg.learning_rate * cfg.l2);
    int stalled = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            const double inv = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_b = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const auto x = train.features.row(order[k]);
                const double yi = train.labels[order[k]] == 1 ? 1.0 : -1.0;
                const double mg = yi * model.margin(x);
                double coef = 0.0;
                if (loss == LossKind::hinge) {
                    if (mg < 1.0) coef = -yi;
                } else {
                    const double s = mg > -30.0 ? 1.0 / (1.0 + std::exp(mg)) : 1.0;
                    coef = -yi * s;
                }
                if (coef != 0.0) {
                    for (std::size_t c = 0; c < d; ++c) grad[c] += coef * x[c];
                    grad_b += coef;
                }
            }
            for (std::size_t c = 0; c < d; ++c)
                model.weights[c] = (model.weights[c] - cfg.learning_rate * grad[c] * inv) * weight_decay;
            model.bias -= cfg.learning_rate * grad_b * inv;
        }
        const double obj = detail::linear_objective(model, train.features, train.labels, cfg.l2);
        if (!std::isfinite(obj)) throw training_error("linear training diverged at epoch " + std::to_string(epoch + 1));
        if (obj < best_obj - 1e-5) {
            best_obj = obj;
            best = model;
            stalled = 0;
        } else {
            if (obj < best_obj) {
                best_obj = obj;
                best = model;
            }
            if (++stalled >= 20) break;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// 2x128 MLP with rectifier hiddens, sigmoid output, cross-entropy loss.
// ---------------------------------------------------------------------------

struct MLPModel {
    static constexpr std::size_t hidden = 128;

    Matrix w1;  // d x hidden
    std::vector<double> b1;
    Matrix w2;  // hidden x hidden
    std::vector<double> b2;
    std::vector<double> w3;  // hidden
    double b3 = 0.0;

    std::size_t input_dim() const { return w1.rows(); }

    double predict_proba_one(std::span<const double> x) const {
        std::vector<double> a1(hidden), a2(hidden);
        forward_one(x, a1, a2);
        double z = b3;
        for (std::size_t j = 0; j < hidden; ++j) z += a2[j] * w3[j];
        return 1.0 / (1.0 + std::exp(-z));
    }

    std::vector<double> predict_proba(const Matrix& x) const {
        if (x.cols() != input_dim()) throw validation_error("mlp: feature dimension mismatch");
        std::vector<double> out(x.rows());
        std::vector<double> a1(hidden), a2(hidden);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            forward_one(x.row(i), a1, a2);
            double z = b3;
            for (std::size_t j = 0; j < hidden; ++j) z += a2[j] * w3[j];
            out[i] = 1.0 / (1.0 + std::exp(-z));
        }
        return out;
    }

    std::vector<int> predict(const Matrix& x) const {
        const auto p = predict_proba(x);
        std::vector<int> out(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= 0.5 ? 1 : 0;
        return out;
    }

private:
    void forward_one(std::span<const double> x, std::vector<double>& a1, std::vector<double>& a2) const {
        const std::size_t d = input_dim();
        for (std::size_t j = 0; j < hidden; ++j) a1[j] = b1[j];
        for (std::size_t c = 0; c < d; ++c) {
            const double xv = x[c];
            const auto wrow = w1.row(c);
            for (std::size_t j = 0; j < hidden; ++j) a1[j] += xv * wrow[j];
        }
        for (std::size_t j = 0; j < hidden; ++j) a1[j] = std::max(0.0, a1[j]);
        for (std::size_t j = 0; j < hidden; ++j) a2[j] = b2[j];
        for (std::size_t c = 0; c < hidden; ++c) {
            const double av = a1[c];
            if (av == 0.0) continue;
            const auto wrow = w2.row(c);
            for (std::size_t j = 0; j < hidden; ++j) a2[j] += av * wrow[j];
        }
        for (std::size_t j = 0; j < hidden; ++j) a2[j] = std::max(0.0, a2[j]);
    }
};

namespace detail {

inline double clamp_proba(double p) {
    return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

// One forward+backward pass over a mini-batch, accumulating mean gradients.
// Buffers live in the trainer so the hot loop never allocates.
struct MLPWorkspace {
    Matrix z1, a1, z2, a2;       // batch x hidden
    std::vector<double> p;       // batch
    Matrix d1, d2;               // batch x hidden
    Matrix gw1, gw2;
    std::vector<double> gb1, gb2, gw3;
    double gb3 = 0.0;

    void resize(std::size_t batch, std::size_t d) {
        const std::size_t h = MLPModel::hidden;
        z1 = Matrix(batch, h);
        a1 = Matrix(batch, h);
        z2 = Matrix(batch, h);
        a2 = Matrix(batch, h);
        p.assign(batch, 0.0);
        d1 = Matrix(batch, h);
        d2 = Matrix(batch, h);
        gw1 = Matrix(d, h);
        gw2 = Matrix(h, h);
        gb1.assign(h, 0.0);
        gb2.assign(h, 0.0);
        gw3.assign(h, 0.0);
    }
};

// Returns the mean cross-entropy of the batch (computed before the update).
inline double mlp_batch_step(MLPModel& m, MLPWorkspace& ws, const Matrix& x, const std::vector<int>& y,
                             const std::vector<std::size_t>& order, std::size_t start, std::size_t stop,
                             const TrainConfig& cfg, bool apply_update) {
    const std::size_t h = MLPModel::hidden;
    const std::size_t d = x.cols();
    const std::size_t batch = stop - start;
    const double inv = 1.0 / static_cast<double>(batch);

    // forward
    for (std::size_t b = 0; b < batch; ++b) {
        const auto xi = x.row(order[start + b]);
        auto z1 = ws.z1.row(b);
        for (std::size_t j = 0; j < h; ++j) z1[j] = m.b1[j];
        for (std::size_t c = 0; c < d; ++c) {
            const double xv = xi[c];
            const auto wrow = m.w1.row(c);
            for (std::size_t j = 0; j < h; ++j) z1[j] += xv * wrow[j];
        }
        auto a1 = ws.a1.row(b);
        for (std::size_t j = 0; j < h; ++j) a1[j] = std::max(0.0, z1[j]);
        auto z2 = ws.z2.row(b);
        for (std::size_t j = 0; j < h; ++j) z2[j] = m.b2[j];
        for (std::size_t c = 0; c < h; ++c) {
            const double av = a1[c];
            if (av == 0.0) continue;
            const auto wrow = m.w2.row(c);
            for (std::size_t j = 0; j < h; ++j) z2[j] += av * wrow[j];
        }
        auto a2 = ws.a2.row(b);
        for (std::size_t j = 0; j < h; ++j) a2[j] = std::max(0.0, z2[j]);
        double z3 = m.b3;
        for (std::size_t j = 0; j < h; ++j) z3 += a2[j] * m.w3[j];
        ws.p[b] = 1.0 / (1.0 + std::exp(-z3));
    }

    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double pb = clamp_proba(ws.p[b]);
        loss -= y[order[start + b]] == 1 ? std::log(pb) : std::log(1.0 - pb);
    }
    loss *= inv;
    if (!apply_update) return loss;

    // backward
    std::fill(ws.gw1.data().begin(), ws.gw1.data().end(), 0.0);
    std::fill(ws.gw2.data().begin(), ws.gw2.data().end(), 0.0);
    std::fill(ws.gb1.begin(), ws.gb1.end(), 0.0);
    std::fill(ws.gb2.begin(), ws.gb2.end(), 0.0);
    std::fill(ws.gw3.begin(), ws.gw3.end(), 0.0);
    ws.gb3 = 0.0;

    for (std::size_t b = 0; b < batch; ++b) {
        const double dz3 = (ws.p[b] - static_cast<double>(y[order[start + b]])) * inv;
        const auto a2 = ws.a2.row(b);
        const auto z2 = ws.z2.row(b);
        auto d2 = ws.d2.row(b);
        for (std::size_t j = 0; j < h; ++j) {
            ws.gw3[j] += dz3 * a2[j];
            d2[j] = z2[j] > 0.0 ? dz3 * m.w3[j] : 0.0;
        }
        ws.gb3 += dz3;
        const auto a1 = ws.a1.row(b);
        const auto z1 = ws.z1.row(b);
        auto d1 = ws.d1.row(b);
        for (std::size_t j = 0; j < h; ++j) ws.gb2[j] += d2[j];
        // gw2 += a1^T d2 ; d1 = d2 * W2^T masked by relu'(z1)
        for (std::size_t c = 0; c < h; ++c) {
            const double av = a1[c];
            auto grow = ws.gw2.row(c);
            const auto wrow = m.w2.row(c);
            double acc = 0.0;
            for (std::size_t j = 0; j < h; ++j) {
                grow[j] += av * d2[j];
                acc += wrow[j] * d2[j];
            }
            d1[c] = z1[c] > 0.0 ? acc : 0.0;
        }
        const auto xi = x.row(order[start + b]);
        for (std::size_t c = 0; c < d; ++c) {
            const double xv = xi[c];
            auto grow = ws.gw1.row(c);
            for (std::size_t j = 0; j < h; ++j) grow[j] += xv * d1[j];
        }
        for (std::size_t j = 0; j < h; ++j) ws.gb1[j] += d1[j];
    }

    const double lr = cfg.learning_rate;
    const double decay = std::max(0.0, 1.0 - lr * cfg.l2);
    for (std::size_t i = 0; i < m.w1.data().size(); ++i)
        m.w1.data()[i] = (m.w1.data()[i] - lr * ws.gw1.data()[i]) * decay;
    for (std::size_t i = 0; i < m.w2.data().size(); ++i)
        m.w2.data()[i] = (m.w2.data()[i] - lr * ws.gw2.data()[i]) * decay;
    for (std::size_t j = 0; j < h; ++j) {
        m.w3[j] = (m.w3[j] - lr * ws.gw3[j]) * decay;
        m.b1[j] -= lr * ws.gb1[j];
        m.b2[j] -= lr * ws.gb2[j];
    }
    m.b3 -= lr * ws.gb3;
    return loss;
}

} // namespace detail

inline MLPModel init_mlp(std::size_t d, std::uint64_t seed) {
    const std::size_t h = MLPModel::hidden;
    MLPModel m;
    m.w1 = Matrix(d, h);
    m.w2 = Matrix(h, h);
    m.b1.assign(h, 0.0);
    m.b2.assign(h, 0.0);
    m.w3.assign(h, 0.0);
    Rng rng(derive_seed(seed, "mlp_init"));
    const double s1 = std::sqrt(2.0 / static_cast<double>(d));
    for (auto& w : m.w1.data()) w = s1 * rng.normal();
    const double s2 = std::sqrt(2.0 / static_cast<double>(h));
    for (auto& w : m.w2.data()) w = s2 * rng.normal();
    const double s3 = std::sqrt(1.0 / static_cast<double>(h));
    for (auto& w : m.w3) w = s3 * rng.normal();
    return m;
}

// Mini-batch SGD on cross-entropy. Keeps the best-epoch snapshot and stops
// early once the epoch loss has not improved by 1e-5 for 20 epochs.
inline MLPModel train_mlp(const Dataset& train, const TrainConfig& cfg) {
    cfg.validate();
    validate_dataset(train);
    const std::size_t n = train.size();
    MLPModel model = init_mlp(train.dim(), cfg.seed);

    detail::MLPWorkspace ws;
    ws.resize(static_cast<std::size_t>(cfg.batch_size), train.dim());
    Rng rng(derive_seed(cfg.seed, "mlp_sgd"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    MLPModel best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    int stalled = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            const double batch_loss =
                detail::mlp_batch_step(model, ws, train.features, train.labels, order, start, stop, cfg, true);
            if (!std::isfinite(batch_loss))
                throw training_error("mlp training diverged at epoch " + std::to_string(epoch));
            epoch_loss += batch_loss;
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        if (epoch_loss < best_loss - 1e-5) {
            best_loss = epoch_loss;
            best = model;
            stalled = 0;
        } else {
            if (epoch_loss < best_loss) {
                best_loss = epoch_loss;
                best = model;
            }
            if (++stalled >= 20) break;
        }
    }
    return best;
}

// Mean cross-entropy of a model on a dataset; exposed for tests.
inline double mlp_loss(const MLPModel& m, const Dataset& ds) {
    const auto p = m.predict_proba(ds.features);
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pb = detail::clamp_proba(p[i]);
        loss -= ds.labels[i] == 1 ? std::log(pb) : std::log(1.0 - pb);
    }
    return loss / static_cast<double>(p.size());
}

// ---------------------------------------------------------------------------
// Random-feature nonlinear surrogate (cosine features approximating an RBF
// kernel) with a hinge-SGD linear model on top.
// ---------------------------------------------------------------------------

struct RFFModel {
    Matrix projection;          // d x m, standard normal entries
    std::vector<double> phase;  // m, uniform in [0, 2*pi)
    double bandwidth = 1.0;
    LinearModel inner;
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return projection.rows(); }
    std::size_t feature_dim() const { return projection.cols(); }

    void transform_row(std::span<const double> x, std::span<double> z) const {
        const std::size_t d = input_dim(), m = feature_dim();
        const double scale = std::sqrt(2.0 / static_cast<double>(m));
        for (std::size_t j = 0; j < m; ++j) z[j] = phase[j];
        for (std::size_t c = 0; c < d; ++c) {
            const double xv = x[c] / bandwidth;
            const auto prow = projection.row(c);
            for (std::size_t j = 0; j < m; ++j) z[j] += xv * prow[j];
        }
        for (std::size_t j = 0; j < m; ++j) z[j] = scale * std::cos(z[j]);
    }

    Matrix transform(const Matrix& x) const {
        if (x.cols() != input_dim()) throw validation_error("rff model: feature dimension mismatch");
        Matrix z(x.rows(), feature_dim());
        for (std::size_t i = 0; i < x.rows(); ++i) transform_row(x.row(i), z.row(i));
        return z;
    }

    double margin(std::span<const double> x) const {
        std::vector<double> z(feature_dim());
        transform_row(x, z);
        return inner.margin(z);
    }

    std::vector<int> predict(const Matrix& x) const { return inner.predict(transform(x)); }

    double hinge_loss(std::span<const double> x, int label) const {
        const double y = label == 1 ? 1.0 : -1.0;
        return std::max(0.0, 1.0 - y * margin(x));
    }
};

// Median pairwise Euclidean distance; the usual kernel bandwidth heuristic.
inline double median_pairwise_distance(const Matrix& x) {
    if (x.rows() < 2) throw validation_error("cannot compute bandwidth with fewer than 2 examples");
    std::vector<double> dists;
    dists.reserve(x.rows() * (x.rows() - 1) / 2);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i + 1; j < x.rows(); ++j)
            dists.push_back(euclidean_distance(x.row(i), x.row(j)));
    std::sort(dists.begin(), dists.end());
    const double med = median_sorted(dists);
    return med > 0.0 ? med : 1.0;
}

inline RFFModel train_rff(const Dataset& train, const TrainConfig& cfg, std::size_t feature_count = 256) {
    cfg.validate();
    validate_dataset(train);
    RFFModel model;
    model.seed = cfg.seed;
    model.bandwidth = median_pairwise_distance(train.features);
    model.projection = Matrix(train.dim(), feature_count);
    model.phase.assign(feature_count, 0.0);
    Rng rng(derive_seed(cfg.seed, "rff_proj"));
    for (auto& w : model.projection.data()) w = rng.normal();
    for (auto& p : model.phase) p = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

    Dataset lifted;
    lifted.features = model.transform(train.features);
    lifted.labels = train.labels;
    lifted.name = train.name;
    model.inner = train_linear(lifted, cfg, LossKind::hinge);
    return model;
}

// ---------------------------------------------------------------------------
// kNN, accuracy, cross-validation.
// ---------------------------------------------------------------------------

// Majority label among the k nearest training points (Euclidean). Distance
// ties prefer the lower training index; vote ties resolve to label 0.
inline std::vector<int> knn_predict(const Dataset& train, const Matrix& query, int k) {
    if (train.size() == 0) throw validation_error("knn: empty training set");
    if (k < 1 || static_cast<std::size_t>(k) > train.size())
        throw validation_error("knn: k must be in [1, n]");
    if (query.cols() != train.dim()) throw validation_error("knn: feature dimension mismatch");

    std::vector<int> out(query.rows());
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    for (std::size_t q = 0; q < query.rows(); ++q) {
        const auto xq = query.row(q);
        for (std::size_t i = 0; i < train.size(); ++i)
            dist[i] = {squared_distance(xq, train.features.row(i)), i};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        int votes1 = 0;
        for (int j = 0; j < k; ++j) votes1 += train.labels[dist[j].second];
        out[q] = (2 * votes1 > k) ? 1 : 0;
    }
    return out;
}

inline double accuracy_of_labels(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty())
        throw validation_error("accuracy: prediction/label size mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (predicted[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

template <typename ModelT>
inline double accuracy(const ModelT& model, const Dataset& ds) {
    return accuracy_of_labels(model.predict(ds.features), ds.labels);
}

// Stratified fold assignment: per class, seeded shuffle then round-robin
// deal. Every class must have at least `folds` members.
inline std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds, std::uint64_t seed) {
    if (folds < 2) throw validation_error("cross-validation needs folds >= 2");
    std::vector<std::size_t> idx0, idx1;
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.labels[i] == 0 ? idx0 : idx1).push_back(i);
    if (idx0.size() < static_cast<std::size_t>(folds) || idx1.size() < static_cast<std::size_t>(folds))
        throw validation_error("dataset '" + ds.name + "': class too small to stratify into " +
                               std::to_string(folds) + " folds");
    Rng rng(derive_seed(seed, "cv_folds"));
    std::vector<std::vector<std::size_t>> fold_indices(folds);
    for (auto* idx : {&idx0, &idx1}) {
        rng.shuffle(*idx);
        for (std::size_t i = 0; i < idx->size(); ++i) fold_indices[i % folds].push_back((*idx)[i]);
    }
    for (auto& f : fold_indices) std::sort(f.begin(), f.end());
    return fold_indices;
}

// Mean held-out accuracy of the MLP over stratified folds. Normalization is
// fitted inside each fold on its training part only.
inline double cross_val_accuracy(const Dataset& ds, int folds, const TrainConfig& cfg) {
    validate_dataset(ds);
    const auto fold_indices = stratified_folds(ds, folds, cfg.seed);
    double total = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_idx;
        for (int g = 0; g < folds; ++g)
            if (g != f) train_idx.insert(train_idx.end(), fold_indices[g].begin(), fold_indices[g].end());
        std::sort(train_idx.begin(), train_idx.end());
        Dataset tr = ds.subset(train_idx);
        Dataset te = ds.subset(fold_indices[f]);
        const Normalizer nz = Normalizer::fit(tr.features);
        const MLPModel model = train_mlp(nz.apply(tr), cfg.with_seed(derive_seed(cfg.seed, "cv_fit", f)));
        total += accuracy(model, nz.apply(te));
    }
    return total / static_cast<double>(folds);
}

inline double cross_val_accuracy(const Dataset& ds, const TrainConfig& cfg) {
    return cross_val_accuracy(ds, 5, cfg);
}

// ---------------------------------------------------------------------------
// Model serialization: JSON with a `kind` discriminator and row-major arrays.
// ---------------------------------------------------------------------------

using AnyModel = std::variant<LinearModel, RFFModel, MLPModel>;

inline nlohmann::json to_json(const LinearModel& m) {
    return {{"kind", "linear"},
            {"loss", m.loss_kind == LossKind::hinge ? "hinge" : "logistic"},
            {"dim", m.weights.size()},
            {"weights", m.weights},
            {"bias", m.bias}};
}

inline nlohmann::json to_json(const RFFModel& m) {
    return {{"kind", "rff"},
            {"dim", m.input_dim()},
            {"feature_count", m.feature_dim()},
            {"bandwidth", m.bandwidth},
            {"projection", m.projection.data()},
            {"phase", m.phase},
            {"seed", m.seed},
            {"inner", to_json(m.inner)}};
}

inline nlohmann::json to_json(const MLPModel& m) {
    return {{"kind", "mlp"},
            {"dim", m.input_dim()},
            {"hidden", MLPModel::hidden},
            {"w1", m.w1.data()},
            {"b1", m.b1},
            {"w2", m.w2.data()},
            {"b2", m.b2},
            {"w3", m.w3},
            {"b3", m.b3}};
}

inline nlohmann::json model_to_json(const AnyModel& m) {
    return std::visit([](const auto& model) { return to_json(model); }, m);
}

inline AnyModel model_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        LinearModel m;
        m.loss_kind = j.at("loss").get<std::string>() == "hinge" ? LossKind::hinge : LossKind::logistic;
        m.weights = j.at("weights").get<std::vector<double>>();
        m.bias = j.at("bias").get<double>();
        return m;
    }
    if (kind == "rff") {
        RFFModel m;
        const std::size_t d = j.at("dim").get<std::size_t>();
        const std::size_t fc = j.at("feature_count").get<std::size_t>();
        m.projection = Matrix(d, fc);
        m.projection.data() = j.at("projection").get<std::vector<double>>();
        m.phase = j.at("phase").get<std::vector<double>>();
        m.bandwidth = j.at("bandwidth").get<double>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.inner = std::get<LinearModel>(model_from_json(j.at("inner")));
        return m;
    }
    if (kind == "mlp") {
        MLPModel m;
        const std::size_t d = j.at("dim").get<std::size_t>();
        m.w1 = Matrix(d, MLPModel::hidden);
        m.w1.data() = j.at("w1").get<std::vector<double>>();
        m.b1 = j.at("b1").get<std::vector<double>>();
        m.w2 = Matrix(MLPModel::hidden, MLPModel::hidden);
        m.w2.data() = j.at("w2").get<std::vector<double>>();
        m.b2 = j.at("b2").get<std::vector<double>>();
        m.w3 = j.at("w3").get<std::vector<double>>();
        m.b3 = j.at("b3").get<double>();
        return m;
    }
    throw schema_error("unknown model kind '" + kind + "'");
}

} // namespace diva
