#include "privsnn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "privsnn/errors.hpp"

namespace privsnn {

namespace {

void he_uniform(Matrix& w, std::size_t fan_in, SeededRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (auto& v : w.data) v = bound * (2.0 * rng.next_double() - 1.0);
}

}  // namespace

MlpParams init_mlp(std::size_t input_dim, std::size_t hidden, std::size_t classes, SeededRng& rng) {
    MlpParams p;
    p.w1 = Matrix(input_dim, hidden);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(hidden, classes);
    p.b2.assign(classes, 0.0);
    he_uniform(p.w1, input_dim, rng);
    he_uniform(p.w2, hidden, rng);
    return p;
}

Matrix mlp_forward(const MlpParams& params, const Matrix& x, MlpCache* cache) {
    if (x.cols != params.w1.rows) {
        throw ShapeError("mlp_forward: input dim " + std::to_string(x.cols) + " != " +
                         std::to_string(params.w1.rows));
    }
    Matrix preact = matmul(x, params.w1);
    for (std::size_t i = 0; i < preact.rows; ++i) {
        double* row = preact.data.data() + i * preact.cols;
        for (std::size_t j = 0; j < preact.cols; ++j) row[j] += params.b1[j];
    }
    Matrix hidden = preact;
    for (auto& v : hidden.data) v = std::max(v, 0.0);
    Matrix logits = matmul(hidden, params.w2);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double* row = logits.data.data() + i * logits.cols;
        for (std::size_t j = 0; j < logits.cols; ++j) row[j] += params.b2[j];
    }
    if (cache) {
        cache->input = x;
        cache->preact = std::move(preact);
        cache->hidden = std::move(hidden);
        cache->logits = logits;
    }
    return logits;
}

double mlp_backward(const MlpParams& params, const MlpCache& cache, std::span<const int> labels,
                    MlpGrads& grads) {
    const std::size_t batch = cache.logits.rows;
    const std::size_t classes = cache.logits.cols;
    if (labels.size() != batch) throw ShapeError("mlp_backward: labels/batch mismatch");

    // dlogits = (softmax - onehot) / batch; loss = mean CE via log-sum-exp
    Matrix dlogits(batch, classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw ArgumentError("mlp_backward: label " + std::to_string(y) + " out of range");
        }
        const auto row = cache.logits.row(i);
        const double lse = log_sum_exp(row);
        loss += lse - row[static_cast<std::size_t>(y)];
        for (std::size_t j = 0; j < classes; ++j) {
            dlogits(i, j) = std::exp(row[j] - lse) / static_cast<double>(batch);
        }
        dlogits(i, static_cast<std::size_t>(y)) -= 1.0 / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);

    grads.w2 = matmul_transpose_a(cache.hidden, dlogits);
    grads.b2.assign(classes, 0.0);
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < classes; ++j) grads.b2[j] += dlogits(i, j);

    Matrix dhidden = matmul_transpose_b(dlogits, params.w2);
    for (std::size_t i = 0; i < dhidden.data.size(); ++i) {
        if (cache.preact.data[i] <= 0.0) dhidden.data[i] = 0.0;
    }

    grads.w1 = matmul_transpose_a(cache.input, dhidden);
    grads.b1.assign(params.b1.size(), 0.0);
    for (std::size_t i = 0; i < batch; ++i)
        for (std::size_t j = 0; j < dhidden.cols; ++j) grads.b1[j] += dhidden(i, j);

    return loss;
}

AdamState make_adam_state(const MlpParams& params) {
    AdamState s;
    s.m.w1 = Matrix(params.w1.rows, params.w1.cols);
    s.m.b1.assign(params.b1.size(), 0.0);
    s.m.w2 = Matrix(params.w2.rows, params.w2.cols);
    s.m.b2.assign(params.b2.size(), 0.0);
    s.v = s.m;
    return s;
}

namespace {

void adam_update_span(std::span<double> p, std::span<const double> g, std::span<double> m,
                      std::span<double> v, double lr, double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = AdamState::beta1 * m[i] + (1.0 - AdamState::beta1) * g[i];
        v[i] = AdamState::beta2 * v[i] + (1.0 - AdamState::beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::eps);
    }
}

}  // namespace

void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, double learning_rate) {
    ++state.step;
    const double bc1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.step));
    adam_update_span(params.w1.data, grads.w1.data, state.m.w1.data, state.v.w1.data,
                     learning_rate, bc1, bc2);
    adam_update_span(params.b1, grads.b1, state.m.b1, state.v.b1, learning_rate, bc1, bc2);
    adam_update_span(params.w2.data, grads.w2.data, state.m.w2.data, state.v.w2.data,
                     learning_rate, bc1, bc2);
    adam_update_span(params.b2, grads.b2, state.m.b2, state.v.b2, learning_rate, bc1, bc2);
}

std::vector<double> flatten(const MlpParams& p) {
    std::vector<double> out;
    out.reserve(p.param_count());
    out.insert(out.end(), p.w1.data.begin(), p.w1.data.end());
    out.insert(out.end(), p.b1.begin(), p.b1.end());
    out.insert(out.end(), p.w2.data.begin(), p.w2.data.end());
    out.insert(out.end(), p.b2.begin(), p.b2.end());
    return out;
}

void add_scaled(MlpParams& p, std::span<const double> flat, double scale) {
    if (flat.size() != p.param_count()) throw ShapeError("add_scaled: flat size mismatch");
    std::size_t k = 0;
    for (auto& v : p.w1.data) v += scale * flat[k++];
    for (auto& v : p.b1) v += scale * flat[k++];
    for (auto& v : p.w2.data) v += scale * flat[k++];
    for (auto& v : p.b2) v += scale * flat[k++];
}

Matrix gather_features(const Dataset& ds, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), ds.features.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = ds.features.row(idx[r]);
        std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * out.cols));
    }
    return out;
}

std::vector<int> gather_labels(const Dataset& ds, std::span<const std::size_t> idx) {
    std::vector<int> out(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) out[r] = ds.labels[idx[r]];
    return out;
}

namespace {
std::size_t argmax_row(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}
}  // namespace

double mlp_accuracy(const MlpParams& params, const Dataset& ds, std::span<const std::size_t> idx) {
    if (idx.empty()) return 0.0;
    constexpr std::size_t kEvalBatch = 256;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < idx.size(); start += kEvalBatch) {
        const std::size_t n = std::min(kEvalBatch, idx.size() - start);
        Matrix x = gather_features(ds, idx.subspan(start, n));
        Matrix logits = mlp_forward(params, x);
        for (std::size_t i = 0; i < n; ++i) {
            if (argmax_row(logits.row(i)) == static_cast<std::size_t>(ds.labels[idx[start + i]])) {
                ++correct;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

AnnTrainResult train_ann(const Dataset& ds, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> test_idx, const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw ArgumentError("train_ann: epochs and batch_size must be >= 1");
    }
    SeededRng rng(cfg.seed);
    SeededRng init_rng = rng.derive(1);
    MlpParams params = init_mlp(ds.feature_dim(), static_cast<std::size_t>(cfg.hidden),
                                static_cast<std::size_t>(ds.num_classes), init_rng);
    AdamState adam = make_adam_state(params);
    MlpGrads grads;
    MlpCache cache;

    AnnTrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffle_indices(rng, train_idx.size());
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            std::vector<std::size_t> batch_idx(n);
            for (std::size_t i = 0; i < n; ++i) batch_idx[i] = train_idx[order[start + i]];
            Matrix x = gather_features(ds, batch_idx);
            const auto labels = gather_labels(ds, batch_idx);
            mlp_forward(params, x, &cache);
            epoch_loss += mlp_backward(params, cache, labels, grads);
            adam_step(params, grads, adam, cfg.learning_rate);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
    result.train_acc = mlp_accuracy(params, ds, train_idx);
    result.test_acc = mlp_accuracy(params, ds, test_idx);
    result.params = std::move(params);
    return result;
}

}  // namespace privsnn
