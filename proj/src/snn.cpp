#include "privsnn/snn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "privsnn/errors.hpp"

namespace privsnn {

namespace {

constexpr double kDeltaSlack = 1e-12;  // absorbs float rounding in ramp increments

void check_unit_range(const Matrix& x, const char* who) {
    for (const double v : x.data) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ArgumentError(std::string(who) + ": features must lie in [0,1], got " +
                                std::to_string(v));
        }
    }
}

}  // namespace

SpikeTrain encode_rate(const Matrix& x, int steps, SeededRng& rng) {
    check_unit_range(x, "encode_rate");
    SpikeTrain train(static_cast<std::size_t>(steps), x.rows, x.cols);
    for (std::size_t t = 0; t < train.steps; ++t)
        for (std::size_t b = 0; b < x.rows; ++b) {
            auto row = train.row(t, b);
            const double* xb = x.data.data() + b * x.cols;
            for (std::size_t n = 0; n < x.cols; ++n) row[n] = rng.next_double() < xb[n] ? 1 : 0;
        }
    return train;
}

SpikeTrain encode_latency(const Matrix& x, int steps, double tau, double threshold) {
    check_unit_range(x, "encode_latency");
    if (tau <= 0.0 || threshold <= 0.0) {
        throw ArgumentError("encode_latency: tau and threshold must be positive");
    }
    SpikeTrain train(static_cast<std::size_t>(steps), x.rows, x.cols);
    const auto last = static_cast<std::size_t>(steps - 1);
    for (std::size_t b = 0; b < x.rows; ++b)
        for (std::size_t n = 0; n < x.cols; ++n) {
            const double v = x(b, n);
            std::size_t t = last;
            if (v > threshold) {
                const double rc_time = tau * std::log(v / (v - threshold));
                const double rounded = std::round(rc_time);
                t = rounded >= static_cast<double>(last) ? last
                                                         : static_cast<std::size_t>(std::max(rounded, 0.0));
            }
            train.at(t, b, n) = 1;
        }
    return train;
}

SpikeTrain encode_delta(const Matrix& x, int steps, double threshold) {
    check_unit_range(x, "encode_delta");
    if (threshold <= 0.0) throw ArgumentError("encode_delta: threshold must be positive");
    SpikeTrain train(static_cast<std::size_t>(steps), x.rows, x.cols);
    for (std::size_t b = 0; b < x.rows; ++b)
        for (std::size_t n = 0; n < x.cols; ++n) {
            const double v = x(b, n);
            double ref = 0.0;  // ramp value at the last spike
            for (int t = 0; t < steps; ++t) {
                const double ramp = v * static_cast<double>(t + 1) / static_cast<double>(steps);
                if (ramp - ref >= threshold - kDeltaSlack) {
                    train.at(static_cast<std::size_t>(t), b, n) = 1;
                    ref = ramp;
                }
            }
        }
    return train;
}

SpikeTrain encode(const Matrix& x, const EncoderConfig& cfg, SeededRng& rng) {
    switch (cfg.kind) {
        case EncoderKind::Rate: return encode_rate(x, cfg.steps, rng);
        case EncoderKind::Latency: return encode_latency(x, cfg.steps, cfg.tau, cfg.threshold);
        case EncoderKind::Delta: return encode_delta(x, cfg.steps, cfg.threshold);
    }
    throw ArgumentError("encode: unknown encoder kind");
}

void lif_step(std::span<double> membrane, std::span<const double> current, const LifConfig& cfg,
              std::span<std::uint8_t> spikes_out) {
    if (membrane.size() != current.size() || membrane.size() != spikes_out.size()) {
        throw ShapeError("lif_step: span sizes differ");
    }
    for (std::size_t i = 0; i < membrane.size(); ++i) {
        double u = cfg.beta * membrane[i] + current[i];
        const bool spike = u > cfg.threshold;
        spikes_out[i] = spike ? 1 : 0;
        if (spike) u -= cfg.threshold;
        membrane[i] = u;
    }
}

double atan_surrogate_grad(double u_minus_theta, double alpha) {
    const double s = std::numbers::pi * alpha * u_minus_theta / 2.0;
    return (alpha / 2.0) / (1.0 + s * s);
}

double atan_surrogate_spike(double u_minus_theta, double alpha) {
    return std::atan(std::numbers::pi * alpha * u_minus_theta / 2.0) / std::numbers::pi + 0.5;
}

Matrix snn_forward(const SnnParams& params, const SpikeTrain& spikes, const LifConfig& cfg,
                   SnnCache* cache, const double* smooth_alpha) {
    const std::size_t hidden = params.w1.cols;
    const std::size_t classes = params.w2.cols;
    const std::size_t batch = spikes.batch;
    if (spikes.neurons != params.w1.rows) {
        throw ShapeError("snn_forward: spike neurons " + std::to_string(spikes.neurons) +
                         " != input dim " + std::to_string(params.w1.rows));
    }
    if (spikes.steps != static_cast<std::size_t>(cfg.steps)) {
        throw ShapeError("snn_forward: encoder steps != lif steps");
    }
    if (cache) {
        cache->input = spikes;
        cache->hidden_membrane.assign(spikes.steps, Matrix());
        cache->hidden_spikes.assign(spikes.steps, Matrix());
        cache->output_membrane.assign(spikes.steps, Matrix());
        cache->lif = cfg;
        cache->smooth = smooth_alpha != nullptr;
        cache->smooth_alpha = smooth_alpha ? *smooth_alpha : 0.0;
    }

    Matrix u_hidden(batch, hidden);
    Matrix u_output(batch, classes);
    Matrix counts(batch, classes);
    Matrix hidden_act(batch, hidden);  // this step's hidden spikes

    for (std::size_t t = 0; t < spikes.steps; ++t) {
        // hidden current: sum of W1 rows for active input bits, plus bias.
        // Input-neuron outer loop streams each W1 row once per step.
        Matrix current(batch, hidden);
        for (std::size_t b = 0; b < batch; ++b) {
            double* crow = current.data.data() + b * hidden;
            for (std::size_t j = 0; j < hidden; ++j) crow[j] = params.b1[j];
        }
        for (std::size_t n = 0; n < spikes.neurons; ++n) {
            const double* wrow = params.w1.data.data() + n * hidden;
            const std::uint8_t* bit = spikes.bits.data() + (t * batch) * spikes.neurons + n;
            for (std::size_t b = 0; b < batch; ++b, bit += spikes.neurons) {
                if (!*bit) continue;
                double* crow = current.data.data() + b * hidden;
                for (std::size_t j = 0; j < hidden; ++j) crow[j] += wrow[j];
            }
        }
        // hidden LIF
        for (std::size_t i = 0; i < u_hidden.data.size(); ++i) {
            u_hidden.data[i] = cfg.beta * u_hidden.data[i] + current.data[i];
        }
        if (cache) cache->hidden_membrane[t] = u_hidden;
        if (smooth_alpha) {
            for (std::size_t i = 0; i < u_hidden.data.size(); ++i) {
                const double s = atan_surrogate_spike(u_hidden.data[i] - cfg.threshold, *smooth_alpha);
                hidden_act.data[i] = s;
                u_hidden.data[i] -= cfg.threshold * s;
            }
        } else {
            for (std::size_t i = 0; i < u_hidden.data.size(); ++i) {
                const bool spike = u_hidden.data[i] > cfg.threshold;
                hidden_act.data[i] = spike ? 1.0 : 0.0;
                if (spike) u_hidden.data[i] -= cfg.threshold;
            }
        }
        if (cache) cache->hidden_spikes[t] = hidden_act;

        // output current and LIF
        Matrix out_current = matmul(hidden_act, params.w2);
        for (std::size_t b = 0; b < batch; ++b) {
            double* row = out_current.data.data() + b * classes;
            for (std::size_t j = 0; j < classes; ++j) row[j] += params.b2[j];
        }
        for (std::size_t i = 0; i < u_output.data.size(); ++i) {
            u_output.data[i] = cfg.beta * u_output.data[i] + out_current.data[i];
        }
        if (cache) cache->output_membrane[t] = u_output;
        if (smooth_alpha) {
            for (std::size_t i = 0; i < u_output.data.size(); ++i) {
                const double s = atan_surrogate_spike(u_output.data[i] - cfg.threshold, *smooth_alpha);
                counts.data[i] += s;
                u_output.data[i] -= cfg.threshold * s;
            }
        } else {
            for (std::size_t i = 0; i < u_output.data.size(); ++i) {
                if (u_output.data[i] > cfg.threshold) {
                    counts.data[i] += 1.0;
                    u_output.data[i] -= cfg.threshold;
                }
            }
        }
    }
    if (cache) cache->logits = counts;
    return counts;
}

double snn_backward(const SnnParams& params, const SnnCache& cache, std::span<const int> labels,
                    const SurrogateConfig& surrogate, MlpGrads& grads) {
    const std::size_t steps = cache.hidden_membrane.size();
    const std::size_t batch = cache.logits.rows;
    const std::size_t classes = cache.logits.cols;
    const std::size_t hidden = params.w1.cols;
    if (labels.size() != batch) throw ShapeError("snn_backward: labels/batch mismatch");

    // dlogits = (softmax - onehot)/batch; loss = mean CE
    Matrix dlogits(batch, classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw ArgumentError("snn_backward: label " + std::to_string(y) + " out of range");
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

    grads.w1 = Matrix(params.w1.rows, params.w1.cols);
    grads.b1.assign(params.b1.size(), 0.0);
    grads.w2 = Matrix(params.w2.rows, params.w2.cols);
    grads.b2.assign(params.b2.size(), 0.0);

    const double beta = cache.lif.beta;
    const double theta = cache.lif.threshold;
    const double alpha = cache.smooth ? cache.smooth_alpha : surrogate.alpha;

    Matrix out_carry(batch, classes);   // beta * dUpre_out[t+1]
    Matrix hid_carry(batch, hidden);    // beta * dUpre_hid[t+1]

    for (std::size_t t = steps; t-- > 0;) {
        // output layer: S_out[t] feeds the logit sum, so dS_out[t] = dlogits
        Matrix du_out(batch, classes);
        for (std::size_t i = 0; i < du_out.data.size(); ++i) {
            const double u = cache.output_membrane[t].data[i] - theta;
            const double g = atan_surrogate_grad(u, alpha);
            if (cache.smooth) {
                du_out.data[i] = dlogits.data[i] * g + out_carry.data[i] * (1.0 - theta * g);
            } else {
                du_out.data[i] = dlogits.data[i] * g + out_carry.data[i];
            }
        }
        // dI_out = du_out
        for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t j = 0; j < classes; ++j) grads.b2[j] += du_out(b, j);
        Matrix dw2_t = matmul_transpose_a(cache.hidden_spikes[t], du_out);
        for (std::size_t i = 0; i < grads.w2.data.size(); ++i) grads.w2.data[i] += dw2_t.data[i];
        Matrix ds_hidden = matmul_transpose_b(du_out, params.w2);

        // hidden layer
        Matrix du_hid(batch, hidden);
        for (std::size_t i = 0; i < du_hid.data.size(); ++i) {
            const double u = cache.hidden_membrane[t].data[i] - theta;
            const double g = atan_surrogate_grad(u, alpha);
            if (cache.smooth) {
                du_hid.data[i] = ds_hidden.data[i] * g + hid_carry.data[i] * (1.0 - theta * g);
            } else {
                du_hid.data[i] = ds_hidden.data[i] * g + hid_carry.data[i];
            }
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const double* drow = du_hid.data.data() + b * hidden;
            for (std::size_t j = 0; j < hidden; ++j) grads.b1[j] += drow[j];
        }
        // dW1 scatter, input-neuron outer: accumulate active-sample du rows
        // into a hot buffer, then touch each gradient row once per step.
        std::vector<double> row_sum(hidden);
        for (std::size_t n = 0; n < cache.input.neurons; ++n) {
            const std::uint8_t* bit = cache.input.bits.data() + (t * batch) * cache.input.neurons + n;
            bool any = false;
            for (std::size_t b = 0; b < batch; ++b, bit += cache.input.neurons) {
                if (!*bit) continue;
                const double* drow = du_hid.data.data() + b * hidden;
                if (!any) {
                    std::copy(drow, drow + hidden, row_sum.begin());
                    any = true;
                } else {
                    for (std::size_t j = 0; j < hidden; ++j) row_sum[j] += drow[j];
                }
            }
            if (any) {
                double* wrow = grads.w1.data.data() + n * hidden;
                for (std::size_t j = 0; j < hidden; ++j) wrow[j] += row_sum[j];
            }
        }

        // carries for step t-1
        for (std::size_t i = 0; i < out_carry.data.size(); ++i) out_carry.data[i] = beta * du_out.data[i];
        for (std::size_t i = 0; i < hid_carry.data.size(); ++i) hid_carry.data[i] = beta * du_hid.data[i];
    }
    return loss;
}

SpikeTrain encode_dataset_rows(const Dataset& ds, std::span<const std::size_t> idx,
                               const EncoderConfig& encoder, const SeededRng& base_rng) {
    SpikeTrain train(static_cast<std::size_t>(encoder.steps), idx.size(), ds.feature_dim());
    Matrix row(1, ds.feature_dim());
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto src = ds.features.row(idx[b]);
        std::copy(src.begin(), src.end(), row.data.begin());
        SeededRng sample_rng = base_rng.derive(idx[b]);
        SpikeTrain one = encode(row, encoder, sample_rng);
        for (std::size_t t = 0; t < train.steps; ++t) {
            const auto s = one.row(t, 0);
            std::copy(s.begin(), s.end(), train.row(t, b).begin());
        }
    }
    return train;
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

double snn_accuracy(const SnnParams& params, const Dataset& ds, std::span<const std::size_t> idx,
                    const EncoderConfig& encoder, const LifConfig& lif, std::uint64_t eval_seed) {
    if (idx.empty()) return 0.0;
    constexpr std::size_t kEvalBatch = 128;
    const SeededRng eval_rng(eval_seed);
    std::size_t correct = 0;
    for (std::size_t start = 0; start < idx.size(); start += kEvalBatch) {
        const std::size_t n = std::min(kEvalBatch, idx.size() - start);
        SpikeTrain spikes = encode_dataset_rows(ds, idx.subspan(start, n), encoder, eval_rng);
        Matrix logits = snn_forward(params, spikes, lif);
        for (std::size_t i = 0; i < n; ++i) {
            if (argmax_row(logits.row(i)) == static_cast<std::size_t>(ds.labels[idx[start + i]])) {
                ++correct;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

SnnTrainResult train_snn(const Dataset& ds, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> test_idx, const TrainConfig& cfg,
                         const EncoderConfig& encoder, const LifConfig& lif) {
    if (cfg.epochs < 1 || cfg.batch_size < 1) {
        throw ArgumentError("train_snn: epochs and batch_size must be >= 1");
    }
    if (encoder.steps != lif.steps) {
        throw ArgumentError("train_snn: encoder steps must equal lif steps");
    }
    SeededRng rng(cfg.seed);
    SeededRng init_rng = rng.derive(1);
    SnnParams params = init_mlp(ds.feature_dim(), static_cast<std::size_t>(cfg.hidden),
                                static_cast<std::size_t>(ds.num_classes), init_rng);
    AdamState adam = make_adam_state(params);
    MlpGrads grads;
    SnnCache cache;
    // One encoding stream per run, shared by training and evaluation: each
    // sample's train is derived from its dataset index, so the model sees a
    // stable spike pattern per sample and queries reproduce it exactly.
    const std::uint64_t eval_seed = rng.derive(2).seed();
    const SeededRng encode_rng(eval_seed);

    SnnTrainResult result;
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffle_indices(rng, train_idx.size());
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            std::vector<std::size_t> batch_idx(n);
            for (std::size_t i = 0; i < n; ++i) batch_idx[i] = train_idx[order[start + i]];
            SpikeTrain spikes = encode_dataset_rows(ds, batch_idx, encoder, encode_rng);
            const auto labels = gather_labels(ds, batch_idx);
            snn_forward(params, spikes, lif, &cache);
            epoch_loss += snn_backward(params, cache, labels, SurrogateConfig{}, grads);
            ++step;
            double lr = cfg.learning_rate;
            if (step < cfg.warmup_steps) {
                lr *= static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
            }
            adam_step(params, grads, adam, lr);
            ++batches;
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    }
    result.train_acc = snn_accuracy(params, ds, train_idx, encoder, lif, eval_seed);
    result.test_acc = snn_accuracy(params, ds, test_idx, encoder, lif, eval_seed);
    result.params = std::move(params);
    return result;
}

}  // namespace privsnn
