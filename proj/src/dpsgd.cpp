#include "privsnn/dpsgd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "privsnn/errors.hpp"
#include "privsnn/matrix.hpp"

namespace privsnn {

void clip_gradient(std::span<double> g, double clip) {
    if (clip <= 0.0) throw ArgumentError("clip_gradient: clip bound must be positive");
    const double norm = l2_norm(g);
    const double scale = 1.0 / std::max(1.0, norm / clip);
    if (scale < 1.0) {
        for (auto& v : g) v *= scale;
    }
}

std::vector<std::size_t> poisson_sample(std::size_t n, double q, SeededRng& rng) {
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("poisson_sample: q must be in [0,1]");
    std::vector<std::size_t> picked;
    if (q == 0.0) return picked;
    if (q == 1.0) {
        picked.resize(n);
        for (std::size_t i = 0; i < n; ++i) picked[i] = i;
        return picked;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.next_double() < q) picked.push_back(i);
    }
    return picked;
}

std::vector<double> noisy_aggregate(const std::vector<std::vector<double>>& clipped_grads,
                                    double sigma, double clip, std::size_t lot_size,
                                    SeededRng& rng, std::size_t dim) {
    if (lot_size == 0) throw ArgumentError("noisy_aggregate: lot_size must be positive");
    for (const auto& g : clipped_grads) dim = std::max(dim, g.size());
    std::vector<double> out(dim, 0.0);
    for (const auto& g : clipped_grads) {
        for (std::size_t i = 0; i < g.size(); ++i) out[i] += g[i];
    }
    if (sigma > 0.0) {
        const double stddev = sigma * clip;
        for (auto& v : out) v += rng.gaussian(0.0, stddev);
    }
    const double inv = 1.0 / static_cast<double>(lot_size);
    for (auto& v : out) v *= inv;
    return out;
}

namespace {

// log(sum exp(terms)) without overflow
double log_sum_exp_terms(const std::vector<double>& terms) {
    double m = -std::numeric_limits<double>::infinity();
    for (const double t : terms) m = std::max(m, t);
    double s = 0.0;
    for (const double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

// log binomial coefficient via lgamma
double log_binom(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Renyi divergence upper bound for the subsampled Gaussian at integer order:
//   rho(alpha) = log( sum_k C(alpha,k) (1-q)^(alpha-k) q^k e^{k(k-1)/(2 sigma^2)} ) / (alpha-1)
double sgm_rho_int(int alpha, double q, double sigma) {
    std::vector<double> terms(static_cast<std::size_t>(alpha) + 1);
    const double logq = std::log(q);
    const double log1q = std::log1p(-q);
    for (int k = 0; k <= alpha; ++k) {
        terms[static_cast<std::size_t>(k)] = log_binom(alpha, k) + (alpha - k) * log1q + k * logq +
                                             static_cast<double>(k) * (k - 1) / (2.0 * sigma * sigma);
    }
    return log_sum_exp_terms(terms) / (alpha - 1.0);
}

}  // namespace

double rdp_epsilon(double sigma, double q, long steps, double delta) {
    if (!(q >= 0.0 && q <= 1.0)) throw ArgumentError("rdp_epsilon: q must be in [0,1]");
    if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("rdp_epsilon: delta must be in (0,1)");
    if (steps < 0) throw ArgumentError("rdp_epsilon: steps must be nonnegative");
    if (sigma < 0.0) throw ArgumentError("rdp_epsilon: sigma must be nonnegative");
    if (sigma == 0.0) return std::numeric_limits<double>::infinity();
    if (q == 0.0 || steps == 0) return 0.0;

    const double log_inv_delta = std::log(1.0 / delta);
    if (q == 1.0) {
        // continuous minimum of T*a/(2s^2) + log(1/d)/(a-1) at a = 1 + sqrt(2 s^2 log(1/d) / T)
        const double s2 = sigma * sigma;
        const double alpha = 1.0 + std::sqrt(2.0 * s2 * log_inv_delta / static_cast<double>(steps));
        return static_cast<double>(steps) * alpha / (2.0 * s2) + log_inv_delta / (alpha - 1.0);
    }

    double best = std::numeric_limits<double>::infinity();
    // alpha = 1.5: bound by the unsubsampled divergence (subsampling shrinks it)
    {
        const double rho = 1.5 / (2.0 * sigma * sigma);
        best = std::min(best, static_cast<double>(steps) * rho + log_inv_delta / 0.5);
    }
    for (int alpha = 2; alpha <= 256; ++alpha) {
        const double rho = sgm_rho_int(alpha, q, sigma);
        const double eps = static_cast<double>(steps) * rho + log_inv_delta / (alpha - 1.0);
        best = std::min(best, eps);
    }
    return best;
}

double calibrate_sigma(double target_epsilon, double delta, double q, long steps) {
    if (target_epsilon <= 0.0) throw ArgumentError("calibrate_sigma: target epsilon must be positive");
    constexpr double kSigmaCap = 1e6;
    double hi = 1.0;
    while (rdp_epsilon(hi, q, steps, delta) > target_epsilon) {
        hi *= 2.0;
        if (hi > kSigmaCap) {
            throw TrainingError("calibrate_sigma: target epsilon unreachable below sigma 1e6");
        }
    }
    double lo = hi / 2.0;
    if (hi == 1.0) lo = 1e-3;  // epsilon already satisfied at sigma = 1
    while (hi - lo > 1e-3 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (rdp_epsilon(mid, q, steps, delta) <= target_epsilon) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

DpsgdResult train_dpsgd(ModelKind kind, const Dataset& ds,
                        std::span<const std::size_t> train_idx,
                        std::span<const std::size_t> test_idx, const DpConfig& dp,
                        const TrainConfig& train_cfg, const EncoderConfig& encoder,
                        const LifConfig& lif) {
    if (train_idx.empty()) throw ArgumentError("train_dpsgd: empty training split");
    const double q = std::min(1.0, static_cast<double>(dp.lot_size) /
                                       static_cast<double>(train_idx.size()));

    SeededRng rng(train_cfg.seed);
    SeededRng init_rng = rng.derive(1);
    MlpParams params = init_mlp(ds.feature_dim(), static_cast<std::size_t>(train_cfg.hidden),
                                static_cast<std::size_t>(ds.num_classes), init_rng);
    const std::uint64_t eval_seed = rng.derive(2).seed();
    const SeededRng encode_rng(eval_seed);

    MlpCache ann_cache;
    SnnCache snn_cache;
    MlpGrads grads;
    std::vector<std::vector<double>> lot_grads;
    Matrix one_x(1, ds.feature_dim());
    std::vector<int> one_y(1);

    auto eval_accuracy = [&](std::span<const std::size_t> idx) {
        if (kind == ModelKind::Ann) return mlp_accuracy(params, ds, idx);
        return snn_accuracy(params, ds, idx, encoder, lif, eval_seed);
    };

    DpsgdResult result;
    for (long step = 1; step <= dp.steps; ++step) {
        const auto lot = poisson_sample(train_idx.size(), q, rng);
        lot_grads.clear();
        for (const std::size_t local : lot) {
            const std::size_t sample = train_idx[local];
            one_y[0] = ds.labels[sample];
            const auto src = ds.features.row(sample);
            std::copy(src.begin(), src.end(), one_x.data.begin());
            if (kind == ModelKind::Ann) {
                mlp_forward(params, one_x, &ann_cache);
                mlp_backward(params, ann_cache, one_y, grads);
            } else {
                // fresh encoding per presentation: the model must fit the
                // rate-level signal rather than one frozen spike pattern
                const std::size_t single[1] = {sample};
                const SeededRng step_rng = encode_rng.derive(static_cast<std::uint64_t>(step));
                SpikeTrain spikes = encode_dataset_rows(ds, single, encoder, step_rng);
                snn_forward(params, spikes, lif, &snn_cache);
                snn_backward(params, snn_cache, one_y, SurrogateConfig{}, grads);
            }
            std::vector<double> flat = flatten(grads);
            clip_gradient(flat, dp.clip);
            lot_grads.push_back(std::move(flat));
        }
        std::vector<double> update =
            noisy_aggregate(lot_grads, dp.sigma, dp.clip, dp.lot_size, rng, params.param_count());
        add_scaled(params, update, -dp.learning_rate);

        if (dp.eval_every > 0 && (step % dp.eval_every == 0 || step == dp.steps)) {
            result.history.push_back({step, rdp_epsilon(dp.sigma, q, step, dp.delta),
                                      eval_accuracy(train_idx), eval_accuracy(test_idx)});
        }
    }

    result.train_acc = eval_accuracy(train_idx);
    result.test_acc = eval_accuracy(test_idx);
    result.realized = {rdp_epsilon(dp.sigma, q, dp.steps, dp.delta), dp.delta};
    result.params = std::move(params);
    return result;
}

}  // namespace privsnn
