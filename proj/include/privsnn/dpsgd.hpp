#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/mlp.hpp"
#include "privsnn/rng.hpp"
#include "privsnn/snn.hpp"

namespace privsnn {

struct DpConfig {
    double clip = 1.0;           // gradient norm bound C
    double sigma = 1.0;          // noise multiplier of C
    std::size_t lot_size = 32;   // expected lot size L; sampling rate q = L/N
    double learning_rate = 0.05; // plain SGD step
    long steps = 300;            // iterations T
    double target_epsilon = 1.0;
    double delta = 1e-5;
    long eval_every = 0;         // record accuracy/epsilon history every k steps (0 = off)
};

struct PrivacyBudget {
    double epsilon = 0.0;
    double delta = 0.0;
};

// Scale g so its L2 norm is at most clip; direction preserved.
void clip_gradient(std::span<double> g, double clip);

// Each index 0..n-1 included independently with probability q.
std::vector<std::size_t> poisson_sample(std::size_t n, double q, SeededRng& rng);

// (sum of grads + N(0, sigma^2 C^2 I)) / lot_size. The divisor is the
// expected lot size, not the realized count. sigma == 0 skips the noise
// draw entirely (bitwise SGD equivalence). An empty lot yields pure noise
// divided by lot_size; `dim` pins the dimension in that case (0 = infer).
std::vector<double> noisy_aggregate(const std::vector<std::vector<double>>& clipped_grads,
                                    double sigma, double clip, std::size_t lot_size,
                                    SeededRng& rng, std::size_t dim = 0);

// Renyi-DP accountant for the subsampled Gaussian mechanism:
//   epsilon = min_alpha [ T * rho(alpha) + ln(1/delta)/(alpha - 1) ].
// For q = 1, rho(alpha) = alpha/(2 sigma^2) and the minimum is taken over
// continuous alpha (closed form); for q < 1, rho is the standard integer-
// order upper bound of Mironov et al. evaluated on alpha in {1.5, 2..256}
// (alpha = 1.5 uses the q = 1 divergence, which subsampling only shrinks).
// sigma == 0 returns +infinity.
double rdp_epsilon(double sigma, double q, long steps, double delta);

// Smallest sigma (relative tolerance 1e-3) with rdp_epsilon <= target.
// Throws TrainingError when no sigma below 1e6 reaches the target.
double calibrate_sigma(double target_epsilon, double delta, double q, long steps);

struct DpsgdHistoryRow {
    long step;
    double epsilon_spent;
    double train_acc;
    double test_acc;
};

struct DpsgdResult {
    MlpParams params;  // ANN or SNN weights, same container
    double train_acc = 0.0;
    double test_acc = 0.0;
    PrivacyBudget realized;
    std::vector<DpsgdHistoryRow> history;
};

// Alg.-style DPSGD: Poisson lot, per-example clipping, Gaussian noising,
// plain SGD update. Per-example gradients come from batch-of-one backward
// passes (BPTT per sample for the spiking net).
DpsgdResult train_dpsgd(ModelKind kind, const Dataset& ds,
                        std::span<const std::size_t> train_idx,
                        std::span<const std::size_t> test_idx, const DpConfig& dp,
                        const TrainConfig& train_cfg, const EncoderConfig& encoder,
                        const LifConfig& lif);

}  // namespace privsnn
