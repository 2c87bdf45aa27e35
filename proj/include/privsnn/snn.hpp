#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/matrix.hpp"
#include "privsnn/mlp.hpp"
#include "privsnn/rng.hpp"

namespace privsnn {

/// Binary spike tensor, steps x batch x neurons.
struct SpikeTrain {
    std::size_t steps = 0;
    std::size_t batch = 0;
    std::size_t neurons = 0;
    std::vector<std::uint8_t> bits;

    SpikeTrain() = default;
    SpikeTrain(std::size_t t, std::size_t b, std::size_t n)
        : steps(t), batch(b), neurons(n), bits(t * b * n, 0) {}

    std::uint8_t& at(std::size_t t, std::size_t b, std::size_t n) {
        return bits[(t * batch + b) * neurons + n];
    }
    std::uint8_t at(std::size_t t, std::size_t b, std::size_t n) const {
        return bits[(t * batch + b) * neurons + n];
    }
    std::span<const std::uint8_t> row(std::size_t t, std::size_t b) const {
        return {bits.data() + (t * batch + b) * neurons, neurons};
    }
    std::span<std::uint8_t> row(std::size_t t, std::size_t b) {
        return {bits.data() + (t * batch + b) * neurons, neurons};
    }
};

enum class EncoderKind { Rate, Latency, Delta };

struct EncoderConfig {
    EncoderKind kind = EncoderKind::Rate;
    int steps = 10;
    double tau = 5.0;        // RC constant, latency only
    double threshold = 0.1;  // latency and delta
};

struct LifConfig {
    double beta = 0.95;      // membrane decay per step
    double threshold = 1.0;  // firing threshold
    int steps = 25;          // temporal resolution
};

struct SurrogateConfig {
    // arctan slope; g(0) = alpha/2. Small alpha keeps gradient mass in the
    // tails, which is what lets silent output neurons recover during training.
    double alpha = 0.25;
};

// SNN weights share the MLP shapes; LIF layers replace ReLU.
using SnnParams = MlpParams;

// bits[t][b][n] ~ Bernoulli(x[b][n]). Features must lie in [0,1].
SpikeTrain encode_rate(const Matrix& x, int steps, SeededRng& rng);

// One spike per neuron at t = clamp(round(tau * ln(x/(x-threshold))), 0, steps-1)
// for x > threshold; x <= threshold spikes at the last step.
SpikeTrain encode_latency(const Matrix& x, int steps, double tau, double threshold);

// Ramp r_t = x*(t+1)/steps; spike whenever accumulated change since the last
// spike reaches the threshold.
SpikeTrain encode_delta(const Matrix& x, int steps, double threshold);

SpikeTrain encode(const Matrix& x, const EncoderConfig& cfg, SeededRng& rng);

// One LIF step for a vector of neurons:
//   U' = beta*U + I;  S = [U' > theta];  U'' = U' - S*theta  (reset by subtraction).
// `membrane` is updated in place to U''; spikes written to `spikes_out`.
void lif_step(std::span<double> membrane, std::span<const double> current, const LifConfig& cfg,
              std::span<std::uint8_t> spikes_out);

// Pseudo-derivative of the spike function: g(u) = (a/2) / (1 + (pi*a*u/2)^2),
// the derivative of (1/pi)*arctan(pi*a*u/2) + 1/2.
double atan_surrogate_grad(double u_minus_theta, double alpha);

// The smooth spike itself; forward substitute in smooth mode.
double atan_surrogate_spike(double u_minus_theta, double alpha);

/// BPTT bookkeeping: pre-reset membranes and hidden activations per step.
struct SnnCache {
    SpikeTrain input;                    // the spike train fed forward
    std::vector<Matrix> hidden_membrane; // T entries, batch x H, pre-reset
    std::vector<Matrix> hidden_spikes;   // T entries, batch x H ({0,1}; real in smooth mode)
    std::vector<Matrix> output_membrane; // T entries, batch x C, pre-reset
    Matrix logits;                       // batch x C spike counts
    LifConfig lif;                       // dynamics the forward pass used
    bool smooth = false;
    double smooth_alpha = 2.0;
};

// Per step: hidden LIF driven by bits*W1+b1, output LIF driven by hidden
// spikes*W2+b2; logits are per-class output spike counts over all steps.
// smooth_alpha, when set, replaces the hard threshold with the arctan spike
// in both layers (gradient-check mode).
Matrix snn_forward(const SnnParams& params, const SpikeTrain& spikes, const LifConfig& cfg,
                   SnnCache* cache = nullptr, const double* smooth_alpha = nullptr);

// Cross-entropy on spike-count logits; BPTT with the arctan surrogate in
// place of d spike / d membrane. The reset path is detached in hard mode and
// differentiated exactly in smooth mode.
double snn_backward(const SnnParams& params, const SnnCache& cache, std::span<const int> labels,
                    const SurrogateConfig& surrogate, MlpGrads& grads);

struct SnnTrainResult {
    SnnParams params;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> epoch_losses;
};

// Adam over BPTT gradients. Spike encodings are derived per (epoch, sample);
// evaluation uses one fixed encoding stream so queries are repeatable.
SnnTrainResult train_snn(const Dataset& ds, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> test_idx, const TrainConfig& cfg,
                         const EncoderConfig& encoder, const LifConfig& lif);

// Encode selected dataset rows with per-sample streams derived from base_rng
// (stream = dataset index), so a sample's train does not depend on batch order.
SpikeTrain encode_dataset_rows(const Dataset& ds, std::span<const std::size_t> idx,
                               const EncoderConfig& encoder, const SeededRng& base_rng);

// Spike-count accuracy with a fixed evaluation encoding seed.
double snn_accuracy(const SnnParams& params, const Dataset& ds, std::span<const std::size_t> idx,
                    const EncoderConfig& encoder, const LifConfig& lif, std::uint64_t eval_seed);

}  // namespace privsnn
