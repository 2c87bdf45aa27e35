#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/matrix.hpp"
#include "privsnn/rng.hpp"

namespace privsnn {

enum class ModelKind { Ann, Snn };

/// Two-layer perceptron parameters: D x H hidden (ReLU), H x C output.
struct MlpParams {
    Matrix w1;               // D x H
    std::vector<double> b1;  // H
    Matrix w2;               // H x C
    std::vector<double> b2;  // C

    std::size_t param_count() const {
        return w1.data.size() + b1.size() + w2.data.size() + b2.size();
    }
};

// Gradients share the parameter shapes.
using MlpGrads = MlpParams;

/// Adam accumulators. beta1/beta2/eps fixed at the standard values.
struct AdamState {
    MlpParams m;  // first moment
    MlpParams v;  // second moment, entries >= 0
    long step = 0;
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double learning_rate = 0.001;
    int hidden = 1000;
    int warmup_steps = 0;  // linear lr ramp; nonzero only for spiking nets
};

/// Activations recorded by the forward pass, consumed by the backward pass.
struct MlpCache {
    Matrix input;    // batch x D
    Matrix preact;   // batch x H, pre-ReLU
    Matrix hidden;   // batch x H, post-ReLU
    Matrix logits;   // batch x C
};

// He-uniform init (+-sqrt(6/fan_in)) for weights, zero biases.
MlpParams init_mlp(std::size_t input_dim, std::size_t hidden, std::size_t classes, SeededRng& rng);

// logits = relu(x*W1 + b1)*W2 + b2. Cache is optional (inference skips it).
Matrix mlp_forward(const MlpParams& params, const Matrix& x, MlpCache* cache = nullptr);

// Mean softmax cross-entropy over the batch; fills grads, returns loss.
double mlp_backward(const MlpParams& params, const MlpCache& cache, std::span<const int> labels,
                    MlpGrads& grads);

AdamState make_adam_state(const MlpParams& params);
void adam_step(MlpParams& params, const MlpGrads& grads, AdamState& state, double learning_rate);

// Flat parameter order: w1, b1, w2, b2 (row-major).
std::vector<double> flatten(const MlpParams& p);
void add_scaled(MlpParams& p, std::span<const double> flat, double scale);

// Submatrix / sublabel gather by index list.
Matrix gather_features(const Dataset& ds, std::span<const std::size_t> idx);
std::vector<int> gather_labels(const Dataset& ds, std::span<const std::size_t> idx);

double mlp_accuracy(const MlpParams& params, const Dataset& ds, std::span<const std::size_t> idx);

struct AnnTrainResult {
    MlpParams params;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::vector<double> epoch_losses;
};

// Minibatch Adam training on train_idx; accuracies on both index lists.
AnnTrainResult train_ann(const Dataset& ds, std::span<const std::size_t> train_idx,
                         std::span<const std::size_t> test_idx, const TrainConfig& cfg);

}  // namespace privsnn
