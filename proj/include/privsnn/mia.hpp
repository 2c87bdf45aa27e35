#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/matrix.hpp"
#include "privsnn/mlp.hpp"
#include "privsnn/rng.hpp"
#include "privsnn/snn.hpp"

namespace privsnn {

/// One attack example: sorted confidence vector + IN(1)/OUT(0) membership.
struct AttackRecord {
    std::vector<double> features;  // nonincreasing, sums to ~1
    int label = 0;
};

/// Linear SVM trained on hinge loss with L2 regularization.
struct LinearSvm {
    std::vector<double> weights;
    double bias = 0.0;
    double lambda = 1e-3;
};

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // fpr/tpr nondecreasing, (0,0) .. (1,1)
    double auc = 0.0;
};

// Model query: confidence rows (sorted descending) for the given sample indices.
using QueryFn = std::function<Matrix(const Dataset&, std::span<const std::size_t>)>;

// softmax(logits) with each row sorted descending.
Matrix query_confidences_ann(const MlpParams& params, const Dataset& ds,
                             std::span<const std::size_t> idx);

// softmax(spike-count logits) under the given query-encoding seed.
Matrix query_confidences_snn(const SnnParams& params, const Dataset& ds,
                             std::span<const std::size_t> idx, const EncoderConfig& encoder,
                             const LifConfig& lif, std::uint64_t query_seed);

// attack_train: shadow queried on its train (IN) and shadow_test (OUT);
// attack_eval: target queried on target_train (IN) and target_test (OUT).
// Both sets class-balanced by seeded downsampling of the majority label.
std::pair<std::vector<AttackRecord>, std::vector<AttackRecord>> build_attack_sets(
    const QueryFn& query_target, const QueryFn& query_shadow, const Dataset& ds,
    const SplitPlan& plan, SeededRng& rng);

// Pegasos-style subgradient descent on lambda/2 ||w||^2 + mean hinge loss,
// step 1/(lambda*t). Requires both labels present.
LinearSvm train_attack_svm(const std::vector<AttackRecord>& records, double lambda, int epochs,
                           SeededRng& rng);

double svm_score(const LinearSvm& svm, std::span<const double> features);

// AUC by Mann-Whitney rank statistic (average ranks on ties); curve by
// threshold sweep over unique scores. Requires both classes present.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct MiaConfig {
    ModelKind kind = ModelKind::Ann;
    TrainConfig train;
    EncoderConfig encoder;  // SNN only
    LifConfig lif;          // SNN only
    double svm_lambda = 1e-3;
    int svm_epochs = 200;
    bool stochastic_query = false;  // re-sample the query encoding per call
};

struct MiaResult {
    double auc = 0.0;
    RocCurve roc;
    double target_train_acc = 0.0;
    double target_test_acc = 0.0;
    double shadow_train_acc = 0.0;
    double shadow_test_acc = 0.0;
};

// Full two-model pipeline: train target and shadow with identical
// architecture, build balanced attack sets, fit the SVM on shadow records,
// score the target records.
MiaResult run_mia(const Dataset& ds, const SplitPlan& plan, const MiaConfig& cfg);

}  // namespace privsnn
