#include "privsnn/mia.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "privsnn/errors.hpp"

namespace privsnn {

namespace {

void sort_rows_descending(Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        auto row = m.row(i);
        std::sort(row.begin(), row.end(), std::greater<double>());
    }
}

std::vector<AttackRecord> to_records(const Matrix& confidences, int label) {
    std::vector<AttackRecord> records(confidences.rows);
    for (std::size_t i = 0; i < confidences.rows; ++i) {
        const auto row = confidences.row(i);
        records[i].features.assign(row.begin(), row.end());
        records[i].label = label;
    }
    return records;
}

// Downsample the majority label to the minority count, order-seeded.
std::vector<AttackRecord> balance(std::vector<AttackRecord> in_records,
                                  std::vector<AttackRecord> out_records, SeededRng& rng) {
    auto downsample = [&rng](std::vector<AttackRecord>& recs, std::size_t keep) {
        const auto perm = shuffle_indices(rng, recs.size());
        std::vector<AttackRecord> kept;
        kept.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) kept.push_back(std::move(recs[perm[i]]));
        recs = std::move(kept);
    };
    const std::size_t keep = std::min(in_records.size(), out_records.size());
    if (in_records.size() > keep) downsample(in_records, keep);
    if (out_records.size() > keep) downsample(out_records, keep);
    std::vector<AttackRecord> all = std::move(in_records);
    all.insert(all.end(), std::make_move_iterator(out_records.begin()),
               std::make_move_iterator(out_records.end()));
    return all;
}

}  // namespace

Matrix query_confidences_ann(const MlpParams& params, const Dataset& ds,
                             std::span<const std::size_t> idx) {
    Matrix logits = mlp_forward(params, gather_features(ds, idx));
    softmax_rows(logits);
    sort_rows_descending(logits);
    return logits;
}

Matrix query_confidences_snn(const SnnParams& params, const Dataset& ds,
                             std::span<const std::size_t> idx, const EncoderConfig& encoder,
                             const LifConfig& lif, std::uint64_t query_seed) {
    const SeededRng qrng(query_seed);
    Matrix confidences(idx.size(), params.w2.cols);
    constexpr std::size_t kBatch = 128;
    for (std::size_t start = 0; start < idx.size(); start += kBatch) {
        const std::size_t n = std::min(kBatch, idx.size() - start);
        SpikeTrain spikes = encode_dataset_rows(ds, idx.subspan(start, n), encoder, qrng);
        Matrix logits = snn_forward(params, spikes, lif);
        for (std::size_t i = 0; i < n; ++i) {
            const auto src = logits.row(i);
            std::copy(src.begin(), src.end(), confidences.row(start + i).begin());
        }
    }
    softmax_rows(confidences);
    sort_rows_descending(confidences);
    return confidences;
}

std::pair<std::vector<AttackRecord>, std::vector<AttackRecord>> build_attack_sets(
    const QueryFn& query_target, const QueryFn& query_shadow, const Dataset& ds,
    const SplitPlan& plan, SeededRng& rng) {
    if (plan.target_train.empty() || plan.target_test.empty() || plan.shadow_train.empty() ||
        plan.shadow_test.empty()) {
        throw ArgumentError("build_attack_sets: empty split partition");
    }
    // explicit sequencing: query order is part of the deterministic contract
    Matrix shadow_in = query_shadow(ds, plan.shadow_train);
    Matrix shadow_out = query_shadow(ds, plan.shadow_test);
    auto attack_train = balance(to_records(shadow_in, 1), to_records(shadow_out, 0), rng);
    Matrix target_in = query_target(ds, plan.target_train);
    Matrix target_out = query_target(ds, plan.target_test);
    auto attack_eval = balance(to_records(target_in, 1), to_records(target_out, 0), rng);
    return {std::move(attack_train), std::move(attack_eval)};
}

LinearSvm train_attack_svm(const std::vector<AttackRecord>& records, double lambda, int epochs,
                           SeededRng& rng) {
    if (records.empty()) throw TrainingError("train_attack_svm: no records");
    bool has_in = false, has_out = false;
    for (const auto& r : records) (r.label == 1 ? has_in : has_out) = true;
    if (!has_in || !has_out) {
        throw TrainingError("train_attack_svm: both IN and OUT labels required");
    }
    const std::size_t dim = records.front().features.size();
    LinearSvm svm;
    svm.weights.assign(dim, 0.0);
    svm.lambda = lambda;

    long t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const auto order = shuffle_indices(rng, records.size());
        for (const std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const auto& rec = records[i];
            const double y = rec.label == 1 ? 1.0 : -1.0;
            double margin = svm.bias;
            for (std::size_t j = 0; j < dim; ++j) margin += svm.weights[j] * rec.features[j];
            margin *= y;
            const double shrink = 1.0 - eta * lambda;
            for (auto& w : svm.weights) w *= shrink;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) svm.weights[j] += eta * y * rec.features[j];
                svm.bias += eta * y;
            }
        }
    }
    if (!all_finite(svm.weights)) throw TrainingError("train_attack_svm: diverged");
    return svm;
}

double svm_score(const LinearSvm& svm, std::span<const double> features) {
    if (features.size() != svm.weights.size()) throw ShapeError("svm_score: feature dim mismatch");
    double score = svm.bias;
    for (std::size_t j = 0; j < features.size(); ++j) score += svm.weights[j] * features[j];
    return score;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores/labels mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (const int l : labels) (l == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) {
        throw ArgumentError("roc_auc: both classes required, AUC undefined");
    }

    // ranks ascending by score, ties get the average rank
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    RocCurve curve;
    curve.auc = (pos_rank_sum - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
                (static_cast<double>(n_pos) * static_cast<double>(n_neg));

    // threshold sweep, descending scores: predict positive when score >= threshold
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = order.size(); i > 0;) {
        std::size_t j = i;
        while (j > 0 && scores[order[j - 1]] == scores[order[i - 1]]) --j;
        for (std::size_t k = j; k < i; ++k) {
            if (labels[order[k]] == 1) ++tp;
            else ++fp;
        }
        curve.points.push_back({scores[order[i - 1]],
                                static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    return curve;
}

MiaResult run_mia(const Dataset& ds, const SplitPlan& plan, const MiaConfig& cfg) {
    SeededRng master(cfg.train.seed);
    TrainConfig target_cfg = cfg.train;
    target_cfg.seed = master.derive(10).seed();
    TrainConfig shadow_cfg = cfg.train;
    shadow_cfg.seed = master.derive(11).seed();
    const std::uint64_t query_seed = master.derive(12).seed();
    SeededRng balance_rng = master.derive(13);
    SeededRng svm_rng = master.derive(14);

    MiaResult result;
    QueryFn query_target, query_shadow;
    std::uint64_t query_counter = 0;
    auto next_query_seed = [&]() {
        // fixed per experiment unless stochastic re-encoding is requested
        if (!cfg.stochastic_query) return query_seed;
        return SeededRng(query_seed).derive(++query_counter).seed();
    };

    if (cfg.kind == ModelKind::Ann) {
        auto target = train_ann(ds, plan.target_train, plan.target_test, target_cfg);
        auto shadow = train_ann(ds, plan.shadow_train, plan.shadow_test, shadow_cfg);
        result.target_train_acc = target.train_acc;
        result.target_test_acc = target.test_acc;
        result.shadow_train_acc = shadow.train_acc;
        result.shadow_test_acc = shadow.test_acc;
        auto target_params = std::make_shared<MlpParams>(std::move(target.params));
        auto shadow_params = std::make_shared<MlpParams>(std::move(shadow.params));
        query_target = [target_params](const Dataset& d, std::span<const std::size_t> idx) {
            return query_confidences_ann(*target_params, d, idx);
        };
        query_shadow = [shadow_params](const Dataset& d, std::span<const std::size_t> idx) {
            return query_confidences_ann(*shadow_params, d, idx);
        };
    } else {
        auto target = train_snn(ds, plan.target_train, plan.target_test, target_cfg, cfg.encoder,
                                cfg.lif);
        auto shadow = train_snn(ds, plan.shadow_train, plan.shadow_test, shadow_cfg, cfg.encoder,
                                cfg.lif);
        result.target_train_acc = target.train_acc;
        result.target_test_acc = target.test_acc;
        result.shadow_train_acc = shadow.train_acc;
        result.shadow_test_acc = shadow.test_acc;
        auto target_params = std::make_shared<SnnParams>(std::move(target.params));
        auto shadow_params = std::make_shared<SnnParams>(std::move(shadow.params));
        const EncoderConfig encoder = cfg.encoder;
        const LifConfig lif = cfg.lif;
        query_target = [target_params, encoder, lif, next_query_seed](
                           const Dataset& d, std::span<const std::size_t> idx) {
            return query_confidences_snn(*target_params, d, idx, encoder, lif, next_query_seed());
        };
        query_shadow = [shadow_params, encoder, lif, next_query_seed](
                           const Dataset& d, std::span<const std::size_t> idx) {
            return query_confidences_snn(*shadow_params, d, idx, encoder, lif, next_query_seed());
        };
    }

    auto [attack_train, attack_eval] = build_attack_sets(query_target, query_shadow, ds, plan,
                                                         balance_rng);
    LinearSvm svm = train_attack_svm(attack_train, cfg.svm_lambda, cfg.svm_epochs, svm_rng);

    std::vector<double> scores(attack_eval.size());
    std::vector<int> labels(attack_eval.size());
    for (std::size_t i = 0; i < attack_eval.size(); ++i) {
        scores[i] = svm_score(svm, attack_eval[i].features);
        labels[i] = attack_eval[i].label;
    }
    result.roc = roc_auc(scores, labels);
    result.auc = result.roc.auc;
    return result;
}

}  // namespace privsnn
