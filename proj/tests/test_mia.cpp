#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "privsnn/dataset.hpp"
#include "privsnn/errors.hpp"
#include "privsnn/mia.hpp"
#include "privsnn/mlp.hpp"
#include "privsnn/rng.hpp"

using namespace privsnn;

namespace {

const std::string kDataDir = PRIVSNN_DATA_DIR;

// Trapezoidal integration of the ROC curve; the independent AUC oracle.
double trapezoid_auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

// Regularized hinge objective used by the grid-search QP oracle.
double svm_objective(double w0, double w1, double b, double lambda,
                     const std::vector<AttackRecord>& records) {
    double hinge = 0.0;
    for (const auto& r : records) {
        const double y = r.label == 1 ? 1.0 : -1.0;
        const double margin = y * (w0 * r.features[0] + w1 * r.features[1] + b);
        hinge += std::max(0.0, 1.0 - margin);
    }
    return lambda / 2.0 * (w0 * w0 + w1 * w1) + hinge / static_cast<double>(records.size());
}

std::vector<AttackRecord> make_records(const std::vector<std::vector<double>>& xs,
                                       const std::vector<int>& ys) {
    std::vector<AttackRecord> recs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        recs[i].features = xs[i];
        recs[i].label = ys[i];
    }
    return recs;
}

}  // namespace

TEST_CASE("roc_auc: perfect separation gives 1.0, all ties give 0.5") {
    std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    std::vector<int> labels{1, 1, 0, 0};
    CHECK(roc_auc(scores, labels).auc == 1.0);

    std::vector<double> flat{0.5, 0.5, 0.5, 0.5};
    CHECK(roc_auc(flat, labels).auc == 0.5);
}

TEST_CASE("roc_auc rejects one-class input") {
    std::vector<double> scores{0.1, 0.2};
    std::vector<int> labels{1, 1};
    CHECK_THROWS_AS(roc_auc(scores, labels), ArgumentError);
}

TEST_CASE("rank AUC equals trapezoidal ROC integration on 100 random score sets") {
    SeededRng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng.next_below(190);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool both = false;
        for (std::size_t i = 0; i < n; ++i) {
            // quantized scores so ties occur regularly
            scores[i] = std::floor(rng.next_double() * 20.0) / 20.0;
            labels[i] = rng.next_double() < 0.4 ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;
        both = true;
        REQUIRE(both);
        RocCurve curve = roc_auc(scores, labels);
        CHECK(std::abs(curve.auc - trapezoid_auc(curve)) < 1e-12);
    }
}

TEST_CASE("roc curve is monotone with endpoints (0,0) and (1,1)") {
    SeededRng rng(23);
    std::vector<double> scores(50);
    std::vector<int> labels(50);
    for (std::size_t i = 0; i < 50; ++i) {
        scores[i] = rng.next_double();
        labels[i] = static_cast<int>(rng.next_below(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    RocCurve curve = roc_auc(scores, labels);
    CHECK(curve.points.front().fpr == 0.0);
    CHECK(curve.points.front().tpr == 0.0);
    CHECK(curve.points.back().fpr == 1.0);
    CHECK(curve.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].fpr >= curve.points[i - 1].fpr);
        CHECK(curve.points[i].tpr >= curve.points[i - 1].tpr);
    }
    CHECK(curve.auc >= 0.0);
    CHECK(curve.auc <= 1.0);
}

TEST_CASE("AUC symmetry and rank invariance") {
    SeededRng rng(29);
    std::vector<double> scores(60);
    std::vector<int> labels(60);
    std::set<double> unique;
    for (std::size_t i = 0; i < 60; ++i) {
        do {
            scores[i] = rng.next_double();
        } while (unique.count(scores[i]));
        unique.insert(scores[i]);
        labels[i] = static_cast<int>(rng.next_below(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    std::vector<double> negated(60), transformed(60);
    for (std::size_t i = 0; i < 60; ++i) {
        negated[i] = -scores[i];
        transformed[i] = std::exp(3.0 * scores[i]) + 5.0;  // strictly increasing
    }
    const double auc = roc_auc(scores, labels).auc;
    CHECK(roc_auc(negated, labels).auc == doctest::Approx(1.0 - auc).epsilon(1e-12));
    CHECK(roc_auc(transformed, labels).auc == doctest::Approx(auc).epsilon(1e-12));
}

TEST_CASE("svm separates a 1-D separable toy set perfectly") {
    std::vector<AttackRecord> recs;
    for (int i = 0; i < 10; ++i) {
        AttackRecord r;
        r.features = {i < 5 ? -1.0 : 1.0};
        r.label = i < 5 ? 0 : 1;
        recs.push_back(r);
    }
    SeededRng rng(31);
    LinearSvm svm = train_attack_svm(recs, 1e-3, 200, rng);
    int correct = 0;
    for (const auto& r : recs) {
        const double s = svm_score(svm, r.features);
        if ((s > 0) == (r.label == 1)) ++correct;
    }
    CHECK(correct == 10);
}

TEST_CASE("flipping all labels negates decision scores") {
    SeededRng data_rng(37);
    std::vector<AttackRecord> recs, flipped;
    for (int i = 0; i < 40; ++i) {
        AttackRecord r;
        r.features = {data_rng.next_double(), data_rng.next_double()};
        r.label = i % 2;
        recs.push_back(r);
        r.label = 1 - r.label;
        flipped.push_back(r);
    }
    SeededRng rng1(41), rng2(41);
    LinearSvm a = train_attack_svm(recs, 1e-2, 400, rng1);
    LinearSvm b = train_attack_svm(flipped, 1e-2, 400, rng2);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x{data_rng.next_double(), data_rng.next_double()};
        CHECK(svm_score(a, x) == doctest::Approx(-svm_score(b, x)).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("svm rejects single-class input") {
    std::vector<AttackRecord> recs(4);
    for (auto& r : recs) {
        r.features = {1.0};
        r.label = 1;
    }
    SeededRng rng(43);
    CHECK_THROWS_AS(train_attack_svm(recs, 1e-3, 10, rng), TrainingError);
}

TEST_CASE("svm decision boundary matches a grid-search QP oracle within 2 degrees") {
    // 4-point 2-D toy set
    auto recs = make_records({{-1.0, -1.0}, {-2.0, -1.0}, {1.0, 1.0}, {2.0, 1.0}},
                             {0, 0, 1, 1});
    const double lambda = 1e-2;
    SeededRng rng(47);
    LinearSvm svm = train_attack_svm(recs, lambda, 3000, rng);

    // coarse-to-fine exhaustive search over (w0, w1, b)
    double best[3] = {0, 0, 0};
    double best_obj = 1e100;
    double lo[3] = {-4, -4, -4}, hi[3] = {4, 4, 4};
    for (int refine = 0; refine < 4; ++refine) {
        const int steps = 40;
        double found[3] = {best[0], best[1], best[2]};
        for (int i = 0; i <= steps; ++i)
            for (int j = 0; j <= steps; ++j)
                for (int k = 0; k <= steps; ++k) {
                    const double w0 = lo[0] + (hi[0] - lo[0]) * i / steps;
                    const double w1 = lo[1] + (hi[1] - lo[1]) * j / steps;
                    const double b = lo[2] + (hi[2] - lo[2]) * k / steps;
                    const double obj = svm_objective(w0, w1, b, lambda, recs);
                    if (obj < best_obj) {
                        best_obj = obj;
                        found[0] = w0;
                        found[1] = w1;
                        found[2] = b;
                    }
                }
        for (int d = 0; d < 3; ++d) {
            const double span = (hi[d] - lo[d]) / steps * 4;
            best[d] = found[d];
            lo[d] = found[d] - span;
            hi[d] = found[d] + span;
        }
    }

    const double angle_svm = std::atan2(svm.weights[1], svm.weights[0]);
    const double angle_oracle = std::atan2(best[1], best[0]);
    double diff = std::abs(angle_svm - angle_oracle) * 180.0 / std::numbers::pi;
    if (diff > 180.0) diff = 360.0 - diff;
    CHECK(diff < 2.0);
}

TEST_CASE("attack sets are balanced and sized from the split arithmetic") {
    Dataset ds = normalize(load_iris(kDataDir + "/iris.csv"));
    SplitPlan plan = make_split_plan(ds, 0.2, 7);

    // instrumented queries: uniform confidences, provenance recorded
    std::vector<std::vector<std::size_t>> target_queries, shadow_queries;
    QueryFn query_target = [&](const Dataset& d, std::span<const std::size_t> idx) {
        target_queries.emplace_back(idx.begin(), idx.end());
        return Matrix(idx.size(), static_cast<std::size_t>(d.num_classes),
                      1.0 / static_cast<double>(d.num_classes));
    };
    QueryFn query_shadow = [&](const Dataset& d, std::span<const std::size_t> idx) {
        shadow_queries.emplace_back(idx.begin(), idx.end());
        return Matrix(idx.size(), static_cast<std::size_t>(d.num_classes),
                      1.0 / static_cast<double>(d.num_classes));
    };

    SeededRng rng(3);
    auto [attack_train, attack_eval] = build_attack_sets(query_target, query_shadow, ds, plan, rng);

    // balanced: |IN| == |OUT| in both sets
    auto count_label = [](const std::vector<AttackRecord>& recs, int label) {
        std::size_t n = 0;
        for (const auto& r : recs) n += r.label == label ? 1 : 0;
        return n;
    };
    CHECK(count_label(attack_train, 1) == count_label(attack_train, 0));
    CHECK(count_label(attack_eval, 1) == count_label(attack_eval, 0));

    // iris with test fraction 0.2: eval size = 2 * min(120, 30) = 60
    CHECK(attack_eval.size() == 60);
    CHECK(attack_train.size() == 60);  // 2 * min(96, 30)

    // attack_train derives only from shadow queries
    REQUIRE(shadow_queries.size() == 2);
    REQUIRE(target_queries.size() == 2);
    CHECK(shadow_queries[0] == plan.shadow_train);
    CHECK(shadow_queries[1] == plan.shadow_test);
    CHECK(target_queries[0] == plan.target_train);
    CHECK(target_queries[1] == plan.target_test);
}

TEST_CASE("ann query confidences are sorted, normalized, deterministic") {
    Dataset ds = normalize(load_iris(kDataDir + "/iris.csv"));
    SeededRng rng(5);
    MlpParams p = init_mlp(4, 16, 3, rng);
    std::vector<std::size_t> idx{0, 50, 100, 17};
    Matrix a = query_confidences_ann(p, ds, idx);
    Matrix b = query_confidences_ann(p, ds, idx);
    CHECK(a.data == b.data);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) {
            sum += a(i, j);
            if (j > 0) CHECK(a(i, j) <= a(i, j - 1));
            CHECK(a(i, j) >= 0.0);
            CHECK(a(i, j) <= 1.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("snn query confidences honor the fixed query seed") {
    Dataset ds = normalize(load_iris(kDataDir + "/iris.csv"));
    SeededRng rng(6);
    SnnParams p = init_mlp(4, 16, 3, rng);
    EncoderConfig enc;
    enc.steps = 10;
    LifConfig lif;
    lif.steps = 10;
    std::vector<std::size_t> idx{3, 77, 140};
    Matrix a = query_confidences_snn(p, ds, idx, enc, lif, 99);
    Matrix b = query_confidences_snn(p, ds, idx, enc, lif, 99);
    Matrix c = query_confidences_snn(p, ds, idx, enc, lif, 100);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
}

TEST_CASE("full iris ANN pipeline is deterministic and yields a leaky-model AUC") {
    Dataset ds = normalize(load_iris(kDataDir + "/iris.csv"));
    SplitPlan plan = make_split_plan(ds, 0.2, 1);
    MiaConfig cfg;
    cfg.kind = ModelKind::Ann;
    cfg.train.epochs = 400;
    cfg.train.batch_size = 8;
    cfg.train.seed = 1;
    MiaResult r1 = run_mia(ds, plan, cfg);
    MiaResult r2 = run_mia(ds, plan, cfg);
    CHECK(std::abs(r1.auc - r2.auc) < 1e-12);
    CHECK(r1.auc > 0.5);
    CHECK(r1.auc <= 1.0);
    CHECK(r1.target_train_acc >= 0.95);
}
