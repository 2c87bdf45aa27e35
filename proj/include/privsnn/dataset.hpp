#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "privsnn/matrix.hpp"

namespace privsnn {

/// Features + class labels. Feature values live in [0,1] once normalized.
struct Dataset {
    std::string name;
    Matrix features;          // samples x feature dim
    std::vector<int> labels;  // each in [0, num_classes)
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t feature_dim() const { return features.cols; }
};

/**
 * Index partition driving the attack protocol. The target model trains on
 * target_train and is evaluated on target_test; the shadow model trains on
 * 80% of target_train and its OUT-query pool reuses target_test.
 */
struct SplitPlan {
    std::vector<std::size_t> target_train;
    std::vector<std::size_t> target_test;
    std::vector<std::size_t> shadow_train;
    std::vector<std::size_t> shadow_test;
    std::uint64_t seed = 0;
};

// Iris CSV: 4 numeric columns + class-name column. 3 classes required;
// class names map to indices in first-appearance order.
Dataset load_iris(const std::string& path);

// WDBC CSV: id, diagnosis (M/B), 30 numeric columns. M -> 1, B -> 0.
Dataset load_wdbc(const std::string& path);

// IDX pair (big-endian): image magic 2051, label magic 2049. Pixels are
// flattened and scaled by 1/255. `limit` truncates to the first n samples.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit = std::nullopt);

// Per-feature min-max scaling to [0,1]; constant features map to 0. Idempotent.
Dataset normalize(const Dataset& ds);

// Seeded shuffled partition; see SplitPlan. 0 < test_fraction < 1.
SplitPlan make_split_plan(const Dataset& ds, double test_fraction, std::uint64_t seed);

}  // namespace privsnn
