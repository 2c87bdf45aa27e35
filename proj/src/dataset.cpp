#include "privsnn/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "privsnn/errors.hpp"
#include "privsnn/rng.hpp"

namespace privsnn {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

double parse_number(const std::string& s, const std::string& file, std::size_t line_no) {
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(file + " line " + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
    if (pos != s.size()) {
        throw ParseError(file + " line " + std::to_string(line_no) + ": trailing junk in '" + s + "'");
    }
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::uint32_t read_be_u32(std::istream& in, const std::string& file) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4)) {
        throw ParseError(file + ": truncated header");
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_iris(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::vector<std::array<double, 4>> rows;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 5) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        }
        std::array<double, 4> row;
        for (int i = 0; i < 4; ++i) row[i] = parse_number(fields[i], path, line_no);
        const std::string cls = trim(fields[4]);
        auto it = std::find(class_names.begin(), class_names.end(), cls);
        if (it == class_names.end()) {
            if (class_names.size() == 3) {
                throw ParseError(path + " line " + std::to_string(line_no) +
                                 ": fourth class '" + cls + "' (expected exactly 3)");
            }
            class_names.push_back(cls);
            it = std::prev(class_names.end());
        }
        labels.push_back(static_cast<int>(it - class_names.begin()));
        rows.push_back(row);
    }
    if (class_names.size() != 3) {
        throw ParseError(path + ": found " + std::to_string(class_names.size()) +
                         " classes, expected 3");
    }
    Dataset ds;
    ds.name = "iris";
    ds.num_classes = 3;
    ds.labels = std::move(labels);
    ds.features = Matrix(rows.size(), 4);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < 4; ++j) ds.features(i, j) = rows[i][j];
    return ds;
}

Dataset load_wdbc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 32) {
            throw ParseError(path + " line " + std::to_string(line_no) + ": expected 32 fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string diag = trim(fields[1]);
        int label;
        if (diag == "M") label = 1;
        else if (diag == "B") label = 0;
        else
            throw ParseError(path + " line " + std::to_string(line_no) + ": diagnosis '" + diag +
                             "' not in {M, B}");
        std::vector<double> row(30);
        for (int i = 0; i < 30; ++i) row[i] = parse_number(fields[i + 2], path, line_no);
        labels.push_back(label);
        rows.push_back(std::move(row));
    }
    Dataset ds;
    ds.name = "wdbc";
    ds.num_classes = 2;
    ds.labels = std::move(labels);
    ds.features = Matrix(rows.size(), 30);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int j = 0; j < 30; ++j) ds.features(i, j) = rows[i][j];
    return ds;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw ParseError(images_path + ": cannot open");
    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw ParseError(labels_path + ": cannot open");

    const std::uint32_t img_magic = read_be_u32(img, images_path);
    if (img_magic != 2051) {
        throw ParseError(images_path + ": bad image magic " + std::to_string(img_magic) +
                         " (want 2051)");
    }
    const std::uint32_t n_images = read_be_u32(img, images_path);
    const std::uint32_t height = read_be_u32(img, images_path);
    const std::uint32_t width = read_be_u32(img, images_path);

    const std::uint32_t lbl_magic = read_be_u32(lbl, labels_path);
    if (lbl_magic != 2049) {
        throw ParseError(labels_path + ": bad label magic " + std::to_string(lbl_magic) +
                         " (want 2049)");
    }
    const std::uint32_t n_labels = read_be_u32(lbl, labels_path);
    if (n_images != n_labels) {
        throw ParseError(images_path + ": " + std::to_string(n_images) + " images vs " +
                         std::to_string(n_labels) + " labels");
    }

    std::size_t n = n_images;
    if (limit) n = std::min<std::size_t>(n, *limit);
    const std::size_t dim = std::size_t(height) * width;

    Dataset ds;
    ds.name = "idx";
    ds.features = Matrix(n, dim);
    ds.labels.resize(n);
    std::vector<unsigned char> buf(dim);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim))) {
            throw ParseError(images_path + ": truncated at sample " + std::to_string(i));
        }
        for (std::size_t j = 0; j < dim; ++j) ds.features(i, j) = buf[j] / 255.0;
        char c;
        if (!lbl.read(&c, 1)) {
            throw ParseError(labels_path + ": truncated at sample " + std::to_string(i));
        }
        ds.labels[i] = static_cast<unsigned char>(c);
    }
    int max_label = 0;
    for (int v : ds.labels) max_label = std::max(max_label, v);
    ds.num_classes = max_label + 1;
    return ds;
}

Dataset normalize(const Dataset& ds) {
    Dataset out = ds;
    for (std::size_t j = 0; j < ds.features.cols; ++j) {
        double lo = ds.features(0, j), hi = ds.features(0, j);
        for (std::size_t i = 1; i < ds.features.rows; ++i) {
            lo = std::min(lo, ds.features(i, j));
            hi = std::max(hi, ds.features(i, j));
        }
        const double range = hi - lo;
        for (std::size_t i = 0; i < ds.features.rows; ++i) {
            out.features(i, j) = range == 0.0 ? 0.0 : (ds.features(i, j) - lo) / range;
        }
    }
    return out;
}

SplitPlan make_split_plan(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ArgumentError("make_split_plan: test_fraction must be in (0,1)");
    }
    const std::size_t n = ds.size();
    const std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test == 0 || n_test >= n) {
        throw ArgumentError("make_split_plan: dataset too small for nonempty partitions");
    }
    SeededRng rng(seed);
    const auto perm = shuffle_indices(rng, n);

    SplitPlan plan;
    plan.seed = seed;
    plan.target_test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.target_train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());

    // shadow_train: first ceil(0.8 * |target_train|) of a seeded shuffle of target_train
    const std::size_t n_shadow =
        (plan.target_train.size() * 4 + 4) / 5;  // ceil(0.8 n) = ceil(4n/5)
    const auto sperm = shuffle_indices(rng, plan.target_train.size());
    plan.shadow_train.reserve(n_shadow);
    for (std::size_t i = 0; i < n_shadow; ++i) {
        plan.shadow_train.push_back(plan.target_train[sperm[i]]);
    }
    plan.shadow_test = plan.target_test;
    return plan;
}

}  // namespace privsnn
