#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "milvb/errors.hpp"

namespace milvb {

// Binary labels used throughout: +1 = H (high vascularity, the positive
// class), -1 = L (low vascularity).
using Label = int;
inline constexpr Label kPositive = +1;
inline constexpr Label kNegative = -1;

char label_to_char(Label label);
Label label_from_char(char c);

// Provenance of a patch-derived instance; synthetic instances leave it unset.
struct InstanceSource {
    std::string image_id;
    int patch_row = 0;
    int patch_col = 0;
};

// One feature vector inside a bag. All entries must be finite.
struct InstanceVec {
    std::vector<double> values;
    std::optional<InstanceSource> source;
};

// A labeled set of instances. The video id ties the bag to its operation for
// the by-video split; the label is absent for unlabeled (query) bags.
struct Bag {
    std::string bag_id;
    std::string video_id;
    std::vector<InstanceVec> instances;
    std::optional<Label> label;

    std::size_t size() const { return instances.size(); }
};

struct Dataset {
    std::vector<Bag> bags;
    std::size_t feature_dim = 0;

    std::size_t n_bags() const { return bags.size(); }
    std::size_t n_instances() const;

    // Validates the invariants: N >= 1, unique bag ids, m_i >= 1, uniform
    // finite dimensionality. Throws DataError on violation.
    void validate() const;

    // All instances stacked row-wise, bag order preserved.
    Eigen::MatrixXd pooled_instances() const;
};

// Assignment of every video to one of k folds; fold sizes in videos differ by
// at most one.
struct FoldSplit {
    int k = 0;
    std::map<std::string, int> assignment;

    std::vector<int> fold_sizes() const;
};

// Shuffles the distinct video ids with a seeded generator and deals them
// round-robin, so folds are balanced and reproducible. Stratification (deal
// per majority-class of each video) is off by default; the reference protocol
// does not stratify.
FoldSplit split_by_video(const Dataset& dataset, int k, std::uint64_t seed,
                         bool stratify = false);

// Train/test views for one held-out fold. Bags within each view are ordered
// by lexicographic bag_id.
std::pair<Dataset, Dataset> fold_view(const Dataset& dataset, const FoldSplit& split,
                                      int test_fold);

// (n_negative, n_positive); rejects unlabeled bags.
std::pair<std::size_t, std::size_t> class_counts(const Dataset& dataset);

// --- serialization ---------------------------------------------------------
//
// Dataset manifest: one text line per bag,
//   bag_id, video_id, label{L,H,?}, feature_file, row_begin, row_count
// feature_file is relative to the manifest's directory. The feature matrix
// file starts with (rows, cols) as two little-endian uint64, followed by
// row-major little-endian float64 values.

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_file(const std::string& path);

// Writes the manifest plus a single matrix file holding all instances.
void save_dataset(const Dataset& dataset, const std::string& manifest_path,
                  const std::string& matrix_filename);
Dataset load_dataset(const std::string& manifest_path);

}  // namespace milvb
