#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "milvb/bagcore.hpp"
#include "milvb/mil.hpp"
#include "milvb/reduce.hpp"

namespace milvb {

struct PredictionRecord {
    std::string bag_id;
    std::string video_id;
    Label truth = kNegative;
    Label predicted = kNegative;
    double score = 0.0;
    int fold = 0;
};

// Percentages; a zero denominator yields 0 with the corresponding flag set.
struct MetricTable {
    double acc = 0.0;
    double pre = 0.0;
    double rec = 0.0;
    double f1 = 0.0;
    bool undefined_precision = false;
    bool undefined_recall = false;
    bool undefined_f1 = false;
};

// 2x2 counts, rows = truth, cols = predicted, order L then H.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, 2>, 2> counts = {{{0, 0}, {0, 0}}};

    // Rows scaled to percentages (each row sums to 100 unless empty).
    std::array<std::array<double, 2>, 2> normalized() const;
};

struct FoldDiagnostics {
    int fold = 0;
    int d_out = 0;
    double variance_kept = 0.0;
    std::size_t n_train_bags = 0;
    std::size_t n_test_bags = 0;
    // Hash over the fold's fitted parameters (standardizer, PCA, classifier);
    // used by the leakage canary.
    std::string fitted_digest;
};

struct RunResult {
    std::vector<PredictionRecord> records;
    std::vector<FoldDiagnostics> folds;
    FoldSplit split;
};

struct RunConfig {
    int k = 5;
    double pca_variance = 0.95;
    bool stratify_folds = false;  // reference protocol does not stratify
    std::uint64_t seed = 0;
    MILTrainConfig mil;
};

// A trained method ready to predict test bags; digest feeds the per-fold
// fitted-parameter hash.
struct TrainedMethod {
    std::function<BagPrediction(const Bag&)> predict;
    std::string digest;
};
using MethodTrainer = std::function<TrainedMethod(const Dataset& train, std::uint64_t fold_seed)>;

// Full protocol: by-video k-fold split; per fold fit standardizer + PCA on
// train instances only, transform both sides, train, predict the test bags.
RunResult run_cv(const Dataset& dataset, const RunConfig& cfg);
RunResult run_cv(const Dataset& dataset, const RunConfig& cfg, const MethodTrainer& trainer);

MetricTable compute_metrics(const std::vector<PredictionRecord>& records);
MetricTable compute_metrics_for_fold(const std::vector<PredictionRecord>& records, int fold);
// Arithmetic mean of the per-fold tables (the headline convention).
MetricTable mean_metrics(const std::vector<MetricTable>& per_fold);
double f1_from_precision_recall(double pre, double rec);

// Majority vote over one video's image records; exact ties go to the label of
// the single highest-|score| record. Returns the label and the vote margin.
std::pair<Label, int> video_vote(const std::vector<PredictionRecord>& image_records);

// Majority of ground-truth image labels per video; a tie is a hard error
// naming the video.
std::map<std::string, Label> video_ground_truth(const Dataset& dataset);

// One record per video derived from the image-level records.
std::vector<PredictionRecord> video_level_records(const std::vector<PredictionRecord>& records,
                                                  const std::map<std::string, Label>& truth);

ConfusionMatrix aggregate_confusion(const std::vector<PredictionRecord>& records);

// report.json rendering; deterministic byte-for-byte for identical inputs.
std::string render_report_json(const std::string& method, const std::string& config_digest,
                               std::uint64_t seed, const RunResult& result,
                               const std::vector<PredictionRecord>& video_records,
                               const std::string& task);
std::string render_report_text(const std::string& report_json);

}  // namespace milvb
