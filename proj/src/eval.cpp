#include "milvb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "milvb/binio.hpp"
#include "milvb/rng.hpp"

namespace milvb {

std::array<std::array<double, 2>, 2> ConfusionMatrix::normalized() const {
    std::array<std::array<double, 2>, 2> out = {{{0.0, 0.0}, {0.0, 0.0}}};
    for (int r = 0; r < 2; ++r) {
        const double row_sum = static_cast<double>(counts[static_cast<std::size_t>(r)][0] +
                                                   counts[static_cast<std::size_t>(r)][1]);
        if (row_sum <= 0.0) continue;
        for (int c = 0; c < 2; ++c)
            out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
                100.0 * static_cast<double>(
                            counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) /
                row_sum;
    }
    return out;
}

namespace {

std::string fold_fitted_digest(const Standardizer& std_fit, const PCAProjection& pca,
                               const std::string& method_digest) {
    std::ostringstream buffer(std::ios::binary);
    for (Eigen::Index i = 0; i < std_fit.mean.size(); ++i) write_f64_le(buffer, std_fit.mean(i));
    for (Eigen::Index i = 0; i < std_fit.scale.size(); ++i) write_f64_le(buffer, std_fit.scale(i));
    for (Eigen::Index r = 0; r < pca.components.rows(); ++r)
        for (Eigen::Index c = 0; c < pca.components.cols(); ++c)
            write_f64_le(buffer, pca.components(r, c));
    buffer << method_digest;
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buffer.str())));
    return hex;
}

Dataset transform_dataset(const Dataset& ds, const Standardizer& std_fit,
                          const PCAProjection& pca) {
    Dataset out;
    out.feature_dim = static_cast<std::size_t>(pca.d_out());
    out.bags.reserve(ds.n_bags());
    for (const auto& bag : ds.bags) {
        Bag reduced;
        reduced.bag_id = bag.bag_id;
        reduced.video_id = bag.video_id;
        reduced.label = bag.label;
        for (const auto& inst : bag.instances) {
            const Eigen::VectorXd x =
                Eigen::Map<const Eigen::VectorXd>(inst.values.data(),
                                                  static_cast<Eigen::Index>(inst.values.size()));
            const Eigen::VectorXd t = reduce_transform(pca, std_fit, x);
            InstanceVec iv;
            iv.values.assign(t.begin(), t.end());
            iv.source = inst.source;
            reduced.instances.push_back(std::move(iv));
        }
        out.bags.push_back(std::move(reduced));
    }
    return out;
}

}  // namespace

RunResult run_cv(const Dataset& dataset, const RunConfig& cfg) {
    return run_cv(dataset, cfg, [&](const Dataset& train, std::uint64_t fold_seed) {
        MILTrainConfig mil_cfg = cfg.mil;
        mil_cfg.seed = fold_seed;
        auto clf = std::make_shared<MILClassifier>(mil_train(train, mil_cfg));
        TrainedMethod method;
        method.digest = classifier_digest(*clf);
        method.predict = [clf](const Bag& bag) { return mil_predict(*clf, bag); };
        return method;
    });
}

RunResult run_cv(const Dataset& dataset, const RunConfig& cfg, const MethodTrainer& trainer) {
    dataset.validate();
    RunResult result;
    result.split =
        split_by_video(dataset, cfg.k, stage_seed(cfg.seed, "split"), cfg.stratify_folds);

    for (int fold = 0; fold < cfg.k; ++fold) {
        auto [train, test] = fold_view(dataset, result.split, fold);
        const auto [n_neg, n_pos] = class_counts(train);
        if (n_neg == 0 || n_pos == 0)
            throw DataError("fold " + std::to_string(fold) +
                            " training split contains a single class (" + std::to_string(n_neg) +
                            " L / " + std::to_string(n_pos) + " H); use a different seed or k");

        // Leakage guard: every fitted parameter below consumes `train` only.
        const Eigen::MatrixXd train_pooled = train.pooled_instances();
        const Standardizer std_fit = fit_standardizer(train_pooled);
        const PCAProjection pca = fit_pca(std_fit.apply(train_pooled), cfg.pca_variance);
        const Dataset train_reduced = transform_dataset(train, std_fit, pca);
        const Dataset test_reduced = transform_dataset(test, std_fit, pca);

        const auto method = trainer(
            train_reduced, stage_seed(cfg.seed, "fold-" + std::to_string(fold) + "-train"));

        for (const auto& bag : test_reduced.bags) {
            const auto prediction = method.predict(bag);
            PredictionRecord record;
            record.bag_id = bag.bag_id;
            record.video_id = bag.video_id;
            record.truth = *bag.label;
            record.predicted = prediction.label;
            record.score = prediction.score;
            record.fold = fold;
            result.records.push_back(std::move(record));
        }

        FoldDiagnostics diag;
        diag.fold = fold;
        diag.d_out = static_cast<int>(pca.d_out());
        diag.variance_kept = pca.variance_kept;
        diag.n_train_bags = train.n_bags();
        diag.n_test_bags = test.n_bags();
        diag.fitted_digest = fold_fitted_digest(std_fit, pca, method.digest);
        result.folds.push_back(std::move(diag));
    }
    return result;
}

double f1_from_precision_recall(double pre, double rec) {
    if (pre + rec <= 0.0) return 0.0;
    return 2.0 * pre * rec / (pre + rec);
}

MetricTable compute_metrics(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ValidationError("cannot compute metrics on zero records");
    double tp = 0, tn = 0, fp = 0, fn = 0;
    for (const auto& r : records) {
        if (r.truth == kPositive)
            (r.predicted == kPositive ? tp : fn) += 1;
        else
            (r.predicted == kNegative ? tn : fp) += 1;
    }
    MetricTable m;
    m.acc = 100.0 * (tp + tn) / static_cast<double>(records.size());
    if (tp + fp > 0)
        m.pre = 100.0 * tp / (tp + fp);
    else
        m.undefined_precision = true;
    if (tp + fn > 0)
        m.rec = 100.0 * tp / (tp + fn);
    else
        m.undefined_recall = true;
    if (m.pre + m.rec > 0)
        m.f1 = f1_from_precision_recall(m.pre, m.rec);
    else
        m.undefined_f1 = true;
    return m;
}

MetricTable compute_metrics_for_fold(const std::vector<PredictionRecord>& records, int fold) {
    std::vector<PredictionRecord> subset;
    for (const auto& r : records)
        if (r.fold == fold) subset.push_back(r);
    return compute_metrics(subset);
}

MetricTable mean_metrics(const std::vector<MetricTable>& per_fold) {
    if (per_fold.empty()) throw ValidationError("no fold metrics to average");
    // Each metric is averaged over the folds where it is defined; a fold with
    // no true (or predicted) positives does not drag precision/recall to zero.
    MetricTable m;
    double n_pre = 0, n_rec = 0, n_f1 = 0;
    for (const auto& f : per_fold) {
        m.acc += f.acc;
        if (!f.undefined_precision) {
            m.pre += f.pre;
            n_pre += 1;
        }
        if (!f.undefined_recall) {
            m.rec += f.rec;
            n_rec += 1;
        }
        if (!f.undefined_f1) {
            m.f1 += f.f1;
            n_f1 += 1;
        }
        m.undefined_precision |= f.undefined_precision;
        m.undefined_recall |= f.undefined_recall;
        m.undefined_f1 |= f.undefined_f1;
    }
    m.acc /= static_cast<double>(per_fold.size());
    m.pre = n_pre > 0 ? m.pre / n_pre : 0.0;
    m.rec = n_rec > 0 ? m.rec / n_rec : 0.0;
    m.f1 = n_f1 > 0 ? m.f1 / n_f1 : 0.0;
    return m;
}

std::pair<Label, int> video_vote(const std::vector<PredictionRecord>& image_records) {
    if (image_records.empty()) throw ValidationError("video_vote on zero records");
    int pos = 0, neg = 0;
    for (const auto& r : image_records) (r.predicted == kPositive ? pos : neg) += 1;
    if (pos != neg) return {pos > neg ? kPositive : kNegative, std::abs(pos - neg)};

    // Tie: the single most confident record decides. Equal magnitudes fall
    // back to bag_id order so the result is independent of record order.
    const PredictionRecord* best = &image_records.front();
    for (const auto& r : image_records) {
        const double a = std::abs(r.score), b = std::abs(best->score);
        if (a > b || (a == b && r.bag_id < best->bag_id)) best = &r;
    }
    return {best->predicted, 0};
}

std::map<std::string, Label> video_ground_truth(const Dataset& dataset) {
    std::map<std::string, std::pair<int, int>> tally;  // video -> (neg, pos)
    for (const auto& bag : dataset.bags) {
        if (!bag.label) throw DataError("bag '" + bag.bag_id + "' is unlabeled");
        auto& t = tally[bag.video_id];
        (*bag.label == kPositive ? t.second : t.first) += 1;
    }
    std::map<std::string, Label> truth;
    for (const auto& [video, t] : tally) {
        if (t.first == t.second)
            throw DataError("video '" + video +
                            "' has tied ground-truth image labels; cannot assign a video label");
        truth[video] = t.second > t.first ? kPositive : kNegative;
    }
    return truth;
}

std::vector<PredictionRecord> video_level_records(const std::vector<PredictionRecord>& records,
                                                  const std::map<std::string, Label>& truth) {
    std::map<std::string, std::vector<PredictionRecord>> by_video;
    for (const auto& r : records) by_video[r.video_id].push_back(r);

    std::vector<PredictionRecord> out;
    for (const auto& [video, image_records] : by_video) {
        const auto it = truth.find(video);
        if (it == truth.end()) throw DataError("no ground truth for video '" + video + "'");
        const auto [label, margin] = video_vote(image_records);
        PredictionRecord r;
        r.bag_id = video;
        r.video_id = video;
        r.truth = it->second;
        r.predicted = label;
        r.score = static_cast<double>(margin);
        r.fold = image_records.front().fold;
        out.push_back(std::move(r));
    }
    return out;
}

ConfusionMatrix aggregate_confusion(const std::vector<PredictionRecord>& records) {
    if (records.empty()) throw ValidationError("cannot aggregate zero records");
    ConfusionMatrix m;
    for (const auto& r : records) {
        const std::size_t row = r.truth == kPositive ? 1 : 0;
        const std::size_t col = r.predicted == kPositive ? 1 : 0;
        ++m.counts[row][col];
    }
    return m;
}

namespace {

nlohmann::ordered_json metric_json(const MetricTable& m) {
    return {{"acc", m.acc},
            {"pre", m.pre},
            {"rec", m.rec},
            {"f1", m.f1},
            {"undefined_precision", m.undefined_precision},
            {"undefined_recall", m.undefined_recall},
            {"undefined_f1", m.undefined_f1}};
}

nlohmann::ordered_json confusion_json(const ConfusionMatrix& m) {
    return nlohmann::ordered_json::array(
        {{m.counts[0][0], m.counts[0][1]}, {m.counts[1][0], m.counts[1][1]}});
}

nlohmann::ordered_json confusion_normalized_json(const ConfusionMatrix& m) {
    const auto n = m.normalized();
    return nlohmann::ordered_json::array({{n[0][0], n[0][1]}, {n[1][0], n[1][1]}});
}

}  // namespace

std::string render_report_json(const std::string& method, const std::string& config_digest,
                               std::uint64_t seed, const RunResult& result,
                               const std::vector<PredictionRecord>& video_records,
                               const std::string& task) {
    nlohmann::ordered_json report;
    report["method"] = method;
    report["config_digest"] = config_digest;
    report["seed"] = seed;
    report["task"] = task;
    report["folds"] = result.folds.size();

    std::vector<MetricTable> per_fold;
    for (const auto& diag : result.folds)
        per_fold.push_back(compute_metrics_for_fold(result.records, diag.fold));
    report["per_fold"] = nlohmann::ordered_json::array();
    for (const auto& m : per_fold) report["per_fold"].push_back(metric_json(m));
    report["mean"] = metric_json(mean_metrics(per_fold));
    report["pooled"] = metric_json(compute_metrics(result.records));

    const ConfusionMatrix image_confusion = aggregate_confusion(result.records);
    report["confusion_image"] = confusion_json(image_confusion);
    report["confusion_image_normalized"] = confusion_normalized_json(image_confusion);

    if (task == "video" || task == "both") {
        report["video_level"] = metric_json(compute_metrics(video_records));
        const ConfusionMatrix video_confusion = aggregate_confusion(video_records);
        report["confusion_video"] = confusion_json(video_confusion);
        report["confusion_video_normalized"] = confusion_normalized_json(video_confusion);
    }

    report["fold_diagnostics"] = nlohmann::ordered_json::array();
    for (const auto& diag : result.folds)
        report["fold_diagnostics"].push_back({{"fold", diag.fold},
                                              {"d_out", diag.d_out},
                                              {"variance_kept", diag.variance_kept},
                                              {"n_train_bags", diag.n_train_bags},
                                              {"n_test_bags", diag.n_test_bags},
                                              {"fitted_digest", diag.fitted_digest}});
    return report.dump(2) + "\n";
}

std::string render_report_text(const std::string& report_json) {
    const auto report = nlohmann::json::parse(report_json);
    std::ostringstream out;
    out << "method: " << report["method"].get<std::string>() << "\n";
    out << "seed: " << report["seed"].get<std::uint64_t>()
        << "  folds: " << report["folds"].get<int>() << "\n\n";

    const auto print_metrics = [&](const char* name, const nlohmann::json& m) {
        out << name << ": acc " << m["acc"].get<double>() << "  pre " << m["pre"].get<double>()
            << "  rec " << m["rec"].get<double>() << "  f1 " << m["f1"].get<double>() << "\n";
    };
    print_metrics("mean over folds", report["mean"]);
    print_metrics("pooled", report["pooled"]);
    if (report.contains("video_level")) print_metrics("video level", report["video_level"]);

    const auto print_confusion = [&](const char* name, const nlohmann::json& c) {
        out << name << " (rows truth L,H; cols predicted L,H):\n";
        for (int r = 0; r < 2; ++r)
            out << "  [" << c[r][0].get<double>() << ", " << c[r][1].get<double>() << "]\n";
    };
    out << "\n";
    print_confusion("confusion image (normalized %)", report["confusion_image_normalized"]);
    if (report.contains("confusion_video_normalized"))
        print_confusion("confusion video (normalized %)", report["confusion_video_normalized"]);
    return out.str();
}

}  // namespace milvb
