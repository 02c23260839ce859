#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "milvb/bagcore.hpp"
#include "milvb/binio.hpp"
#include "milvb/eval.hpp"
#include "milvb/featex.hpp"
#include "milvb/mil.hpp"
#include "milvb/patchex.hpp"
#include "milvb/patchstore.hpp"
#include "milvb/reduce.hpp"
#include "milvb/rng.hpp"
#include "milvb/stamp.hpp"
#include "milvb/synth.hpp"

namespace fs = std::filesystem;
using namespace milvb;

namespace {

std::string fmt(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

std::string join_doubles(const std::vector<double>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

std::string join_ints(const std::vector<int>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

// --- shared option blocks -----------------------------------------------------

struct MethodOptions {
    std::string method = "mivbgmm";
    std::string kernel = "default";  // default | linear | rbf
    std::vector<double> c_grid = {0.01, 0.1, 1.0, 10.0, 100.0};
    std::vector<double> gamma_grid = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    int inner_folds = 3;
    int k_init = 50;
    double prune_threshold = 0.01;
    double vb_tol = 1e-8;
    int vb_max_iter = 500;
    std::vector<int> cknn_r_grid = {1, 3, 5};
    std::vector<int> cknn_c_grid = {0, 3, 5};
    int mil_max_iter = 20;

    void attach(CLI::App* cmd) {
        cmd->add_option("--method", method, "MIL method: mivbgmm, cknn, misvm, MISVM")
            ->check(CLI::IsMember({"mivbgmm", "cknn", "misvm", "MISVM"}));
        cmd->add_option("--kernel", kernel, "SVM kernel: default, linear, rbf")
            ->check(CLI::IsMember({"default", "linear", "rbf"}));
        cmd->add_option("--svm-c-grid", c_grid, "SVM C grid")->delimiter(',');
        cmd->add_option("--svm-gamma-grid", gamma_grid, "RBF gamma grid (multiples of 1/d)")
            ->delimiter(',');
        cmd->add_option("--inner-folds", inner_folds, "inner CV folds for grid search");
        cmd->add_option("--k-init", k_init, "initial VBGMM component count");
        cmd->add_option("--prune-threshold", prune_threshold, "component weight prune threshold");
        cmd->add_option("--vb-tol", vb_tol, "VBGMM relative ELBO tolerance");
        cmd->add_option("--vb-max-iter", vb_max_iter, "VBGMM iteration cap");
        cmd->add_option("--cknn-r-grid", cknn_r_grid, "CKNN reference count grid")->delimiter(',');
        cmd->add_option("--cknn-c-grid", cknn_c_grid, "CKNN citer rank grid")->delimiter(',');
        cmd->add_option("--mil-max-iter", mil_max_iter, "mi-SVM / MI-SVM iteration cap");
    }

    MILTrainConfig build(std::uint64_t seed) const {
        MILTrainConfig cfg = mil_default_config(mil_method_from_name(method));
        if (kernel == "linear") cfg.svm.kernel = KernelKind::Linear;
        if (kernel == "rbf") cfg.svm.kernel = KernelKind::RBF;
        cfg.svm.c_grid = c_grid;
        cfg.svm.gamma_scale_grid = gamma_grid;
        cfg.inner_k = inner_folds;
        cfg.vbgmm.k_init = k_init;
        cfg.vbgmm.prune_threshold = prune_threshold;
        cfg.vbgmm.tol = vb_tol;
        cfg.vbgmm.max_iter = vb_max_iter;
        cfg.cknn.r_grid = cknn_r_grid;
        cfg.cknn.citer_grid = cknn_c_grid;
        cfg.max_mil_iterations = mil_max_iter;
        cfg.seed = seed;
        return cfg;
    }

    void stamp_into(std::map<std::string, std::string>& config) const {
        config["method"] = method;
        config["kernel"] = kernel;
        config["svm_c_grid"] = join_doubles(c_grid);
        config["svm_gamma_grid"] = join_doubles(gamma_grid);
        config["inner_folds"] = std::to_string(inner_folds);
        config["k_init"] = std::to_string(k_init);
        config["prune_threshold"] = fmt(prune_threshold);
        config["vb_tol"] = fmt(vb_tol);
        config["vb_max_iter"] = std::to_string(vb_max_iter);
        config["cknn_r_grid"] = join_ints(cknn_r_grid);
        config["cknn_c_grid"] = join_ints(cknn_c_grid);
        config["mil_max_iter"] = std::to_string(mil_max_iter);
    }
};

// Verifies that the consumer artifact was built from the artifact now present
// at `upstream_dir`; refuses with a key diff when the upstream changed.
void check_chain(const std::string& data_dir, const std::string& input_name,
                 const std::string& upstream_dir) {
    const Stamp consumer = read_stamp(data_dir);
    const Stamp upstream = read_stamp(upstream_dir);
    verify_input_stamp(consumer, input_name, upstream);
}

// --- synth ---------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int videos = 10, bags_per_video = 4, min_instances = 8, max_instances = 20, dim = 10;
    double witness_rate = 0.3, label_noise = 0.0, positive_fraction = 0.5;
    double concept_distance = 8.0, concept_stddev = 0.25, background_stddev = 1.0;
    int n_background = 2;
    std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& args) {
    SyntheticSpec spec = SyntheticSpec::reference(args.dim);
    spec.n_videos = args.videos;
    spec.bags_per_video = args.bags_per_video;
    spec.min_instances = args.min_instances;
    spec.max_instances = args.max_instances;
    spec.witness_rate = args.witness_rate;
    spec.label_noise = args.label_noise;
    spec.positive_video_fraction = args.positive_fraction;
    spec.seed = args.seed;
    spec.concept_cluster.mean = Eigen::VectorXd::Zero(args.dim);
    spec.concept_cluster.mean(0) = args.concept_distance;
    spec.concept_cluster.stddev = args.concept_stddev;
    spec.background.clear();
    for (int b = 0; b < args.n_background; ++b) {
        GaussianCluster bg;
        bg.mean = Eigen::VectorXd::Zero(args.dim);
        if (b > 0 && args.dim > 1) bg.mean(std::min(b, args.dim - 1)) = args.concept_distance;
        bg.stddev = args.background_stddev;
        spec.background.push_back(bg);
    }

    const Dataset ds = generate_synthetic(spec);
    fs::create_directories(args.out);
    save_dataset(ds, (fs::path(args.out) / "dataset.manifest").string(), "features.bin");

    Stamp stamp;
    stamp.command = "synth";
    stamp.seed = args.seed;
    stamp.config = {{"videos", std::to_string(args.videos)},
                    {"bags_per_video", std::to_string(args.bags_per_video)},
                    {"min_instances", std::to_string(args.min_instances)},
                    {"max_instances", std::to_string(args.max_instances)},
                    {"dim", std::to_string(args.dim)},
                    {"witness_rate", fmt(args.witness_rate)},
                    {"label_noise", fmt(args.label_noise)},
                    {"positive_fraction", fmt(args.positive_fraction)},
                    {"concept_distance", fmt(args.concept_distance)},
                    {"concept_stddev", fmt(args.concept_stddev)},
                    {"background_stddev", fmt(args.background_stddev)},
                    {"n_background", std::to_string(args.n_background)},
                    {"seed", std::to_string(args.seed)}};
    write_stamp(stamp, args.out);

    const auto [neg, pos] = class_counts(ds);
    std::cerr << "milvb synth: " << ds.n_bags() << " bags (" << neg << " L / " << pos << " H), "
              << ds.n_instances() << " instances -> " << args.out << "\n";
    return 0;
}

// --- extract-patches -------------------------------------------------------------

struct ExtractArgs {
    std::string list;
    std::string out;
    int patch_size = 64;
    double overlap = 0.5;
    double min_inside_fraction = 1.0;
};

int run_extract(const ExtractArgs& args) {
    std::ifstream in(args.list);
    if (!in) throw DataError("cannot open image list '" + args.list + "'");

    PatchExtractionConfig cfg;
    cfg.size = args.patch_size;
    cfg.overlap = args.overlap;
    cfg.min_inside_fraction = args.min_inside_fraction;

    std::vector<PatchRecord> records;
    std::set<std::string> bags_seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            field.erase(0, field.find_first_not_of(" \t"));
            field.erase(field.find_last_not_of(" \t\r") + 1);
            fields.push_back(field);
        }
        if (fields.size() != 5)
            throw DataError(args.list + ":" + std::to_string(line_no) +
                            ": expected `image, mask, bag_id, video_id, label`");

        const auto image = read_png_rgb(fields[0]);
        const auto mask = read_png_mask(fields[1]);
        const auto patches = extract_patches(image, mask, cfg);
        bags_seen.insert(fields[2]);
        for (const auto& patch : patches) {
            PatchRecord rec;
            rec.bag_id = fields[2];
            rec.video_id = fields[3];
            if (fields[4] != "?") rec.label = label_from_char(fields[4].at(0));
            rec.image_id = fs::path(fields[0]).filename().string();
            rec.patch = patch;
            records.push_back(std::move(rec));
        }
        if (patches.empty())
            std::cerr << "milvb extract-patches: warning: no patches from " << fields[0] << "\n";
    }
    if (records.empty()) throw DataError("no patches extracted from any listed image");

    save_patch_store(records, args.out);
    Stamp stamp;
    stamp.command = "extract-patches";
    stamp.config = {{"patch_size", std::to_string(args.patch_size)},
                    {"overlap", fmt(args.overlap)},
                    {"min_inside_fraction", fmt(args.min_inside_fraction)},
                    {"list", args.list}};
    write_stamp(stamp, args.out);

    std::cerr << "milvb extract-patches: " << bags_seen.size() << " bags, " << records.size()
              << " patches -> " << args.out << "\n";
    return 0;
}

// --- featurize -------------------------------------------------------------------

struct FeaturizeArgs {
    std::string patches;
    std::string out;
    int n_colors = 32;
    std::uint64_t seed = 0;
};

int run_featurize(const FeaturizeArgs& args) {
    const auto records = load_patch_store(args.patches);
    const Stamp upstream = read_stamp(args.patches);

    Dataset ds;
    ds.feature_dim = kTotalFeatureLength;
    std::map<std::string, std::size_t> bag_index;
    const std::uint64_t seed = stage_seed(args.seed, "featurize");
    for (const auto& rec : records) {
        const auto fv = extract_all(rec.patch, args.n_colors, seed);
        InstanceVec inst;
        inst.values = fv.values;
        inst.source = InstanceSource{rec.image_id, rec.patch.origin_row, rec.patch.origin_col};

        auto it = bag_index.find(rec.bag_id);
        if (it == bag_index.end()) {
            Bag bag;
            bag.bag_id = rec.bag_id;
            bag.video_id = rec.video_id;
            bag.label = rec.label;
            ds.bags.push_back(std::move(bag));
            it = bag_index.emplace(rec.bag_id, ds.bags.size() - 1).first;
        }
        ds.bags[it->second].instances.push_back(std::move(inst));
    }

    fs::create_directories(args.out);
    save_dataset(ds, (fs::path(args.out) / "dataset.manifest").string(), "features.bin");

    // Segment layout sidecar.
    nlohmann::ordered_json layout = nlohmann::ordered_json::array();
    for (const auto& seg : feature_layout())
        layout.push_back({{"name", seg.name}, {"offset", seg.offset}, {"length", seg.length}});
    std::ofstream layout_out(fs::path(args.out) / "layout.json");
    layout_out << layout.dump(2) << "\n";

    Stamp stamp;
    stamp.command = "featurize";
    stamp.seed = args.seed;
    stamp.config = {{"n_colors", std::to_string(args.n_colors)},
                    {"seed", std::to_string(args.seed)}};
    stamp.inputs["patches"] = {upstream.config_digest(), upstream.config};
    write_stamp(stamp, args.out);

    std::cerr << "milvb featurize: " << ds.n_bags() << " bags, " << ds.n_instances()
              << " instances, dim " << ds.feature_dim << " -> " << args.out << "\n";
    return 0;
}

// --- reduce ------------------------------------------------------------------------

struct ReduceArgs {
    std::string data;
    std::string out;
    double pca_variance = 0.95;
    std::string patches_check;  // optional provenance check
};

int run_reduce(const ReduceArgs& args) {
    if (!args.patches_check.empty()) check_chain(args.data, "patches", args.patches_check);
    const Stamp upstream = read_stamp(args.data);
    const Dataset ds = load_dataset((fs::path(args.data) / "dataset.manifest").string());

    const Eigen::MatrixXd pooled = ds.pooled_instances();
    const Standardizer std_fit = fit_standardizer(pooled);
    const PCAProjection pca = fit_pca(std_fit.apply(pooled), args.pca_variance);

    Dataset reduced;
    reduced.feature_dim = static_cast<std::size_t>(pca.d_out());
    for (const auto& bag : ds.bags) {
        Bag out_bag;
        out_bag.bag_id = bag.bag_id;
        out_bag.video_id = bag.video_id;
        out_bag.label = bag.label;
        for (const auto& inst : bag.instances) {
            const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
                inst.values.data(), static_cast<Eigen::Index>(inst.values.size()));
            const Eigen::VectorXd t = reduce_transform(pca, std_fit, x);
            InstanceVec iv;
            iv.values.assign(t.begin(), t.end());
            out_bag.instances.push_back(std::move(iv));
        }
        reduced.bags.push_back(std::move(out_bag));
    }

    fs::create_directories(args.out);
    save_dataset(reduced, (fs::path(args.out) / "dataset.manifest").string(), "features.bin");

    // Fitted parameters sidecar.
    std::ofstream fitted(fs::path(args.out) / "fitted.bin", std::ios::binary);
    write_string(fitted, "milvb-reduce-v1");
    write_u64_le(fitted, static_cast<std::uint64_t>(std_fit.mean.size()));
    for (Eigen::Index i = 0; i < std_fit.mean.size(); ++i) write_f64_le(fitted, std_fit.mean(i));
    for (Eigen::Index i = 0; i < std_fit.scale.size(); ++i) write_f64_le(fitted, std_fit.scale(i));
    write_u64_le(fitted, static_cast<std::uint64_t>(pca.d_out()));
    for (Eigen::Index r = 0; r < pca.components.rows(); ++r)
        for (Eigen::Index c = 0; c < pca.components.cols(); ++c)
            write_f64_le(fitted, pca.components(r, c));
    for (Eigen::Index i = 0; i < pca.eigenvalues.size(); ++i)
        write_f64_le(fitted, pca.eigenvalues(i));

    Stamp stamp;
    stamp.command = "reduce";
    stamp.config = {{"pca_variance", fmt(args.pca_variance)}};
    stamp.inputs["data"] = {upstream.config_digest(), upstream.config};
    write_stamp(stamp, args.out);

    std::cerr << "milvb reduce: " << ds.feature_dim << " -> " << reduced.feature_dim
              << " dims (variance kept " << pca.variance_kept << ") -> " << args.out << "\n";
    return 0;
}

// --- train ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    MethodOptions method;
};

int run_train(const TrainArgs& args) {
    const Stamp upstream = read_stamp(args.data);
    const Dataset ds = load_dataset((fs::path(args.data) / "dataset.manifest").string());
    const MILTrainConfig cfg = args.method.build(stage_seed(args.seed, "train"));
    const MILClassifier clf = mil_train(ds, cfg);

    fs::create_directories(args.out);
    std::ofstream model_out(fs::path(args.out) / "model.bin", std::ios::binary);
    save_classifier(clf, model_out);
    if (!model_out) throw DataError("cannot write model.bin in '" + args.out + "'");

    Stamp stamp;
    stamp.command = "train";
    stamp.seed = args.seed;
    args.method.stamp_into(stamp.config);
    stamp.config["seed"] = std::to_string(args.seed);
    stamp.inputs["data"] = {upstream.config_digest(), upstream.config};
    write_stamp(stamp, args.out);

    std::cerr << "milvb train: " << mil_method_name(cfg.method) << " model (digest "
              << classifier_digest(clf) << ") -> " << args.out << "\n";
    return 0;
}

// --- evaluate ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string data;
    std::string report_path;
    std::string task = "both";
    int folds = 5;
    double pca_variance = 0.95;
    bool stratify_folds = false;
    std::uint64_t seed = 0;
    std::string patches_check;
    MethodOptions method;
};

int run_evaluate(const EvaluateArgs& args) {
    if (!args.patches_check.empty()) check_chain(args.data, "patches", args.patches_check);
    read_stamp(args.data);  // the input must exist and verify
    const Dataset ds = load_dataset((fs::path(args.data) / "dataset.manifest").string());

    RunConfig cfg;
    cfg.k = args.folds;
    cfg.pca_variance = args.pca_variance;
    cfg.stratify_folds = args.stratify_folds;
    cfg.seed = args.seed;
    cfg.mil = args.method.build(0);  // per-fold seeds are derived inside run_cv

    const RunResult result = run_cv(ds, cfg);
    std::vector<PredictionRecord> video_records;
    if (args.task != "image")
        video_records = video_level_records(result.records, video_ground_truth(ds));

    std::map<std::string, std::string> config_map = {
        {"task", args.task},
        {"folds", std::to_string(args.folds)},
        {"pca_variance", fmt(args.pca_variance)},
        {"stratify_folds", args.stratify_folds ? "1" : "0"},
        {"seed", std::to_string(args.seed)}};
    args.method.stamp_into(config_map);

    const std::string report = render_report_json(args.method.method, config_digest(config_map),
                                                  args.seed, result, video_records, args.task);
    std::ofstream out(args.report_path);
    if (!out) throw DataError("cannot write report '" + args.report_path + "'");
    out << report;

    std::cerr << "milvb evaluate: report -> " << args.report_path << "\n";
    return 0;
}

// --- report -----------------------------------------------------------------------------

int run_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::cout << render_report_text(buffer.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MIL vascularity classification pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI/TOML config file mirroring the CLI options");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic MIL dataset");
    synth_cmd->add_option("--out", synth.out)->required();
    synth_cmd->add_option("--videos", synth.videos);
    synth_cmd->add_option("--bags-per-video", synth.bags_per_video);
    synth_cmd->add_option("--min-instances", synth.min_instances);
    synth_cmd->add_option("--max-instances", synth.max_instances);
    synth_cmd->add_option("--dim", synth.dim);
    synth_cmd->add_option("--witness-rate", synth.witness_rate);
    synth_cmd->add_option("--label-noise", synth.label_noise);
    synth_cmd->add_option("--positive-fraction", synth.positive_fraction);
    synth_cmd->add_option("--concept-distance", synth.concept_distance);
    synth_cmd->add_option("--concept-stddev", synth.concept_stddev);
    synth_cmd->add_option("--background-stddev", synth.background_stddev);
    synth_cmd->add_option("--n-background", synth.n_background);
    synth_cmd->add_option("--seed", synth.seed);

    ExtractArgs extract;
    auto* extract_cmd =
        app.add_subcommand("extract-patches", "extract ROI patches from images+masks");
    extract_cmd->add_option("--list", extract.list, "CSV: image, mask, bag_id, video_id, label")
        ->required();
    extract_cmd->add_option("--out", extract.out)->required();
    extract_cmd->add_option("--patch-size", extract.patch_size);
    extract_cmd->add_option("--overlap", extract.overlap);
    extract_cmd->add_option("--min-inside-fraction", extract.min_inside_fraction);

    FeaturizeArgs featurize;
    auto* featurize_cmd = app.add_subcommand("featurize", "compute patch feature vectors");
    featurize_cmd->add_option("--patches", featurize.patches)->required();
    featurize_cmd->add_option("--out", featurize.out)->required();
    featurize_cmd->add_option("--n-colors", featurize.n_colors);
    featurize_cmd->add_option("--seed", featurize.seed);

    ReduceArgs reduce_args;
    auto* reduce_cmd = app.add_subcommand("reduce", "fit+apply standardizer and PCA");
    reduce_cmd->add_option("--data", reduce_args.data)->required();
    reduce_cmd->add_option("--out", reduce_args.out)->required();
    reduce_cmd->add_option("--pca-variance", reduce_args.pca_variance);
    reduce_cmd->add_option("--check-patches", reduce_args.patches_check,
                           "verify the dataset was built from this patch store");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train a MIL classifier on a full dataset");
    train_cmd->add_option("--data", train.data)->required();
    train_cmd->add_option("--out", train.out)->required();
    train_cmd->add_option("--seed", train.seed);
    train.method.attach(train_cmd);

    EvaluateArgs evaluate;
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "run the by-video cross-validation protocol");
    evaluate_cmd->add_option("--data", evaluate.data)->required();
    evaluate_cmd->add_option("--report", evaluate.report_path)->required();
    evaluate_cmd->add_option("--task", evaluate.task)
        ->check(CLI::IsMember({"image", "video", "both"}));
    evaluate_cmd->add_option("--folds", evaluate.folds);
    evaluate_cmd->add_option("--pca-variance", evaluate.pca_variance);
    evaluate_cmd->add_option("--seed", evaluate.seed);
    evaluate_cmd->add_flag("--stratify-folds", evaluate.stratify_folds,
                           "stratify the video split by class (off in the reference protocol)");
    evaluate_cmd->add_option("--check-patches", evaluate.patches_check,
                             "verify the dataset was built from this patch store");
    evaluate.method.attach(evaluate_cmd);

    std::string report_path;
    auto* report_cmd = app.add_subcommand("report", "pretty-print a report.json");
    report_cmd->add_option("--report", report_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return run_synth(synth);
        if (extract_cmd->parsed()) return run_extract(extract);
        if (featurize_cmd->parsed()) return run_featurize(featurize);
        if (reduce_cmd->parsed()) return run_reduce(reduce_args);
        if (train_cmd->parsed()) return run_train(train);
        if (evaluate_cmd->parsed()) return run_evaluate(evaluate);
        if (report_cmd->parsed()) return run_report(report_path);
    } catch (const ValidationError& e) {
        std::cerr << "milvb: validation error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "milvb: data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "milvb: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
