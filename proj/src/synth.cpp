#include "milvb/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>

#include "milvb/rng.hpp"

namespace milvb {

SyntheticSpec SyntheticSpec::reference(int dim) {
    SyntheticSpec spec;
    spec.dim = dim;
    spec.concept_cluster.mean = Eigen::VectorXd::Zero(dim);
    spec.concept_cluster.mean(0) = 8.0;
    spec.concept_cluster.stddev = 0.25;
    GaussianCluster bg0, bg1;
    bg0.mean = Eigen::VectorXd::Zero(dim);
    bg0.stddev = 1.0;
    bg1.mean = Eigen::VectorXd::Zero(dim);
    bg1.mean(1) = 8.0;
    bg1.stddev = 1.0;
    spec.background = {bg0, bg1};
    return spec;
}

void SyntheticSpec::validate() const {
    if (n_videos < 1) throw ValidationError("n_videos must be >= 1");
    if (bags_per_video < 1) throw ValidationError("bags_per_video must be >= 1");
    if (min_instances < 1 || max_instances < min_instances)
        throw ValidationError("instances_per_bag range invalid");
    if (dim < 1) throw ValidationError("dim must be >= 1");
    if (!(witness_rate > 0.0 && witness_rate <= 1.0))
        throw ValidationError("witness_rate must lie in (0, 1]");
    if (!(label_noise >= 0.0 && label_noise < 1.0))
        throw ValidationError("label_noise must lie in [0, 1)");
    if (!(positive_video_fraction >= 0.0 && positive_video_fraction <= 1.0))
        throw ValidationError("positive_video_fraction must lie in [0, 1]");
    if (concept_cluster.mean.size() != dim) throw ValidationError("concept mean dimension mismatch");
    if (!(concept_cluster.stddev > 0.0)) throw ValidationError("concept stddev must be positive");
    if (background.empty()) throw ValidationError("need at least one background cluster");
    for (const auto& bg : background) {
        if (bg.mean.size() != dim) throw ValidationError("background mean dimension mismatch");
        if (!(bg.stddev > 0.0)) throw ValidationError("background stddev must be positive");
    }
}

namespace {

InstanceVec draw_instance(const GaussianCluster& cluster, Rng& rng) {
    InstanceVec inst;
    inst.values.resize(static_cast<std::size_t>(cluster.mean.size()));
    for (Eigen::Index j = 0; j < cluster.mean.size(); ++j)
        inst.values[static_cast<std::size_t>(j)] = rng.normal(cluster.mean(j), cluster.stddev);
    return inst;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(stage_seed(spec.seed, "synth"));

    const int n_pos_videos =
        static_cast<int>(std::lround(spec.positive_video_fraction * spec.n_videos));

    Dataset ds;
    ds.feature_dim = static_cast<std::size_t>(spec.dim);
    const int n_bags = spec.n_videos * spec.bags_per_video;
    for (int i = 0; i < n_bags; ++i) {
        const int video = i % spec.n_videos;
        Bag bag;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "bag-%04d", i);
        bag.bag_id = buf;
        std::snprintf(buf, sizeof(buf), "vid-%03d", video);
        bag.video_id = buf;

        const bool truly_positive = video < n_pos_videos;
        const int m = spec.min_instances +
                      static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(spec.max_instances - spec.min_instances + 1)));
        if (truly_positive) {
            const int witnesses =
                std::max(1, static_cast<int>(std::lround(spec.witness_rate * m)));
            for (int j = 0; j < m; ++j) {
                const bool concept_draw = j < witnesses;
                const GaussianCluster& cluster =
                    concept_draw ? spec.concept_cluster
                                 : spec.background[rng.below(spec.background.size())];
                bag.instances.push_back(draw_instance(cluster, rng));
            }
        } else {
            for (int j = 0; j < m; ++j)
                bag.instances.push_back(
                    draw_instance(spec.background[rng.below(spec.background.size())], rng));
        }

        Label label = truly_positive ? kPositive : kNegative;
        if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) label = -label;
        bag.label = label;
        ds.bags.push_back(std::move(bag));
    }
    ds.validate();
    return ds;
}

Label synthetic_bayes_label(const SyntheticSpec& spec, const Bag& bag) {
    for (const auto& inst : bag.instances) {
        const Eigen::Map<const Eigen::VectorXd> x(inst.values.data(),
                                                  static_cast<Eigen::Index>(inst.values.size()));
        const double concept_d = (x - spec.concept_cluster.mean).squaredNorm();
        bool concept_nearest = true;
        for (const auto& bg : spec.background)
            if ((x - bg.mean).squaredNorm() <= concept_d) {
                concept_nearest = false;
                break;
            }
        if (concept_nearest) return kPositive;
    }
    return kNegative;
}

}  // namespace milvb
