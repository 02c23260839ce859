#include <doctest.h>

#include <filesystem>
#include <set>

#include "milvb/bagcore.hpp"
#include "milvb/rng.hpp"

using namespace milvb;

namespace {

Dataset make_dataset(int n_videos, int bags_per_video, int instances, int dim,
                     std::uint64_t seed = 1) {
    Rng rng(seed);
    Dataset ds;
    ds.feature_dim = static_cast<std::size_t>(dim);
    for (int v = 0; v < n_videos; ++v)
        for (int b = 0; b < bags_per_video; ++b) {
            Bag bag;
            bag.bag_id = "bag-" + std::to_string(v) + "-" + std::to_string(b);
            bag.video_id = "vid-" + std::to_string(v);
            bag.label = (v % 2 == 0) ? kPositive : kNegative;
            for (int i = 0; i < instances; ++i) {
                InstanceVec inst;
                for (int j = 0; j < dim; ++j) inst.values.push_back(rng.normal());
                bag.instances.push_back(std::move(inst));
            }
            ds.bags.push_back(std::move(bag));
        }
    return ds;
}

}  // namespace

TEST_CASE("split_by_video balances 53 videos into {11,11,11,10,10}") {
    const auto ds = make_dataset(53, 3, 2, 4);
    const auto split = split_by_video(ds, 5, 42);
    auto sizes = split.fold_sizes();
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    CHECK(sizes == std::vector<int>{11, 11, 11, 10, 10});
}

TEST_CASE("split_by_video with k videos and k folds puts one video per fold") {
    const auto ds = make_dataset(7, 2, 2, 3);
    const auto split = split_by_video(ds, 7, 9);
    for (const int size : split.fold_sizes()) CHECK(size == 1);
}

TEST_CASE("split_by_video is deterministic and a partition") {
    const auto ds = make_dataset(12, 2, 3, 4);
    const auto a = split_by_video(ds, 5, 7);
    const auto b = split_by_video(ds, 5, 7);
    CHECK(a.assignment == b.assignment);

    int total = 0;
    for (const int s : a.fold_sizes()) total += s;
    CHECK(total == 12);

    const auto c = split_by_video(ds, 5, 8);
    CHECK(a.assignment != c.assignment);  // different seed shuffles differently
}

TEST_CASE("split_by_video rejects fewer videos than folds and k < 2") {
    const auto ds = make_dataset(3, 2, 2, 3);
    CHECK_THROWS_AS(split_by_video(ds, 5, 1), ValidationError);
    CHECK_THROWS_AS(split_by_video(ds, 1, 1), ValidationError);
}

TEST_CASE("fold_view separates videos exactly, preserves labels, never leaks") {
    const auto ds = make_dataset(10, 3, 4, 5);
    const auto split = split_by_video(ds, 5, 3);

    std::size_t total_test = 0;
    for (int fold = 0; fold < 5; ++fold) {
        const auto [train, test] = fold_view(ds, split, fold);
        CHECK(train.n_bags() + test.n_bags() == ds.n_bags());
        total_test += test.n_bags();

        std::set<std::string> train_videos, test_videos;
        for (const auto& bag : train.bags) {
            train_videos.insert(bag.video_id);
            CHECK(bag.label.has_value());
        }
        for (const auto& bag : test.bags) test_videos.insert(bag.video_id);
        for (const auto& video : test_videos) CHECK(train_videos.count(video) == 0);

        // Bags inside a view are in lexicographic bag_id order.
        for (std::size_t i = 1; i < test.bags.size(); ++i)
            CHECK(test.bags[i - 1].bag_id < test.bags[i].bag_id);
    }
    CHECK(total_test == ds.n_bags());  // partition identity
}

TEST_CASE("fold_view with 2 videos and k=2 isolates each video") {
    const auto ds = make_dataset(2, 3, 2, 3);
    const auto split = split_by_video(ds, 2, 11);
    const auto [train, test] = fold_view(ds, split, 0);
    CHECK(train.n_bags() == 3);
    CHECK(test.n_bags() == 3);
    CHECK(train.bags.front().video_id != test.bags.front().video_id);
}

TEST_CASE("fold_view rejects out-of-range fold index") {
    const auto ds = make_dataset(4, 1, 2, 3);
    const auto split = split_by_video(ds, 2, 0);
    CHECK_THROWS_AS(fold_view(ds, split, 2), ValidationError);
    CHECK_THROWS_AS(fold_view(ds, split, -1), ValidationError);
}

TEST_CASE("class_counts counts labels and rejects unlabeled bags") {
    auto ds = make_dataset(4, 1, 2, 3);  // videos 0,2 positive; 1,3 negative
    const auto [neg, pos] = class_counts(ds);
    CHECK(neg == 2);
    CHECK(pos == 2);
    CHECK(neg + pos == ds.n_bags());

    Dataset single;
    single.feature_dim = 1;
    Bag bag;
    bag.bag_id = "only";
    bag.video_id = "v";
    bag.label = kPositive;
    bag.instances.push_back({{1.0}, {}});
    single.bags.push_back(bag);
    const auto [n0, p0] = class_counts(single);
    CHECK(n0 == 0);
    CHECK(p0 == 1);

    ds.bags.front().label.reset();
    CHECK_THROWS_AS(class_counts(ds), DataError);
}

TEST_CASE("dataset validation rejects duplicates, empties, dimension mismatch") {
    auto ds = make_dataset(2, 2, 2, 3);
    CHECK_NOTHROW(ds.validate());

    auto dup = ds;
    dup.bags[1].bag_id = dup.bags[0].bag_id;
    CHECK_THROWS_AS(dup.validate(), DataError);

    auto empty_bag = ds;
    empty_bag.bags[0].instances.clear();
    CHECK_THROWS_AS(empty_bag.validate(), DataError);

    auto bad_dim = ds;
    bad_dim.bags[0].instances[0].values.push_back(1.0);
    CHECK_THROWS_AS(bad_dim.validate(), DataError);

    auto non_finite = ds;
    non_finite.bags[0].instances[0].values[0] = std::nan("");
    CHECK_THROWS_AS(non_finite.validate(), DataError);
}

TEST_CASE("manifest round-trip is identity on ids, labels, and values") {
    const auto ds = make_dataset(5, 2, 3, 4, 99);
    const auto dir = std::filesystem::temp_directory_path() / "milvb_bagcore_test";
    std::filesystem::create_directories(dir);
    const auto manifest = (dir / "dataset.manifest").string();

    save_dataset(ds, manifest, "features.bin");
    const auto loaded = load_dataset(manifest);

    REQUIRE(loaded.n_bags() == ds.n_bags());
    CHECK(loaded.feature_dim == ds.feature_dim);
    for (std::size_t b = 0; b < ds.n_bags(); ++b) {
        CHECK(loaded.bags[b].bag_id == ds.bags[b].bag_id);
        CHECK(loaded.bags[b].video_id == ds.bags[b].video_id);
        CHECK(loaded.bags[b].label == ds.bags[b].label);
        REQUIRE(loaded.bags[b].size() == ds.bags[b].size());
        for (std::size_t i = 0; i < ds.bags[b].size(); ++i)
            for (std::size_t j = 0; j < ds.feature_dim; ++j)
                CHECK(loaded.bags[b].instances[i].values[j] ==
                      ds.bags[b].instances[i].values[j]);  // bit-exact
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("unlabeled bags round-trip through the '?' label") {
    auto ds = make_dataset(2, 1, 2, 2);
    ds.bags[0].label.reset();
    const auto dir = std::filesystem::temp_directory_path() / "milvb_bagcore_unlabeled";
    std::filesystem::create_directories(dir);
    save_dataset(ds, (dir / "d.manifest").string(), "f.bin");
    const auto loaded = load_dataset((dir / "d.manifest").string());
    CHECK(!loaded.bags[0].label.has_value());
    CHECK(loaded.bags[1].label.has_value());
    std::filesystem::remove_all(dir);
}
