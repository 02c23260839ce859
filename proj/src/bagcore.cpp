#include "milvb/bagcore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "milvb/binio.hpp"
#include "milvb/rng.hpp"

namespace milvb {

char label_to_char(Label label) {
    if (label == kPositive) return 'H';
    if (label == kNegative) return 'L';
    throw ValidationError("label must be +1 or -1, got " + std::to_string(label));
}

Label label_from_char(char c) {
    if (c == 'H') return kPositive;
    if (c == 'L') return kNegative;
    throw DataError(std::string("unknown label character '") + c + "'");
}

std::size_t Dataset::n_instances() const {
    std::size_t n = 0;
    for (const auto& bag : bags) n += bag.size();
    return n;
}

void Dataset::validate() const {
    if (bags.empty()) throw DataError("dataset has no bags");
    std::set<std::string> ids;
    for (const auto& bag : bags) {
        if (!ids.insert(bag.bag_id).second)
            throw DataError("duplicate bag_id '" + bag.bag_id + "'");
        if (bag.instances.empty())
            throw DataError("bag '" + bag.bag_id + "' has no instances");
        for (const auto& inst : bag.instances) {
            if (inst.values.size() != feature_dim)
                throw DataError("bag '" + bag.bag_id + "' instance dimension " +
                                std::to_string(inst.values.size()) + " != feature_dim " +
                                std::to_string(feature_dim));
            for (const double v : inst.values)
                if (!std::isfinite(v))
                    throw DataError("non-finite feature value in bag '" + bag.bag_id + "'");
        }
    }
}

Eigen::MatrixXd Dataset::pooled_instances() const {
    Eigen::MatrixXd m(n_instances(), feature_dim);
    Eigen::Index row = 0;
    for (const auto& bag : bags)
        for (const auto& inst : bag.instances) {
            for (std::size_t j = 0; j < feature_dim; ++j) m(row, static_cast<Eigen::Index>(j)) = inst.values[j];
            ++row;
        }
    return m;
}

std::vector<int> FoldSplit::fold_sizes() const {
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (const auto& [video, fold] : assignment) ++sizes[static_cast<std::size_t>(fold)];
    return sizes;
}

FoldSplit split_by_video(const Dataset& dataset, int k, std::uint64_t seed, bool stratify) {
    if (k < 2) throw ValidationError("fold count k must be >= 2, got " + std::to_string(k));
    std::set<std::string> video_set;
    for (const auto& bag : dataset.bags) video_set.insert(bag.video_id);
    if (video_set.size() < static_cast<std::size_t>(k))
        throw ValidationError("cannot split " + std::to_string(video_set.size()) +
                              " videos into " + std::to_string(k) + " folds");

    // Canonical order first, then a seeded shuffle; dealing round-robin keeps
    // fold sizes within one video of each other.
    std::vector<std::string> videos(video_set.begin(), video_set.end());
    Rng rng(seed);
    rng.shuffle(videos);

    FoldSplit split;
    split.k = k;
    if (!stratify) {
        for (std::size_t i = 0; i < videos.size(); ++i)
            split.assignment[videos[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
        return split;
    }

    // Stratified variant: deal each video-majority class round-robin, offset
    // so classes interleave across folds.
    std::map<std::string, std::pair<int, int>> tally;  // video -> (neg, pos)
    for (const auto& bag : dataset.bags) {
        if (!bag.label) throw DataError("stratified split requires labeled bags");
        auto& t = tally[bag.video_id];
        (*bag.label == kPositive ? t.second : t.first) += 1;
    }
    std::size_t dealt = 0;
    for (const Label cls : {kNegative, kPositive}) {
        for (const auto& video : videos) {
            const auto& t = tally[video];
            const Label majority = t.second > t.first ? kPositive : kNegative;
            if (majority != cls) continue;
            split.assignment[video] = static_cast<int>(dealt % static_cast<std::size_t>(k));
            ++dealt;
        }
    }
    return split;
}

std::pair<Dataset, Dataset> fold_view(const Dataset& dataset, const FoldSplit& split,
                                      int test_fold) {
    if (test_fold < 0 || test_fold >= split.k)
        throw ValidationError("test_fold " + std::to_string(test_fold) + " out of range [0, " +
                              std::to_string(split.k) + ")");
    Dataset train, test;
    train.feature_dim = test.feature_dim = dataset.feature_dim;
    for (const auto& bag : dataset.bags) {
        const auto it = split.assignment.find(bag.video_id);
        if (it == split.assignment.end())
            throw DataError("video '" + bag.video_id + "' missing from fold split");
        (it->second == test_fold ? test : train).bags.push_back(bag);
    }
    const auto by_id = [](const Bag& a, const Bag& b) { return a.bag_id < b.bag_id; };
    std::sort(train.bags.begin(), train.bags.end(), by_id);
    std::sort(test.bags.begin(), test.bags.end(), by_id);
    return {std::move(train), std::move(test)};
}

std::pair<std::size_t, std::size_t> class_counts(const Dataset& dataset) {
    std::size_t neg = 0, pos = 0;
    for (const auto& bag : dataset.bags) {
        if (!bag.label) throw DataError("bag '" + bag.bag_id + "' is unlabeled");
        (*bag.label == kPositive ? pos : neg) += 1;
    }
    return {neg, pos};
}

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_u64_le(out, static_cast<std::uint64_t>(m.rows()));
    write_u64_le(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_f64_le(out, m(r, c));
    if (!out) throw DataError("write failed for '" + path + "'");
}

Eigen::MatrixXd read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open matrix file '" + path + "'");
    const auto rows = read_u64_le(in, path + " rows");
    const auto cols = read_u64_le(in, path + " cols");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t r = 0; r < rows; ++r)
        for (std::uint64_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                read_f64_le(in, path + " values");
    return m;
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& manifest_path,
                  const std::string& matrix_filename) {
    dataset.validate();
    const auto dir = std::filesystem::path(manifest_path).parent_path();

    write_matrix_file((dir / matrix_filename).string(), dataset.pooled_instances());

    std::ofstream out(manifest_path);
    if (!out) throw DataError("cannot open '" + manifest_path + "' for writing");
    std::size_t row = 0;
    for (const auto& bag : dataset.bags) {
        if (bag.bag_id.find(',') != std::string::npos ||
            bag.video_id.find(',') != std::string::npos)
            throw ValidationError("bag/video ids must not contain commas: '" + bag.bag_id + "'");
        const char label = bag.label ? label_to_char(*bag.label) : '?';
        out << bag.bag_id << ", " << bag.video_id << ", " << label << ", " << matrix_filename
            << ", " << row << ", " << bag.size() << "\n";
        row += bag.size();
    }
    if (!out) throw DataError("write failed for '" + manifest_path + "'");
}

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest '" + manifest_path + "'");
    const auto dir = std::filesystem::path(manifest_path).parent_path();

    Dataset dataset;
    std::map<std::string, Eigen::MatrixXd> matrices;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (fields.size() != 6)
            throw DataError(manifest_path + ":" + std::to_string(line_no) +
                            ": expected 6 fields, got " + std::to_string(fields.size()));

        Bag bag;
        bag.bag_id = fields[0];
        bag.video_id = fields[1];
        if (fields[2].size() != 1)
            throw DataError(manifest_path + ":" + std::to_string(line_no) + ": bad label field");
        if (fields[2][0] != '?') bag.label = label_from_char(fields[2][0]);

        const std::string& matrix_name = fields[3];
        auto it = matrices.find(matrix_name);
        if (it == matrices.end())
            it = matrices.emplace(matrix_name, read_matrix_file((dir / matrix_name).string()))
                     .first;
        const Eigen::MatrixXd& m = it->second;

        const auto row_begin = static_cast<Eigen::Index>(std::stoull(fields[4]));
        const auto row_count = static_cast<Eigen::Index>(std::stoull(fields[5]));
        if (row_count < 1 || row_begin < 0 || row_begin + row_count > m.rows())
            throw DataError(manifest_path + ":" + std::to_string(line_no) +
                            ": row range out of bounds for '" + matrix_name + "'");
        for (Eigen::Index r = row_begin; r < row_begin + row_count; ++r) {
            InstanceVec inst;
            inst.values.assign(m.row(r).begin(), m.row(r).end());
            bag.instances.push_back(std::move(inst));
        }
        if (dataset.bags.empty()) dataset.feature_dim = static_cast<std::size_t>(m.cols());
        dataset.bags.push_back(std::move(bag));
    }
    dataset.validate();
    return dataset;
}

}  // namespace milvb
