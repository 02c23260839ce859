#include "milvb/patchstore.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "milvb/binio.hpp"

namespace milvb {

void save_patch_store(const std::vector<PatchRecord>& records, const std::string& dir) {
    if (records.empty()) throw ValidationError("patch store would be empty");
    std::filesystem::create_directories(dir);
    const auto base = std::filesystem::path(dir);

    std::ofstream bin(base / "patches.bin", std::ios::binary);
    if (!bin) throw DataError("cannot open patches.bin for writing in '" + dir + "'");
    write_u64_le(bin, records.size());
    write_u64_le(bin, static_cast<std::uint64_t>(records.front().patch.size));
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const auto& rec : records) {
        if (rec.patch.size != records.front().patch.size)
            throw ValidationError("mixed patch sizes in one store");
        bin.write(reinterpret_cast<const char*>(rec.patch.pixels.data()),
                  static_cast<std::streamsize>(rec.patch.pixels.size()));
        index.push_back({{"bag_id", rec.bag_id},
                         {"video_id", rec.video_id},
                         {"label", rec.label ? std::string(1, label_to_char(*rec.label)) : "?"},
                         {"image_id", rec.image_id},
                         {"origin_row", rec.patch.origin_row},
                         {"origin_col", rec.patch.origin_col}});
    }
    if (!bin) throw DataError("write failed for patches.bin");

    std::ofstream meta(base / "patches.json");
    meta << index.dump(2) << "\n";
    if (!meta) throw DataError("write failed for patches.json");
}

std::vector<PatchRecord> load_patch_store(const std::string& dir) {
    const auto base = std::filesystem::path(dir);
    std::ifstream bin(base / "patches.bin", std::ios::binary);
    if (!bin) throw DataError("cannot open patch store '" + dir + "'");
    const auto count = read_u64_le(bin, "patch count");
    const auto size = static_cast<int>(read_u64_le(bin, "patch size"));

    std::ifstream meta_in(base / "patches.json");
    if (!meta_in) throw DataError("missing patches.json in '" + dir + "'");
    const auto index = nlohmann::json::parse(meta_in);
    if (index.size() != count) throw DataError("patch index size mismatch in '" + dir + "'");

    std::vector<PatchRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        PatchRecord rec;
        const auto& meta = index[i];
        rec.bag_id = meta.at("bag_id").get<std::string>();
        rec.video_id = meta.at("video_id").get<std::string>();
        const auto label = meta.at("label").get<std::string>();
        if (label != "?") rec.label = label_from_char(label.at(0));
        rec.image_id = meta.at("image_id").get<std::string>();
        rec.patch.size = size;
        rec.patch.origin_row = meta.at("origin_row").get<int>();
        rec.patch.origin_col = meta.at("origin_col").get<int>();
        rec.patch.pixels.resize(static_cast<std::size_t>(size) * size * 3);
        bin.read(reinterpret_cast<char*>(rec.patch.pixels.data()),
                 static_cast<std::streamsize>(rec.patch.pixels.size()));
        if (!bin) throw DataError("truncated patches.bin in '" + dir + "'");
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace milvb
