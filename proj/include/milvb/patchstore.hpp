#pragma once

#include <string>
#include <vector>

#include "milvb/bagcore.hpp"
#include "milvb/patchex.hpp"

namespace milvb {

// One extracted patch with its bag/video provenance.
struct PatchRecord {
    std::string bag_id;
    std::string video_id;
    std::optional<Label> label;
    std::string image_id;
    Patch patch;
};

// Binary patch store: patches.bin holds the rasters, patches.json the
// per-patch metadata. Records keep their extraction order.
void save_patch_store(const std::vector<PatchRecord>& records, const std::string& dir);
std::vector<PatchRecord> load_patch_store(const std::string& dir);

}  // namespace milvb
