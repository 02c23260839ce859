#include "milvb/stamp.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "milvb/errors.hpp"
#include "milvb/rng.hpp"

namespace milvb {

std::string config_digest(const std::map<std::string, std::string>& config) {
    // std::map iteration is key-sorted, so this serialization is canonical.
    std::ostringstream canon;
    for (const auto& [key, value] : config) canon << key << "=" << value << ";";
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.str())));
    return hex;
}

std::string Stamp::config_digest() const { return milvb::config_digest(config); }

void write_stamp(const Stamp& stamp, const std::string& dir) {
    nlohmann::ordered_json j;
    j["command"] = stamp.command;
    j["version"] = stamp.version;
    j["seed"] = stamp.seed;
    j["config"] = stamp.config;
    j["config_digest"] = stamp.config_digest();
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [name, entry] : stamp.inputs)
        j["inputs"][name] = {{"digest", entry.first}, {"config", entry.second}};

    std::ofstream out(std::filesystem::path(dir) / "stamp.json");
    if (!out) throw DataError("cannot write stamp.json in '" + dir + "'");
    out << j.dump(2) << "\n";
}

Stamp read_stamp(const std::string& dir) {
    const auto path = std::filesystem::path(dir) / "stamp.json";
    std::ifstream in(path);
    if (!in) throw DataError("missing stamp.json in '" + dir + "' (not a pipeline artifact?)");
    const auto j = nlohmann::json::parse(in);

    Stamp stamp;
    stamp.command = j.at("command").get<std::string>();
    stamp.version = j.at("version").get<std::string>();
    stamp.seed = j.at("seed").get<std::uint64_t>();
    stamp.config = j.at("config").get<std::map<std::string, std::string>>();
    const auto stored_digest = j.at("config_digest").get<std::string>();
    if (stored_digest != stamp.config_digest())
        throw DataError("corrupt stamp in '" + dir + "': config digest mismatch");
    if (j.contains("inputs"))
        for (const auto& [name, entry] : j.at("inputs").items())
            stamp.inputs[name] = {entry.at("digest").get<std::string>(),
                                  entry.at("config").get<std::map<std::string, std::string>>()};
    return stamp;
}

void verify_input_stamp(const Stamp& consumer_recorded_at, const std::string& input_name,
                        const Stamp& actual_upstream) {
    const auto it = consumer_recorded_at.inputs.find(input_name);
    if (it == consumer_recorded_at.inputs.end())
        throw ValidationError("artifact does not record input '" + input_name + "'");
    if (it->second.first == actual_upstream.config_digest()) return;

    // Key-level diff summary for the refusal message.
    std::ostringstream diff;
    diff << "stale artifact: input '" << input_name << "' changed since this artifact was built\n";
    const auto& recorded = it->second.second;
    const auto& current = actual_upstream.config;
    for (const auto& [key, value] : current) {
        const auto old_it = recorded.find(key);
        if (old_it == recorded.end())
            diff << "  + " << key << " = " << value << "\n";
        else if (old_it->second != value)
            diff << "  ~ " << key << ": " << old_it->second << " -> " << value << "\n";
    }
    for (const auto& [key, value] : recorded)
        if (current.find(key) == current.end()) diff << "  - " << key << " = " << value << "\n";
    diff << "  digest " << it->second.first << " -> " << actual_upstream.config_digest();
    throw ValidationError(diff.str());
}

}  // namespace milvb
