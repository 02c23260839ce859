#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace milvb {

// Provenance stamp written next to every CLI artifact. Downstream commands
// verify that the artifacts they consume were produced by mutually consistent
// configurations before running.
struct Stamp {
    std::string command;
    std::string version = "1";
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    // Upstream artifact name -> (digest, config) captured when this artifact
    // was produced.
    std::map<std::string, std::pair<std::string, std::map<std::string, std::string>>> inputs;

    std::string config_digest() const;
};

std::string config_digest(const std::map<std::string, std::string>& config);

void write_stamp(const Stamp& stamp, const std::string& dir);
Stamp read_stamp(const std::string& dir);

// Throws ValidationError with a key-level diff summary when the recorded
// upstream config does not match the actual upstream stamp.
void verify_input_stamp(const Stamp& consumer_recorded_at, const std::string& input_name,
                        const Stamp& actual_upstream);

}  // namespace milvb
