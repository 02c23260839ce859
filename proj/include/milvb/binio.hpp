#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "milvb/errors.hpp"

namespace milvb {

// Little-endian primitives. All binary artifact formats (feature matrices,
// fitted models) are pinned to little-endian 64-bit fields regardless of host.

inline void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline std::uint64_t read_u64_le(std::istream& in, const std::string& what) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (!in) throw DataError("truncated read of " + what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    write_u64_le(out, v);
}

inline double read_f64_le(std::istream& in, const std::string& what) {
    const std::uint64_t v = read_u64_le(in, what);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u64_le(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const std::string& what) {
    const std::uint64_t n = read_u64_le(in, what);
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw DataError("truncated read of " + what);
    return s;
}

}  // namespace milvb
