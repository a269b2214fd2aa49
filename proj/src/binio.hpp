// Little-endian binary IO helpers shared by the file-format code.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "labeldense/types.hpp"

namespace labeldense::binio {

inline void put_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_i32(std::ostream& os, int32_t v) { put_u32(os, static_cast<uint32_t>(v)); }

inline void put_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

inline void put_f64(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u32(os, static_cast<uint32_t>(bits));
    put_u32(os, static_cast<uint32_t>(bits >> 32));
}

inline uint32_t get_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw DataError("truncated file while reading " + what);
    return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
           static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

inline int32_t get_i32(std::istream& is, const std::string& what) {
    return static_cast<int32_t>(get_u32(is, what));
}

inline float get_f32(std::istream& is, const std::string& what) {
    const uint32_t bits = get_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline double get_f64(std::istream& is, const std::string& what) {
    const uint64_t lo = get_u32(is, what);
    const uint64_t hi = get_u32(is, what);
    const uint64_t bits = lo | (hi << 32);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void check_magic(std::istream& is, const char magic[4], const std::string& path) {
    char got[4];
    if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0)
        throw DataError("bad magic in " + path + " (expected " + std::string(magic, 4) + ")");
}

}  // namespace labeldense::binio
