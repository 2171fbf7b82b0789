// Little-endian binary stream helpers used by the dataset and checkpoint
// formats.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "antgan/common.hpp"

namespace antgan::binio {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u8(std::ostream& os, std::uint8_t v) {
    os.put(static_cast<char>(v));
}

inline void write_f32(std::ostream& os, float v) {
    write_u32(os, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("truncated file while reading " + what + " at byte offset " +
                          std::to_string(static_cast<long long>(is.tellg())));
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint8_t read_u8(std::istream& is, const std::string& what) {
    int c = is.get();
    if (c == EOF)
        throw FormatError("truncated file while reading " + what + " at byte offset " +
                          std::to_string(static_cast<long long>(is.tellg())));
    return static_cast<std::uint8_t>(c);
}

inline float read_f32(std::istream& is, const std::string& what) {
    return std::bit_cast<float>(read_u32(is, what));
}

// Bulk float32 transfer. On little-endian hosts this is a straight memcpy.
inline void write_f32_array(std::ostream& os, const float* data, std::int64_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(data), n * 4);
    } else {
        for (std::int64_t i = 0; i < n; ++i) write_f32(os, data[i]);
    }
}

inline void read_f32_array(std::istream& is, float* data, std::int64_t n, const std::string& what) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!is.read(reinterpret_cast<char*>(data), n * 4))
            throw FormatError("truncated file while reading " + what + " at byte offset " +
                              std::to_string(static_cast<long long>(is.tellg())));
    } else {
        for (std::int64_t i = 0; i < n; ++i) data[i] = read_f32(is, what);
    }
}

}  // namespace antgan::binio
