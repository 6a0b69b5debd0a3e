#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vistanet {

// Base error for all hard failures raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Checkpoint errors are distinguished by type so callers can tell a stale
// file format from a damaged file from an incompatible model.
class CheckpointVersionError : public Error {
public:
    using Error::Error;
};

class CheckpointCorruptError : public Error {
public:
    using Error::Error;
};

class CheckpointShapeError : public Error {
public:
    using Error::Error;
};

inline void check(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// FNV-1a over raw bytes; used for bit-exact digests of parameter arrays.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(uint64_t v);

}  // namespace vistanet
