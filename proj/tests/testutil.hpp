#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "vistanet/rng.hpp"
#include "vistanet/types.hpp"

namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("vistanet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};

inline vistanet::BoundingBox random_box(vistanet::Rng& rng, double extent = 100.0) {
    const double x0 = rng.uniform(0.0, extent * 0.9);
    const double y0 = rng.uniform(0.0, extent * 0.9);
    return {x0, y0, x0 + rng.uniform(extent * 0.02, extent * 0.4),
            y0 + rng.uniform(extent * 0.02, extent * 0.4)};
}

// boxes on an integer grid so IoUs are either exactly 0 or clearly nonzero
inline vistanet::BoundingBox random_grid_box(vistanet::Rng& rng, int grid = 12) {
    const int x0 = static_cast<int>(rng.uniform_int(0, grid - 2));
    const int y0 = static_cast<int>(rng.uniform_int(0, grid - 2));
    const int w = static_cast<int>(rng.uniform_int(1, grid - 1 - x0));
    const int h = static_cast<int>(rng.uniform_int(1, grid - 1 - y0));
    return {static_cast<double>(x0), static_cast<double>(y0),
            static_cast<double>(x0 + w), static_cast<double>(y0 + h)};
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("testutil: cannot open " + p.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace testutil
