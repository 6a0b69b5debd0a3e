#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vistanet {

// Deterministic, platform-independent random stream (xoshiro256++ seeded via
// splitmix64). std:: distributions are implementation-defined, so uniform and
// normal draws are implemented here to keep runs reproducible across builds.
//
// Independent substreams are derived by name: Rng(42).substream("shuffle/3")
// yields the same sequence in every process that asks for that name.
class Rng {
public:
    explicit Rng(uint64_t seed);

    Rng substream(std::string_view name) const;

    uint64_t next_u64();

    // Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer on [lo, hi] inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi);
    // Standard normal via Box-Muller (no cached spare, so streams stay
    // reproducible under substream splitting).
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i)));
            std::swap(v[i], v[j]);
        }
    }

private:
    uint64_t state_[4];
    uint64_t seed_;
};

// Stable seed derivation for named substreams; substream(name) is
// Rng(derive_seed(seed, name)).
uint64_t derive_seed(uint64_t seed, std::string_view name);

// Process-global seed for every stream the training stack draws from
// (dataset split, shuffling, parameter init, synthetic data). Streams are
// derived by name so adding a new consumer never perturbs existing ones.
void set_seed(uint64_t seed);
uint64_t global_seed();
Rng named_stream(std::string_view name);

}  // namespace vistanet
