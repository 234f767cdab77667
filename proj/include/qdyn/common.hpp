#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace qdyn {

// Base class for everything this library throws.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

// Domain violation: evaluating a walled potential outside its box, or a
// trajectory leaving the grid.
struct domain_error : error {
    using error::error;
};

// Integration failure: energy drift above bound, NaN state, step rejection.
struct integrator_error : error {
    using error::error;
};

// Jacobi field vanished (conjugate point) where an amplitude was requested,
// or a boundary-value family degenerated into a continuum.
struct caustic_error : error {
    using error::error;
};

struct grid_mismatch_error : error {
    using error::error;
};

// Momentum content reached the grid Nyquist limit during spectral propagation.
struct aliasing_error : error {
    using error::error;
};

// All-zero wavefunction handed to a polar decomposition.
struct empty_state_error : error {
    using error::error;
};

// Soliton attachment requested where no branch carries amplitude.
struct dead_zone_error : error {
    using error::error;
};

// Carrier branch amplitude fell below the node floor at the bump position.
struct carrier_node_error : error {
    using error::error;
};

constexpr double pi = 3.14159265358979323846;

// splitmix64: used to derive independent per-member RNG streams from one
// master seed so ensembles are reproducible regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

// FNV-1a over a canonical string; used for config hashes in reports.
inline std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Worker count comes from the environment only (QDYN_WORKERS); default 1.
inline int worker_count() {
    if (const char* env = std::getenv("QDYN_WORKERS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// Index-partitioned parallel loop. Each index writes only its own slot, so
// results are bit-identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    int workers = worker_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace qdyn
