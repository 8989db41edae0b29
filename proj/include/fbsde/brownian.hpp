#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fbsde/rng.hpp"
#include "fbsde/time_grid.hpp"

namespace fbsde {

/// Seeded batch of Brownian increments, layout [path][step][dim].
/// Each increment is N(0, dt). The implied path starts at W = 0 on the
/// grid's first node. Identical (seed, M, n_steps, d) give bit-identical
/// content regardless of how generation is parallelized.
struct BrownianBatch {
    TimeGrid grid;
    int dim = 0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    std::vector<double> increments;

    std::span<const double> step(int path, int k) const {
        const std::size_t off =
            (static_cast<std::size_t>(path) * static_cast<std::size_t>(grid.n_steps) + static_cast<std::size_t>(k)) *
            static_cast<std::size_t>(dim);
        return {increments.data() + off, static_cast<std::size_t>(dim)};
    }
};

/// Fills one step's increments without materializing a batch; used by the
/// streaming integrators. Output is sqrt(dt)-scaled standard normals.
inline void brownian_step(std::uint64_t seed, std::uint64_t path, std::uint64_t step_index, double sqrt_dt,
                          std::span<double> out) {
    standard_normal_block(seed, path, step_index, out.data(), static_cast<int>(out.size()));
    for (double& v : out) v *= sqrt_dt;
}

/// Copies paths [first, first + count) into a standalone batch.
inline BrownianBatch slice_brownian(const BrownianBatch& batch, int first, int count) {
    if (first < 0 || count < 1 || first + count > batch.n_paths)
        throw std::invalid_argument("slice_brownian: slice out of range");
    BrownianBatch out;
    out.grid = batch.grid;
    out.dim = batch.dim;
    out.n_paths = count;
    out.seed = batch.seed;
    const std::size_t stride = static_cast<std::size_t>(batch.grid.n_steps) * static_cast<std::size_t>(batch.dim);
    out.increments.assign(batch.increments.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(first)),
                          batch.increments.begin() + static_cast<std::ptrdiff_t>(stride * static_cast<std::size_t>(first + count)));
    return out;
}

inline BrownianBatch sample_brownian(const TimeGrid& grid, int dim, int n_paths, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("sample_brownian: dim must be positive");
    if (n_paths < 1) throw std::invalid_argument("sample_brownian: n_paths must be positive");
    BrownianBatch batch;
    batch.grid = grid;
    batch.dim = dim;
    batch.n_paths = n_paths;
    batch.seed = seed;
    batch.increments.resize(static_cast<std::size_t>(n_paths) * static_cast<std::size_t>(grid.n_steps) *
                            static_cast<std::size_t>(dim));
    const double sqrt_dt = std::sqrt(grid.dt);
    for (int m = 0; m < n_paths; ++m) {
        for (int k = 0; k < grid.n_steps; ++k) {
            const std::size_t off =
                (static_cast<std::size_t>(m) * static_cast<std::size_t>(grid.n_steps) + static_cast<std::size_t>(k)) *
                static_cast<std::size_t>(dim);
            brownian_step(seed, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(k), sqrt_dt,
                          {batch.increments.data() + off, static_cast<std::size_t>(dim)});
        }
    }
    return batch;
}

}  // namespace fbsde
