#pragma once

// MNIST IDX ingestion, a synthetic Gaussian-blob fallback, and deterministic
// subsetting / batching. Datasets are immutable after construction.

#include <cstdint>
#include <string>
#include <vector>

#include "igr/model.hpp"

namespace igr {

struct Dataset {
    std::vector<double> images;  // n x dim, values in [0, 1] for MNIST
    std::vector<int> labels;     // n, in [0, 10)
    std::size_t count = 0;
    std::size_t dim = 0;
    std::string provenance;  // "mnist" or "synthetic"
    std::uint64_t checksum = 0;
};

class IdxParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Big-endian IDX pair: image magic 0x00000803 (3 dims), label magic
// 0x00000801 (1 dim). Counts must match; pixels are normalized by /255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// 10-class isotropic Gaussian blobs in 784-d. Class means are fixed (the
// seed only drives sampling), so differently seeded datasets form valid
// train/test pairs. mean_scale controls class separation; the default keeps
// small samples linearly separable while leaving some overlap in larger ones.
Dataset make_synthetic(std::size_t n, std::uint64_t seed, double mean_scale = 4.0);

// First k examples after a seeded shuffle; stable for a given seed.
Dataset subset(const Dataset& data, std::size_t k, std::uint64_t seed);

struct BatchPolicy {
    enum class Kind { full, minibatch };
    Kind kind = Kind::full;
    std::size_t size = 0;
    std::uint64_t shuffle_seed = 0;
};

// One batch per epoch under the full policy; under minibatch, a
// seed-and-epoch-keyed permutation partitioned into size chunks (last chunk
// may be short).
std::vector<Batch> batches(const Dataset& data, const BatchPolicy& policy, long epoch);

// Whole dataset as a single batch.
Batch as_batch(const Dataset& data);

// FNV-1a over a byte range (used for dataset and output checksums).
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ull);

}  // namespace igr
