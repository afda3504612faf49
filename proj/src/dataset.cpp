#include "igr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace igr {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxParseError("cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off,
                   const std::string& path) {
    if (off + 4 > buf.size())
        throw IdxParseError(path + ": truncated header at offset " +
                            std::to_string(off));
    return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
           (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    const std::uint32_t img_magic = be32(img, 0, images_path);
    if (img_magic != kImageMagic)
        throw IdxParseError(images_path + ": magic mismatch at offset 0, expected " +
                            std::to_string(kImageMagic) + ", got " +
                            std::to_string(img_magic));
    const std::uint32_t lab_magic = be32(lab, 0, labels_path);
    if (lab_magic != kLabelMagic)
        throw IdxParseError(labels_path + ": magic mismatch at offset 0, expected " +
                            std::to_string(kLabelMagic) + ", got " +
                            std::to_string(lab_magic));

    const std::uint32_t n = be32(img, 4, images_path);
    const std::uint32_t rows = be32(img, 8, images_path);
    const std::uint32_t cols = be32(img, 12, images_path);
    const std::uint32_t n_lab = be32(lab, 4, labels_path);
    if (n != n_lab)
        throw IdxParseError("image/label count mismatch: " + std::to_string(n) +
                            " images vs " + std::to_string(n_lab) + " labels");

    const std::size_t dim = std::size_t(rows) * cols;
    const std::size_t expect_img = 16 + std::size_t(n) * dim;
    if (img.size() != expect_img)
        throw IdxParseError(images_path + ": expected " + std::to_string(expect_img) +
                            " bytes, got " + std::to_string(img.size()));
    const std::size_t expect_lab = 8 + n;
    if (lab.size() != expect_lab)
        throw IdxParseError(labels_path + ": expected " + std::to_string(expect_lab) +
                            " bytes, got " + std::to_string(lab.size()));

    Dataset out;
    out.count = n;
    out.dim = dim;
    out.provenance = "mnist";
    out.images.resize(std::size_t(n) * dim);
    for (std::size_t i = 0; i < out.images.size(); ++i)
        out.images[i] = img[16 + i] / 255.0;
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (lab[8 + i] > 9)
            throw IdxParseError(labels_path + ": label out of range at index " +
                                std::to_string(i));
        out.labels[i] = lab[8 + i];
    }
    out.checksum = fnv1a(img.data(), img.size());
    out.checksum = fnv1a(lab.data(), lab.size(), out.checksum);
    return out;
}

Dataset make_synthetic(std::size_t n, std::uint64_t seed, double mean_scale) {
    if (n < 10) throw std::invalid_argument("make_synthetic: n must be >= 10");
    constexpr std::size_t kDim = 784;
    constexpr int kClasses = 10;

    // Box-Muller on explicitly mapped uniforms; deterministic across
    // standard library implementations
    auto gauss = [](std::mt19937_64& g) {
        double u1 = 0.0;
        while (u1 == 0.0) u1 = static_cast<double>(g() >> 11) * 0x1.0p-53;
        const double u2 = static_cast<double>(g() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };

    // Class means are scaled random unit directions from a stream that does
    // not depend on `seed`, so datasets drawn with different seeds (a
    // train/test pair) come from the same distribution.
    std::mt19937_64 mean_rng(0x5e3d1ab1u);
    std::vector<std::vector<double>> means(kClasses, std::vector<double>(kDim));
    for (auto& mu : means) {
        double norm2 = 0.0;
        for (double& v : mu) {
            v = gauss(mean_rng);
            norm2 += v * v;
        }
        const double s = mean_scale / std::sqrt(norm2);
        for (double& v : mu) v *= s;
    }

    std::mt19937_64 rng(seed);

    Dataset out;
    out.count = n;
    out.dim = kDim;
    out.provenance = "synthetic";
    out.images.resize(n * kDim);
    out.labels.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const int cls = static_cast<int>(rng() % kClasses);
        out.labels[k] = cls;
        double* row = out.images.data() + k * kDim;
        for (std::size_t j = 0; j < kDim; ++j) row[j] = means[cls][j] + gauss(rng);
    }
    out.checksum = fnv1a(out.images.data(), out.images.size() * sizeof(double));
    out.checksum = fnv1a(out.labels.data(), out.labels.size() * sizeof(int),
                         out.checksum);
    return out;
}

Dataset subset(const Dataset& data, std::size_t k, std::uint64_t seed) {
    if (k > data.count) throw std::invalid_argument("subset: k exceeds dataset size");
    std::vector<std::size_t> idx(data.count);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = data.count - 1; i > 0; --i) {
        const std::size_t j = rng() % (i + 1);
        std::swap(idx[i], idx[j]);
    }
    Dataset out;
    out.count = k;
    out.dim = data.dim;
    out.provenance = data.provenance;
    out.images.resize(k * data.dim);
    out.labels.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::copy_n(data.images.data() + idx[i] * data.dim, data.dim,
                    out.images.data() + i * data.dim);
        out.labels[i] = data.labels[idx[i]];
    }
    out.checksum = fnv1a(out.images.data(), out.images.size() * sizeof(double));
    out.checksum = fnv1a(out.labels.data(), out.labels.size() * sizeof(int),
                         out.checksum);
    return out;
}

Batch as_batch(const Dataset& data) {
    Batch b;
    b.inputs = data.images;
    b.labels = data.labels;
    b.count = data.count;
    b.input_dim = data.dim;
    return b;
}

std::vector<Batch> batches(const Dataset& data, const BatchPolicy& policy, long epoch) {
    if (policy.kind == BatchPolicy::Kind::full) return {as_batch(data)};
    if (policy.size == 0 || policy.size > data.count)
        throw std::invalid_argument("batches: minibatch size must be in [1, n]");

    std::vector<std::size_t> idx(data.count);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(policy.shuffle_seed ^
                        (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(epoch + 1)));
    for (std::size_t i = data.count - 1; i > 0; --i) {
        const std::size_t j = rng() % (i + 1);
        std::swap(idx[i], idx[j]);
    }

    std::vector<Batch> out;
    for (std::size_t start = 0; start < data.count; start += policy.size) {
        const std::size_t len = std::min(policy.size, data.count - start);
        Batch b;
        b.count = len;
        b.input_dim = data.dim;
        b.inputs.resize(len * data.dim);
        b.labels.resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            std::copy_n(data.images.data() + idx[start + i] * data.dim, data.dim,
                        b.inputs.data() + i * data.dim);
            b.labels[i] = data.labels[idx[start + i]];
        }
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace igr
