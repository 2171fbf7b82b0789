// Synthetic lesion-phantom dataset: generation, the ANTD container format,
// train/test splitting and PGM image export.
//
// Storage convention: files hold images in [0,1]; the loader maps them to the
// model domain [-1,1] via 2v-1. Masks are binary and exist for training
// only — every read goes through SliceSample::mask(), which counts accesses
// so tests can prove the inference paths never touch them.
#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "antgan/rng.hpp"
#include "antgan/tensor.hpp"

namespace antgan {

enum class Label : std::uint8_t { normal = 0, abnormal = 1 };

// Global count of anomaly-mask reads; the mask-hygiene tests reset and
// inspect it around inference-only code paths.
std::uint64_t mask_reads();
void reset_mask_reads();
namespace detail {
void count_mask_read();
}

struct SliceSample {
    SliceSample() = default;
    SliceSample(Tensor<float> image, Tensor<float> mask, Label label)
        : image(std::move(image)), label(label), mask_(std::move(mask)) {}

    Tensor<float> image;  // [1,S,S] in [-1,1]
    Label label = Label::normal;

    const Tensor<float>& mask() const {  // [1,S,S] binary
        detail::count_mask_read();
        return mask_;
    }

private:
    Tensor<float> mask_;
};

struct Dataset {
    std::int64_t image_size = 0;
    std::vector<SliceSample> normals;
    std::vector<SliceSample> abnormals;
};

// Pointers into a Dataset; 80% train / 20% test per pool.
struct SplitPools {
    std::vector<const SliceSample*> train_normal, train_abnormal;
    std::vector<const SliceSample*> test_normal, test_abnormal;
};

// Writes an ANTD file of n_normal tissue phantoms and n_abnormal phantoms
// with 1-3 bright elliptical lesions (mask = their union). Deterministic in
// the seed.
void make_phantoms(std::uint64_t seed, std::int64_t n_normal, std::int64_t n_abnormal,
                   std::int64_t size, const std::string& out_path);

Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

SplitPools split_dataset(const Dataset& ds, std::uint64_t split_seed);

// Uniform draw with replacement (batch size 1).
const SliceSample& sample(const std::vector<const SliceSample*>& pool, Rng& rng);

// Binary PGM (P5, maxval 255); v in [-1,1] maps to round((v+1)*127.5).
void export_image(const Tensor<float>& t, const std::string& path);

// FNV-1a 64 over a file's bytes, for run manifests.
std::uint64_t file_checksum(const std::string& path);

}  // namespace antgan
