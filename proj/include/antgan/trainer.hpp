// Adversarial training loop: joint generator step, replay-buffered
// discriminator steps, CSV loss log, periodic checkpoints. Deterministic for
// a given config and seed.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "antgan/checkpoint.hpp"
#include "antgan/config.hpp"
#include "antgan/dataset.hpp"
#include "antgan/rng.hpp"
#include "antgan/tensor.hpp"

namespace antgan {

// Bounded history of generated images handed to the discriminators. Below
// capacity every image is stored and returned as-is; at capacity a fair coin
// decides between returning the new image and swapping it for a random
// stored one.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::int64_t capacity);

    Tensor<float> push(const Tensor<float>& img, Rng& rng);

    std::int64_t size() const { return static_cast<std::int64_t>(store_.size()); }
    std::int64_t capacity() const { return capacity_; }

private:
    std::int64_t capacity_;
    std::vector<Tensor<float>> store_;
};

struct TrainResult {
    std::string checkpoint_path;  // out_dir/model_final.antw
    std::string loss_log_path;    // out_dir/losses.csv
    std::int64_t iterations_run = 0;
};

// Stream tags for Rng::derive(seed, tag). The train/test split has its own
// fixed tag inside split_dataset so train and evaluate agree on it.
namespace seed_stream {
inline constexpr std::uint64_t g_a2n = 1;
inline constexpr std::uint64_t g_n2a = 2;
inline constexpr std::uint64_t d_n = 3;
inline constexpr std::uint64_t d_a = 4;
inline constexpr std::uint64_t loop = 6;
}  // namespace seed_stream

TrainResult train(const TrainConfig& cfg);

enum class Direction { a2n, n2a };

Direction direction_from_string(const std::string& s);

// Pure inference through one generator; no masks involved.
std::vector<Tensor<float>> translate(const ModelSet& models, Direction dir,
                                     const std::vector<Tensor<float>>& images);

}  // namespace antgan
