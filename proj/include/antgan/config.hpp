// Run configuration and manifest. JSON keys mirror the field names exactly;
// unknown keys are rejected.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "antgan/losses.hpp"
#include "antgan/models.hpp"

namespace antgan {

struct TrainConfig {
    ArchScale scale;
    LossWeights weights;
    bool enable_shortcut = true;
    bool enable_am = true;
    bool enable_ac = true;
    bool enable_nc = true;
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t iterations = 2000;
    std::int64_t buffer_capacity = 50;
    std::uint64_t seed = 1;
    std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
    std::string dataset_path;
    std::string out_dir = ".";

    void validate() const;
};

TrainConfig config_from_json_file(const std::string& path);
TrainConfig config_from_json_text(const std::string& text);
std::string config_to_json(const TrainConfig& cfg);

// Written to out_dir/manifest.json before training starts; enough to re-run
// the exact same job.
struct RunManifest {
    TrainConfig config;
    std::string tool_version;
    std::uint64_t dataset_checksum = 0;
    std::vector<std::string> outputs;

    std::string to_json() const;
};

void write_text_file(const std::string& path, const std::string& text);
void make_directories(const std::string& path);

}  // namespace antgan
