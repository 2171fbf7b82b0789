// ANTW checkpoint container: magic, format version, then per-tensor records
// (u32 name length, name bytes, u32 rank, u32 dims, float32 data, all
// little-endian). Round-trips are byte-exact.
#pragma once

#include <string>

#include "antgan/models.hpp"
#include "antgan/tensor.hpp"

namespace antgan {

void save_tensors(const std::string& path, const NamedTensorList<float>& tensors);
NamedTensorList<float> load_tensors(const std::string& path);

struct ModelSet {
    ArchScale scale;
    bool use_shortcut = true;
    GeneratorParams<float> g_a2n, g_n2a;
    DiscriminatorParams<float> d_n, d_a;
};

// Serializes the four networks plus an __arch__ record carrying the scale
// and shortcut flag, so a checkpoint is self-describing.
void save_models(const std::string& path, const ModelSet& models);
ModelSet load_models(const std::string& path);

}  // namespace antgan
