#include "antgan/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "antgan/binio.hpp"

namespace antgan {

namespace {
constexpr char kMagic[4] = {'A', 'N', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_tensors(const std::string& path, const NamedTensorList<float>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kMagic, 4);
    binio::write_u32(os, kVersion);
    for (const auto& [name, t] : tensors) {
        binio::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        binio::write_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t i = 0; i < t.rank(); ++i)
            binio::write_u32(os, static_cast<std::uint32_t>(t.dim(i)));
        binio::write_f32_array(os, t.data(), t.size());
    }
    if (!os) throw IoError("write failed for '" + path + "'");
}

NamedTensorList<float> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    char magic[4];
    if (!is.read(magic, 4))
        throw FormatError("truncated file while reading magic at byte offset 0 in '" + path + "'");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad magic at byte offset 0 in '" + path + "' (expected ANTW)");
    const std::uint32_t version = binio::read_u32(is, "version");
    if (version != kVersion)
        throw FormatError("unsupported ANTW version " + std::to_string(version));

    NamedTensorList<float> out;
    while (is.peek() != EOF) {
        const std::uint32_t name_len = binio::read_u32(is, "name length");
        if (name_len > 4096) throw FormatError("implausible tensor name length");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw FormatError("truncated file while reading tensor name at byte offset " +
                              std::to_string(static_cast<long long>(is.tellg())));
        const std::uint32_t rank = binio::read_u32(is, "rank of " + name);
        if (rank > 8) throw FormatError("implausible rank for tensor " + name);
        Shape shape;
        for (std::uint32_t i = 0; i < rank; ++i)
            shape.push_back(binio::read_u32(is, "dims of " + name));
        Tensor<float> t = Tensor<float>::zeros(shape);
        binio::read_f32_array(is, t.data(), t.size(), "data of " + name);
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

namespace {

NamedTensorList<float> with_prefix(const std::string& prefix, const NamedTensorList<float>& list) {
    NamedTensorList<float> out;
    for (const auto& [name, t] : list) out.emplace_back(prefix + name, t);
    return out;
}

// Copies loaded values into freshly built parameter structures, enforcing
// exact name and shape agreement.
void fill_params(const std::string& prefix, const NamedTensorList<float>& want,
                 const std::map<std::string, Tensor<float>>& have, const std::string& path) {
    for (const auto& [name, t] : want) {
        const auto it = have.find(prefix + name);
        if (it == have.end())
            throw FormatError("checkpoint '" + path + "' is missing tensor " + prefix + name);
        if (it->second.shape() != t.shape())
            throw FormatError("checkpoint tensor " + prefix + name + " has shape " +
                              shape_str(it->second.shape()) + ", expected " + shape_str(t.shape()));
        t.array() = it->second.carray();
    }
}

}  // namespace

void save_models(const std::string& path, const ModelSet& m) {
    NamedTensorList<float> all;
    Tensor<float> arch = Tensor<float>::from(
        {4}, {static_cast<float>(m.scale.image_size), static_cast<float>(m.scale.base_channels),
              static_cast<float>(m.scale.n_res_blocks), m.use_shortcut ? 1.0f : 0.0f});
    all.emplace_back("__arch__", arch);
    for (auto& e : with_prefix("g_a2n.", m.g_a2n.named_params())) all.push_back(e);
    for (auto& e : with_prefix("g_n2a.", m.g_n2a.named_params())) all.push_back(e);
    for (auto& e : with_prefix("d_n.", m.d_n.named_params())) all.push_back(e);
    for (auto& e : with_prefix("d_a.", m.d_a.named_params())) all.push_back(e);
    save_tensors(path, all);
}

ModelSet load_models(const std::string& path) {
    const NamedTensorList<float> list = load_tensors(path);
    std::map<std::string, Tensor<float>> by_name;
    for (const auto& [name, t] : list) by_name[name] = t;

    const auto arch_it = by_name.find("__arch__");
    if (arch_it == by_name.end() || arch_it->second.size() != 4)
        throw FormatError("checkpoint '" + path + "' has no valid __arch__ record");
    const float* a = arch_it->second.data();

    ModelSet m;
    m.scale = {static_cast<std::int64_t>(a[0]), static_cast<std::int64_t>(a[1]),
               static_cast<std::int64_t>(a[2])};
    m.use_shortcut = a[3] != 0.0f;
    m.scale.validate();
    m.g_a2n = build_generator<float>(m.scale, m.use_shortcut, 0);
    m.g_n2a = build_generator<float>(m.scale, m.use_shortcut, 0);
    m.d_n = build_discriminator<float>(m.scale, 0);
    m.d_a = build_discriminator<float>(m.scale, 0);
    fill_params("g_a2n.", m.g_a2n.named_params(), by_name, path);
    fill_params("g_n2a.", m.g_n2a.named_params(), by_name, path);
    fill_params("d_n.", m.d_n.named_params(), by_name, path);
    fill_params("d_a.", m.d_a.named_params(), by_name, path);
    return m;
}

}  // namespace antgan
