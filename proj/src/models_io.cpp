#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "antgan/models.hpp"

namespace antgan {

namespace {
void write_gray_pgm(const std::string& path, std::int64_t H, std::int64_t W,
                    const std::vector<unsigned char>& bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "P5\n" << W << " " << H << "\n255\n";
    os.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path + "'");
}
}  // namespace

std::vector<std::string> dump_activations(const GeneratorParams<float>& g, const Tensor<float>& x,
                                          const std::string& layer, const std::string& out_dir) {
    const auto names = generator_layer_names(g.scale);
    if (std::find(names.begin(), names.end(), layer) == names.end())
        throw UsageError("dump_activations: unknown layer '" + layer + "'");

    ActivationTrace<float> trace;
    generator_forward<float>(nullptr, g, x, &trace);
    const Tensor<float>& act = trace.at(layer);
    const std::int64_t C = act.dim(1), H = act.dim(2), W = act.dim(3);

    std::vector<std::string> paths;
    std::vector<unsigned char> bytes(static_cast<std::size_t>(H * W));
    for (std::int64_t c = 0; c < C; ++c) {
        Eigen::Map<const ArrayX<float>> plane(act.data() + c * H * W, H * W);
        const float lo = plane.minCoeff(), hi = plane.maxCoeff();
        const float span = hi - lo;
        for (std::int64_t i = 0; i < H * W; ++i) {
            const double v = span > 1e-12f ? (plane[i] - lo) / span : 0.5;
            bytes[static_cast<std::size_t>(i)] =
                static_cast<unsigned char>(std::clamp(static_cast<int>(std::floor(v * 255.0 + 0.5)), 0, 255));
        }
        char name[64];
        std::snprintf(name, sizeof(name), "%s_c%03lld.pgm", layer.c_str(),
                      static_cast<long long>(c));
        const std::string path = out_dir + "/" + name;
        write_gray_pgm(path, H, W, bytes);
        paths.push_back(path);
    }
    return paths;
}

}  // namespace antgan
