// Generator and discriminator architectures.
//
// Generator: c7s1 encoder conv, two stride-2 downsampling convs, a stack of
// residual blocks at 1/4 resolution, two stride-2 transposed convs back to
// full size, and a c7s1 output conv with tanh. An optional global shortcut
// adds the input image to the output conv's pre-activation, so the identity
// mapping is one zeroed layer away.
//
// Discriminator: five 4x4 convs (strides 2,2,2,1,1) emitting a patch map of
// real/fake scores. The two stride-1 layers keep their spatial size via
// asymmetric zero padding (1 before, 2 after), which is what makes a 240px
// input land on a 30x30 patch map.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "antgan/conv.hpp"
#include "antgan/norm.hpp"
#include "antgan/rng.hpp"
#include "antgan/tensor.hpp"

namespace antgan {

struct ArchScale {
    std::int64_t image_size = 64;
    std::int64_t base_channels = 16;
    std::int64_t n_res_blocks = 3;

    void validate() const {
        if (image_size < 8 || image_size % 4 != 0)
            throw UsageError("ArchScale: image_size must be >= 8 and divisible by 4");
        if (base_channels < 4) throw UsageError("ArchScale: base_channels must be >= 4");
        if (n_res_blocks < 1) throw UsageError("ArchScale: n_res_blocks must be >= 1");
    }

    static ArchScale full() { return {240, 64, 9}; }

    bool operator==(const ArchScale&) const = default;
};

template <typename S>
struct ConvParams {
    Tensor<S> weight, bias;
};

template <typename S>
struct AffineParams {
    Tensor<S> scale, shift;
};

template <typename S>
struct ResBlockParams {
    ConvParams<S> conv1, conv2;
    AffineParams<S> norm1, norm2;
};

template <typename S>
using NamedTensorList = std::vector<std::pair<std::string, Tensor<S>>>;

namespace detail {

template <typename S>
ConvParams<S> init_conv(Shape weight_shape, std::int64_t cout, Rng& rng) {
    ConvParams<S> p;
    p.weight = Tensor<S>::zeros(std::move(weight_shape), true);
    for (std::int64_t i = 0; i < p.weight.size(); ++i)
        p.weight.data()[i] = static_cast<S>(0.02 * rng.normal());
    p.bias = Tensor<S>::zeros({cout}, true);
    return p;
}

template <typename S>
AffineParams<S> init_affine(std::int64_t c) {
    AffineParams<S> p;
    p.scale = Tensor<S>::full({c}, S(1));
    p.scale.set_requires_grad(true);
    p.shift = Tensor<S>::zeros({c}, true);
    return p;
}

template <typename S>
void push_conv(NamedTensorList<S>& out, const std::string& name, const ConvParams<S>& c) {
    out.emplace_back(name + ".weight", c.weight);
    out.emplace_back(name + ".bias", c.bias);
}

template <typename S>
void push_affine(NamedTensorList<S>& out, const std::string& name, const AffineParams<S>& a) {
    out.emplace_back(name + ".scale", a.scale);
    out.emplace_back(name + ".shift", a.shift);
}

}  // namespace detail

template <typename S>
struct GeneratorParams {
    ArchScale scale;
    bool use_shortcut = true;

    ConvParams<S> conv1, conv2, conv3;
    AffineParams<S> norm1, norm2, norm3;
    std::vector<ResBlockParams<S>> blocks;
    ConvParams<S> deconv1, deconv2;
    AffineParams<S> norm_d1, norm_d2;
    ConvParams<S> conv4;

    NamedTensorList<S> named_params() const {
        NamedTensorList<S> out;
        detail::push_conv(out, "conv1", conv1);
        detail::push_affine(out, "norm1", norm1);
        detail::push_conv(out, "conv2", conv2);
        detail::push_affine(out, "norm2", norm2);
        detail::push_conv(out, "conv3", conv3);
        detail::push_affine(out, "norm3", norm3);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const std::string p = "rb" + std::to_string(k);
            detail::push_conv(out, p + ".conv1", blocks[k].conv1);
            detail::push_affine(out, p + ".norm1", blocks[k].norm1);
            detail::push_conv(out, p + ".conv2", blocks[k].conv2);
            detail::push_affine(out, p + ".norm2", blocks[k].norm2);
        }
        detail::push_conv(out, "deconv1", deconv1);
        detail::push_affine(out, "norm_d1", norm_d1);
        detail::push_conv(out, "deconv2", deconv2);
        detail::push_affine(out, "norm_d2", norm_d2);
        detail::push_conv(out, "conv4", conv4);
        return out;
    }

    std::vector<Tensor<S>> params() const {
        std::vector<Tensor<S>> out;
        for (auto& [name, t] : named_params()) out.push_back(t);
        return out;
    }

    void set_requires_grad(bool on) const {
        for (auto& [name, t] : named_params()) t.set_requires_grad(on);
    }

    std::int64_t num_parameters() const {
        std::int64_t n = 0;
        for (auto& [name, t] : named_params()) n += t.size();
        return n;
    }
};

template <typename S>
struct DiscriminatorParams {
    ArchScale scale;
    ConvParams<S> conv1, conv2, conv3, conv4, conv5;
    AffineParams<S> norm2, norm3, norm4;

    NamedTensorList<S> named_params() const {
        NamedTensorList<S> out;
        detail::push_conv(out, "conv1", conv1);
        detail::push_conv(out, "conv2", conv2);
        detail::push_affine(out, "norm2", norm2);
        detail::push_conv(out, "conv3", conv3);
        detail::push_affine(out, "norm3", norm3);
        detail::push_conv(out, "conv4", conv4);
        detail::push_affine(out, "norm4", norm4);
        detail::push_conv(out, "conv5", conv5);
        return out;
    }

    std::vector<Tensor<S>> params() const {
        std::vector<Tensor<S>> out;
        for (auto& [name, t] : named_params()) out.push_back(t);
        return out;
    }

    void set_requires_grad(bool on) const {
        for (auto& [name, t] : named_params()) t.set_requires_grad(on);
    }
};

template <typename S>
GeneratorParams<S> build_generator(const ArchScale& scale, bool use_shortcut, std::uint64_t seed) {
    scale.validate();
    Rng rng(seed);
    const std::int64_t c = scale.base_channels;
    GeneratorParams<S> g;
    g.scale = scale;
    g.use_shortcut = use_shortcut;
    g.conv1 = detail::init_conv<S>({c, 1, 7, 7}, c, rng);
    g.norm1 = detail::init_affine<S>(c);
    g.conv2 = detail::init_conv<S>({2 * c, c, 3, 3}, 2 * c, rng);
    g.norm2 = detail::init_affine<S>(2 * c);
    g.conv3 = detail::init_conv<S>({4 * c, 2 * c, 3, 3}, 4 * c, rng);
    g.norm3 = detail::init_affine<S>(4 * c);
    for (std::int64_t k = 0; k < scale.n_res_blocks; ++k) {
        ResBlockParams<S> rb;
        rb.conv1 = detail::init_conv<S>({4 * c, 4 * c, 3, 3}, 4 * c, rng);
        rb.norm1 = detail::init_affine<S>(4 * c);
        rb.conv2 = detail::init_conv<S>({4 * c, 4 * c, 3, 3}, 4 * c, rng);
        rb.norm2 = detail::init_affine<S>(4 * c);
        g.blocks.push_back(std::move(rb));
    }
    // Transposed-conv weights are [Cin, Cout, kh, kw]. Channel counts scale
    // the printed full-size table by base_channels/64, so the first upsampling
    // stage keeps 4c channels and the second drops to c.
    g.deconv1 = detail::init_conv<S>({4 * c, 4 * c, 3, 3}, 4 * c, rng);
    g.norm_d1 = detail::init_affine<S>(4 * c);
    g.deconv2 = detail::init_conv<S>({4 * c, c, 3, 3}, c, rng);
    g.norm_d2 = detail::init_affine<S>(c);
    g.conv4 = detail::init_conv<S>({1, c, 7, 7}, 1, rng);
    return g;
}

template <typename S>
DiscriminatorParams<S> build_discriminator(const ArchScale& scale, std::uint64_t seed) {
    scale.validate();
    Rng rng(seed);
    const std::int64_t c = scale.base_channels;
    DiscriminatorParams<S> d;
    d.scale = scale;
    d.conv1 = detail::init_conv<S>({c, 1, 4, 4}, c, rng);
    d.conv2 = detail::init_conv<S>({2 * c, c, 4, 4}, 2 * c, rng);
    d.norm2 = detail::init_affine<S>(2 * c);
    d.conv3 = detail::init_conv<S>({4 * c, 2 * c, 4, 4}, 4 * c, rng);
    d.norm3 = detail::init_affine<S>(4 * c);
    d.conv4 = detail::init_conv<S>({4 * c, 4 * c, 4, 4}, 4 * c, rng);
    d.norm4 = detail::init_affine<S>(4 * c);
    d.conv5 = detail::init_conv<S>({1, 4 * c, 4, 4}, 1, rng);
    return d;
}

// Per-layer outputs captured during a forward pass, keyed by layer name
// (Conv1..Conv4, RB_k, Deconv1, Deconv2).
template <typename S>
using ActivationTrace = std::map<std::string, Tensor<S>>;

template <typename S>
Tensor<S> residual_block_forward(Tape<S>* tape, const ResBlockParams<S>& rb, const Tensor<S>& x) {
    Tensor<S> h = conv2d(tape, x, rb.conv1.weight, rb.conv1.bias, 1, 1);
    h = instance_norm(tape, h, rb.norm1.scale, rb.norm1.shift);
    h = relu(tape, h);
    h = conv2d(tape, h, rb.conv2.weight, rb.conv2.bias, 1, 1);
    h = instance_norm(tape, h, rb.norm2.scale, rb.norm2.shift);
    return add(tape, x, h);
}

template <typename S>
Tensor<S> generator_forward(Tape<S>* tape, const GeneratorParams<S>& g, const Tensor<S>& x,
                            ActivationTrace<S>* trace = nullptr) {
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != g.scale.image_size ||
        x.dim(3) != g.scale.image_size)
        throw DimensionError("generator_forward: expected N,1," +
                             std::to_string(g.scale.image_size) + "," +
                             std::to_string(g.scale.image_size) + " input, got " +
                             shape_str(x.shape()));
    Tensor<S> h = relu(tape, instance_norm(tape, conv2d(tape, x, g.conv1.weight, g.conv1.bias, 1, 3),
                                           g.norm1.scale, g.norm1.shift));
    if (trace) (*trace)["Conv1"] = h;
    h = relu(tape, instance_norm(tape, conv2d(tape, h, g.conv2.weight, g.conv2.bias, 2, 1),
                                 g.norm2.scale, g.norm2.shift));
    if (trace) (*trace)["Conv2"] = h;
    h = relu(tape, instance_norm(tape, conv2d(tape, h, g.conv3.weight, g.conv3.bias, 2, 1),
                                 g.norm3.scale, g.norm3.shift));
    if (trace) (*trace)["Conv3"] = h;
    for (std::size_t k = 0; k < g.blocks.size(); ++k) {
        h = residual_block_forward(tape, g.blocks[k], h);
        if (trace) (*trace)["RB_" + std::to_string(k)] = h;
    }
    h = relu(tape, instance_norm(tape,
                                 conv_transpose2d(tape, h, g.deconv1.weight, g.deconv1.bias, 2, 1, 1),
                                 g.norm_d1.scale, g.norm_d1.shift));
    if (trace) (*trace)["Deconv1"] = h;
    h = relu(tape, instance_norm(tape,
                                 conv_transpose2d(tape, h, g.deconv2.weight, g.deconv2.bias, 2, 1, 1),
                                 g.norm_d2.scale, g.norm_d2.shift));
    if (trace) (*trace)["Deconv2"] = h;
    Tensor<S> pre = conv2d(tape, h, g.conv4.weight, g.conv4.bias, 1, 3);
    if (g.use_shortcut) pre = add(tape, pre, x);
    Tensor<S> y = tanh(tape, pre);
    if (trace) (*trace)["Conv4"] = y;
    return y;
}

template <typename S>
Tensor<S> discriminator_forward(Tape<S>* tape, const DiscriminatorParams<S>& d, const Tensor<S>& x,
                                ActivationTrace<S>* trace = nullptr) {
    if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != d.scale.image_size ||
        x.dim(3) != d.scale.image_size)
        throw DimensionError("discriminator_forward: expected N,1," +
                             std::to_string(d.scale.image_size) + "," +
                             std::to_string(d.scale.image_size) + " input, got " +
                             shape_str(x.shape()));
    const S slope = S(0.2);
    Tensor<S> h = leaky_relu(tape, conv2d(tape, x, d.conv1.weight, d.conv1.bias, 2, 1), slope);
    if (trace) (*trace)["Conv1"] = h;
    h = leaky_relu(tape, instance_norm(tape, conv2d(tape, h, d.conv2.weight, d.conv2.bias, 2, 1),
                                       d.norm2.scale, d.norm2.shift),
                   slope);
    if (trace) (*trace)["Conv2"] = h;
    h = leaky_relu(tape, instance_norm(tape, conv2d(tape, h, d.conv3.weight, d.conv3.bias, 2, 1),
                                       d.norm3.scale, d.norm3.shift),
                   slope);
    if (trace) (*trace)["Conv3"] = h;
    // Stride-1 stages: asymmetric same-padding keeps the patch grid size.
    h = zero_pad2d(tape, h, 1, 2, 1, 2);
    h = leaky_relu(tape, instance_norm(tape, conv2d(tape, h, d.conv4.weight, d.conv4.bias, 1, 0),
                                       d.norm4.scale, d.norm4.shift),
                   slope);
    if (trace) (*trace)["Conv4"] = h;
    h = zero_pad2d(tape, h, 1, 2, 1, 2);
    h = conv2d(tape, h, d.conv5.weight, d.conv5.bias, 1, 0);
    if (trace) (*trace)["Conv5"] = h;
    return h;
}

// Valid layer names for activation dumps, in network order.
inline std::vector<std::string> generator_layer_names(const ArchScale& scale) {
    std::vector<std::string> names = {"Conv1", "Conv2", "Conv3"};
    for (std::int64_t k = 0; k < scale.n_res_blocks; ++k)
        names.push_back("RB_" + std::to_string(k));
    names.insert(names.end(), {"Deconv1", "Deconv2", "Conv4"});
    return names;
}

// Writes one min-max-normalized grayscale PGM per channel of the named
// layer's activation. Returns the written paths. Defined in models_io.cpp.
std::vector<std::string> dump_activations(const GeneratorParams<float>& g, const Tensor<float>& x,
                                          const std::string& layer, const std::string& out_dir);

}  // namespace antgan
