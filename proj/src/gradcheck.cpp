#include "antgan/gradcheck.hpp"

#include <algorithm>

#include "antgan/conv.hpp"
#include "antgan/losses.hpp"
#include "antgan/models.hpp"
#include "antgan/norm.hpp"
#include "antgan/rng.hpp"

namespace antgan {

namespace {

using T = Tensor<double>;
using TapeD = Tape<double>;

T rand_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    T t = T::zeros(shape);
    for (std::int64_t i = 0; i < t.size(); ++i)
        t.data()[i] = lo + (hi - lo) * rng.uniform();
    return t;
}

// Values with |v| in [margin, 1]; keeps finite differences away from the
// kinks of relu/leaky_relu/abs.
T rand_kink_free(const Shape& shape, Rng& rng, double margin = 0.2) {
    T t = T::zeros(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) {
        const double mag = margin + (1.0 - margin) * rng.uniform();
        t.data()[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

// Weighted sum against a fixed random tensor, so every output element gets a
// distinct adjoint.
T weighted(TapeD* tape, const T& y, const T& w) { return sum(tape, mul(tape, y, w)); }

// Re-draws parameters at O(1) magnitudes. At the production init (std 0.02)
// the normalization planes are nearly constant, which makes 1/sqrt(var+eps)
// huge and blows up the higher derivatives that bound the central-difference
// truncation error; the check needs well-conditioned weights to say anything
// at 1e-6.
void condition_params(const NamedTensorList<double>& params, Rng& rng) {
    for (const auto& [name, t] : params) {
        const bool is_weight = name.ends_with(".weight");
        const bool is_scale = name.ends_with(".scale");
        for (std::int64_t i = 0; i < t.size(); ++i) {
            if (is_weight)
                t.data()[i] = 0.25 * rng.normal();
            else if (is_scale)
                t.data()[i] = 0.8 + 0.4 * rng.uniform();
            else  // bias / shift
                t.data()[i] = 0.1 * rng.normal();
        }
    }
}

}  // namespace

std::vector<GradCheckEntry> run_gradcheck_suite() {
    std::vector<GradCheckEntry> entries;
    Rng rng(0x6ecd5);

    auto check = [&entries](const std::string& name, double err) {
        entries.push_back({name, err});
    };

    const Shape sm{2, 3};
    {
        T b = rand_tensor(sm, rng), w = rand_tensor(sm, rng);
        double e = check_gradient([&](TapeD* t, const T& a) { return weighted(t, add(t, a, b), w); },
                                  rand_tensor(sm, rng));
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) { return weighted(t, add(t, b, v), w); },
                            rand_tensor(sm, rng)));
        check("add", e);
    }
    {
        T b = rand_tensor(sm, rng), w = rand_tensor(sm, rng);
        double e = check_gradient([&](TapeD* t, const T& a) { return weighted(t, sub(t, a, b), w); },
                                  rand_tensor(sm, rng));
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) { return weighted(t, sub(t, b, v), w); },
                            rand_tensor(sm, rng)));
        check("sub", e);
    }
    {
        T b = rand_tensor(sm, rng), w = rand_tensor(sm, rng);
        double e = check_gradient([&](TapeD* t, const T& a) { return weighted(t, mul(t, a, b), w); },
                                  rand_tensor(sm, rng));
        // same tensor in both slots (squaring path)
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) { return weighted(t, mul(t, v, v), w); },
                            rand_tensor(sm, rng)));
        check("mul", e);
    }
    {
        T w = rand_tensor(sm, rng);
        check("add_scalar",
              check_gradient([&](TapeD* t, const T& v) { return weighted(t, add_scalar(t, v, 0.7), w); },
                             rand_tensor(sm, rng)));
        check("mul_scalar",
              check_gradient([&](TapeD* t, const T& v) { return weighted(t, mul_scalar(t, v, -1.3), w); },
                             rand_tensor(sm, rng)));
    }
    {
        T w = rand_tensor(sm, rng);
        check("relu", check_gradient([&](TapeD* t, const T& v) { return weighted(t, relu(t, v), w); },
                                     rand_kink_free(sm, rng)));
        check("leaky_relu",
              check_gradient([&](TapeD* t, const T& v) { return weighted(t, leaky_relu(t, v), w); },
                             rand_kink_free(sm, rng)));
        check("abs", check_gradient([&](TapeD* t, const T& v) { return weighted(t, abs(t, v), w); },
                                    rand_kink_free(sm, rng)));
        check("tanh", check_gradient([&](TapeD* t, const T& v) { return weighted(t, tanh(t, v), w); },
                                     rand_tensor(sm, rng, -2.0, 2.0)));
        check("softplus",
              check_gradient([&](TapeD* t, const T& v) { return weighted(t, softplus(t, v), w); },
                             rand_tensor(sm, rng, -3.0, 3.0)));
    }
    {
        check("sum", check_gradient([&](TapeD* t, const T& v) { return sum(t, v); },
                                    rand_tensor({7}, rng)));
        check("mean", check_gradient([&](TapeD* t, const T& v) { return mean(t, v); },
                                     rand_tensor({7}, rng)));
    }
    {
        const Shape xs{1, 2, 4, 5};
        T x = rand_tensor(xs, rng);
        T scale = rand_tensor({2}, rng, 0.5, 1.5), shift = rand_tensor({2}, rng);
        T w = rand_tensor(xs, rng);
        double e = check_gradient(
            [&](TapeD* t, const T& v) { return weighted(t, instance_norm(t, v, scale, shift), w); }, x);
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, instance_norm(t, x, v, shift), w);
                            },
                            scale));
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, instance_norm(t, x, scale, v), w);
                            },
                            shift));
        check("instance_norm", e);
    }

    auto conv_case = [&](const std::string& name, std::int64_t cin, std::int64_t cout,
                         std::int64_t hw, std::int64_t k, std::int64_t stride, std::int64_t pad) {
        T x = rand_tensor({1, cin, hw, hw}, rng);
        T kw = rand_tensor({cout, cin, k, k}, rng, -0.5, 0.5);
        T b = rand_tensor({cout}, rng, -0.2, 0.2);
        const std::int64_t ho = (hw + 2 * pad - k) / stride + 1;
        T w = rand_tensor({1, cout, ho, ho}, rng);
        double e = check_gradient(
            [&](TapeD* t, const T& v) { return weighted(t, conv2d(t, v, kw, b, stride, pad), w); }, x);
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, conv2d(t, x, v, b, stride, pad), w);
                            },
                            kw));
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, conv2d(t, x, kw, v, stride, pad), w);
                            },
                            b));
        check(name, e);
    };
    conv_case("conv2d_s1", 2, 3, 5, 3, 1, 1);
    conv_case("conv2d_s2", 2, 3, 6, 3, 2, 1);
    conv_case("conv2d_k7", 1, 2, 8, 7, 1, 3);

    auto deconv_case = [&](const std::string& name, std::int64_t cin, std::int64_t cout,
                           std::int64_t hw, std::int64_t k, std::int64_t stride, std::int64_t pad,
                           std::int64_t opad) {
        T x = rand_tensor({1, cin, hw, hw}, rng);
        T kw = rand_tensor({cin, cout, k, k}, rng, -0.5, 0.5);
        T b = rand_tensor({cout}, rng, -0.2, 0.2);
        const std::int64_t ho = (hw - 1) * stride - 2 * pad + k + opad;
        T w = rand_tensor({1, cout, ho, ho}, rng);
        double e = check_gradient(
            [&](TapeD* t, const T& v) {
                return weighted(t, conv_transpose2d(t, v, kw, b, stride, pad, opad), w);
            },
            x);
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, conv_transpose2d(t, x, v, b, stride, pad, opad), w);
                            },
                            kw));
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                return weighted(t, conv_transpose2d(t, x, kw, v, stride, pad, opad), w);
                            },
                            b));
        check(name, e);
    };
    deconv_case("conv_transpose2d_s1", 2, 3, 5, 3, 1, 1, 0);
    deconv_case("conv_transpose2d_s2", 2, 3, 4, 3, 2, 1, 1);

    {
        T x = rand_tensor({1, 2, 3, 3}, rng);
        T w = rand_tensor({1, 2, 6, 6}, rng);
        check("zero_pad2d",
              check_gradient(
                  [&](TapeD* t, const T& v) { return weighted(t, zero_pad2d(t, v, 1, 2, 1, 2), w); },
                  x));
    }
    {
        const Shape xs{1, 1, 4, 4};
        T x = rand_tensor(xs, rng);
        T mask = T::zeros(xs);
        for (std::int64_t i = 0; i < mask.size(); ++i)
            mask.data()[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
        check("loss_am", check_gradient(
                             [&](TapeD* t, const T& v) { return loss_am(t, v, x, mask); },
                             rand_tensor(xs, rng)));
    }

    // Composed networks at a tiny desk scale; gradient of the mean output
    // with respect to the input and one weight tensor apiece.
    {
        const ArchScale tiny{8, 4, 1};
        for (bool shortcut : {false, true}) {
            GeneratorParams<double> g = build_generator<double>(tiny, shortcut, 0x9e11);
            condition_params(g.named_params(), rng);
            T x = rand_tensor({1, 1, 8, 8}, rng, -0.9, 0.9);
            double e = check_gradient(
                [&](TapeD* t, const T& v) { return mean(t, generator_forward(t, g, v)); }, x, 2e-5);
            GeneratorParams<double> g2 = g;
            e = std::max(e, check_gradient(
                                [&](TapeD* t, const T& v) {
                                    GeneratorParams<double> gg = g2;
                                    gg.conv1.weight = v;
                                    return mean(t, generator_forward(t, gg, x));
                                },
                                g.conv1.weight, 2e-5));
            check(shortcut ? "generator_shortcut" : "generator", e);
        }
    }
    {
        // 16px floor: three stride-2 stages must leave planes of >= 2 pixels
        // for the instance norms.
        const ArchScale tiny{16, 4, 1};
        DiscriminatorParams<double> d = build_discriminator<double>(tiny, 0xd15c);
        condition_params(d.named_params(), rng);
        T x = rand_tensor({1, 1, 16, 16}, rng, -0.9, 0.9);
        double e = check_gradient(
            [&](TapeD* t, const T& v) { return mean(t, discriminator_forward(t, d, v)); }, x, 2e-5);
        e = std::max(e, check_gradient(
                            [&](TapeD* t, const T& v) {
                                DiscriminatorParams<double> dd = d;
                                dd.conv3.weight = v;
                                return mean(t, discriminator_forward(t, dd, x));
                            },
                            d.conv3.weight, 2e-5));
        check("discriminator", e);
    }

    return entries;
}

}  // namespace antgan
