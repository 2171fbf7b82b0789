#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "antgan/checkpoint.hpp"
#include "antgan/models.hpp"
#include "antgan/rng.hpp"

using namespace antgan;

namespace {

Tensor<float> rand_image(std::int64_t S, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<float> t = Tensor<float>::zeros({1, 1, S, S});
    for (std::int64_t i = 0; i < t.size(); ++i)
        t.data()[i] = static_cast<float>(lo + (hi - lo) * rng.uniform());
    return t;
}

void zero_conv(const ConvParams<float>& c) {
    c.weight.array() = 0.0f;
    c.bias.array() = 0.0f;
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("models");

TEST_CASE("full-scale generator reproduces the published layer shapes") {
    const ArchScale full = ArchScale::full();
    GeneratorParams<float> g = build_generator<float>(full, true, 1);
    Rng rng(2);
    Tensor<float> x = rand_image(240, rng);
    ActivationTrace<float> trace;
    Tensor<float> y = generator_forward<float>(nullptr, g, x, &trace);

    CHECK(trace.at("Conv1").shape() == Shape{1, 64, 240, 240});
    CHECK(trace.at("Conv2").shape() == Shape{1, 128, 120, 120});
    CHECK(trace.at("Conv3").shape() == Shape{1, 256, 60, 60});
    for (int k = 0; k < 9; ++k)
        CHECK(trace.at("RB_" + std::to_string(k)).shape() == Shape{1, 256, 60, 60});
    CHECK(trace.at("Deconv1").shape() == Shape{1, 256, 120, 120});
    CHECK(trace.at("Deconv2").shape() == Shape{1, 64, 240, 240});
    CHECK(y.shape() == Shape{1, 1, 240, 240});
}

TEST_CASE("full-scale discriminator lands on the 30x30 patch map") {
    const ArchScale full = ArchScale::full();
    DiscriminatorParams<float> d = build_discriminator<float>(full, 1);
    Rng rng(3);
    Tensor<float> x = rand_image(240, rng);
    CHECK(discriminator_forward<float>(nullptr, d, x).shape() == Shape{1, 1, 30, 30});
}

TEST_CASE("desk-scale shapes follow the same arithmetic") {
    const ArchScale desk{64, 16, 3};
    GeneratorParams<float> g = build_generator<float>(desk, true, 1);
    Rng rng(4);
    Tensor<float> x = rand_image(64, rng);
    ActivationTrace<float> trace;
    Tensor<float> y = generator_forward<float>(nullptr, g, x, &trace);
    CHECK(trace.at("Conv1").shape() == Shape{1, 16, 64, 64});
    CHECK(trace.at("Conv2").shape() == Shape{1, 32, 32, 32});
    CHECK(trace.at("Conv3").shape() == Shape{1, 64, 16, 16});  // 16x16 bottleneck
    CHECK(trace.at("Deconv1").shape() == Shape{1, 64, 32, 32});
    CHECK(trace.at("Deconv2").shape() == Shape{1, 16, 64, 64});
    CHECK(y.shape() == Shape{1, 1, 64, 64});

    // The stride-1 stages preserve size, so the patch grid is S/8.
    DiscriminatorParams<float> d = build_discriminator<float>(desk, 1);
    CHECK(discriminator_forward<float>(nullptr, d, x).shape() == Shape{1, 1, 8, 8});

    CHECK_THROWS_AS(discriminator_forward<float>(nullptr, d, rand_image(32, rng)), DimensionError);
    CHECK_THROWS_AS(generator_forward<float>(nullptr, g, rand_image(32, rng)), DimensionError);
}

TEST_CASE("zeroed output conv with shortcut gives exactly tanh(x)") {
    const ArchScale desk{32, 8, 2};
    GeneratorParams<float> g = build_generator<float>(desk, true, 5);
    zero_conv(g.conv4);
    Rng rng(6);
    Tensor<float> x = rand_image(32, rng);
    Tensor<float> y = generator_forward<float>(nullptr, g, x);
    for (std::int64_t i = 0; i < x.size(); ++i)
        CHECK(y.data()[i] == doctest::Approx(std::tanh(x.data()[i])).epsilon(1e-6));
}

TEST_CASE("tanh near-identity bound for moderate inputs") {
    // sup |tanh(v)-v| over |v|<=0.5 is ~0.0379, attained at the endpoints.
    double worst_half = 0.0, worst_045 = 0.0;
    for (int i = -500; i <= 500; ++i) {
        const double v = i / 1000.0;
        const double d = std::abs(std::tanh(v) - v);
        worst_half = std::max(worst_half, d);
        if (std::abs(v) <= 0.45) worst_045 = std::max(worst_045, d);
    }
    CHECK(worst_half < 0.04);
    CHECK(worst_045 < 0.03);
}

TEST_CASE("residual block: zeroed convs give identity, path decomposes") {
    const ArchScale desk{32, 8, 1};
    GeneratorParams<float> g = build_generator<float>(desk, false, 7);
    ResBlockParams<float>& rb = g.blocks[0];

    Rng rng(8);
    Tensor<float> x = Tensor<float>::zeros({1, 32, 8, 8});
    for (std::int64_t i = 0; i < x.size(); ++i)
        x.data()[i] = static_cast<float>(rng.uniform() * 2.0 - 1.0);

    SUBCASE("zeroed convs") {
        zero_conv(rb.conv1);
        zero_conv(rb.conv2);
        Tensor<float> y = residual_block_forward<float>(nullptr, rb, x);
        for (std::int64_t i = 0; i < x.size(); ++i) CHECK(y.data()[i] == x.data()[i]);
    }

    SUBCASE("output minus input equals the standalone conv path") {
        Tensor<float> y = residual_block_forward<float>(nullptr, rb, x);
        Tensor<float> h = conv2d<float>(nullptr, x, rb.conv1.weight, rb.conv1.bias, 1, 1);
        h = instance_norm<float>(nullptr, h, rb.norm1.scale, rb.norm1.shift);
        h = relu<float>(nullptr, h);
        h = conv2d<float>(nullptr, h, rb.conv2.weight, rb.conv2.bias, 1, 1);
        h = instance_norm<float>(nullptr, h, rb.norm2.scale, rb.norm2.shift);
        for (std::int64_t i = 0; i < x.size(); ++i)
            CHECK(y.data()[i] - x.data()[i] == doctest::Approx(h.data()[i]).epsilon(1e-5));
    }

    SUBCASE("channel mismatch is rejected") {
        Tensor<float> bad = Tensor<float>::zeros({1, 16, 8, 8});
        CHECK_THROWS_AS(residual_block_forward<float>(nullptr, rb, bad), DimensionError);
    }
}

TEST_CASE("builders are seed-deterministic") {
    const ArchScale desk{32, 8, 2};
    GeneratorParams<float> a = build_generator<float>(desk, true, 123);
    GeneratorParams<float> b = build_generator<float>(desk, true, 123);
    GeneratorParams<float> c = build_generator<float>(desk, true, 124);
    auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
    bool all_equal = true, any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        for (std::int64_t j = 0; j < pa[i].second.size(); ++j) {
            all_equal = all_equal && pa[i].second.data()[j] == pb[i].second.data()[j];
            any_diff = any_diff || pa[i].second.data()[j] != pc[i].second.data()[j];
        }
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("parameter count matches between the two full-scale generators") {
    const ArchScale full = ArchScale::full();
    GeneratorParams<float> a2n = build_generator<float>(full, true, 1);
    GeneratorParams<float> n2a = build_generator<float>(full, true, 2);
    CHECK(a2n.num_parameters() == n2a.num_parameters());
    CHECK(a2n.num_parameters() > 0);
}

TEST_CASE("invalid scales are rejected") {
    CHECK_THROWS_AS(build_generator<float>({30, 16, 3}, true, 1), UsageError);   // not /4
    CHECK_THROWS_AS(build_generator<float>({64, 2, 3}, true, 1), UsageError);    // channels
    CHECK_THROWS_AS(build_generator<float>({64, 16, 0}, true, 1), UsageError);   // blocks
}

TEST_CASE("checkpoint round-trips byte-exactly") {
    const ArchScale desk{16, 4, 1};
    ModelSet m;
    m.scale = desk;
    m.use_shortcut = true;
    m.g_a2n = build_generator<float>(desk, true, 11);
    m.g_n2a = build_generator<float>(desk, true, 12);
    m.d_n = build_discriminator<float>(desk, 13);
    m.d_a = build_discriminator<float>(desk, 14);

    const std::string dir = std::filesystem::temp_directory_path() / "antgan_ckpt_test";
    std::filesystem::create_directories(dir);
    const std::string p1 = dir + "/a.antw", p2 = dir + "/b.antw";
    save_models(p1, m);
    ModelSet loaded = load_models(p1);
    CHECK(loaded.scale == desk);
    CHECK(loaded.use_shortcut);
    save_models(p2, loaded);
    CHECK(read_bytes(p1) == read_bytes(p2));

    // loaded values match the originals exactly
    auto pa = m.g_a2n.named_params(), pb = loaded.g_a2n.named_params();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::int64_t j = 0; j < pa[i].second.size(); ++j)
            CHECK(pa[i].second.data()[j] == pb[i].second.data()[j]);

    CHECK_THROWS_AS(load_models(dir + "/missing.antw"), IoError);
}

TEST_CASE("dump_activations writes one image per channel, deterministically") {
    const ArchScale desk{16, 4, 1};
    GeneratorParams<float> g = build_generator<float>(desk, true, 21);
    Rng rng(22);
    Tensor<float> x = rand_image(16, rng);

    const std::string dir = std::filesystem::temp_directory_path() / "antgan_acts_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir + "/a");
    std::filesystem::create_directories(dir + "/b");
    const auto paths_a = dump_activations(g, x, "Conv1", dir + "/a");
    const auto paths_b = dump_activations(g, x, "Conv1", dir + "/b");
    CHECK(paths_a.size() == 4);  // base_channels files
    for (std::size_t i = 0; i < paths_a.size(); ++i)
        CHECK(read_bytes(paths_a[i]) == read_bytes(paths_b[i]));

    SUBCASE("constant input with zero weights gives uniform gray") {
        zero_conv(g.conv1);
        const auto paths = dump_activations(g, Tensor<float>::full({1, 1, 16, 16}, 0.3f), "Conv1",
                                            dir + "/a");
        const std::string bytes = read_bytes(paths[0]);
        const std::string pixels = bytes.substr(bytes.rfind('\n') + 1);
        REQUIRE(pixels.size() == 256);
        for (char c : pixels) CHECK(static_cast<unsigned char>(c) == 128);
    }

    CHECK_THROWS_AS(dump_activations(g, x, "Conv9", dir + "/a"), UsageError);
}

TEST_SUITE_END();
