#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "antgan/metrics.hpp"

using namespace antgan;

namespace {
Tensor<float> constant(float v, const Shape& s = {1, 4, 4}) { return Tensor<float>::full(s, v); }
}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr closed forms") {
    Tensor<float> a = constant(0.25f);
    CHECK(psnr(a, a) == kPsnrCap);

    // uniform difference of 0.2: 10*log10(4/0.04) = 20 dB
    Tensor<float> b = constant(0.45f);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
    CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));

    // strictly decreasing in MSE
    Tensor<float> c = constant(0.65f);
    CHECK(psnr(a, c) < psnr(a, b));
}

TEST_CASE("masked psnr excludes lesion pixels") {
    Tensor<float> a = constant(0.0f);
    Tensor<float> b = constant(0.0f);
    Tensor<float> mask = Tensor<float>::zeros({1, 4, 4});
    mask.data()[5] = 1.0f;
    b.data()[5] = 0.9f;  // difference only inside the mask
    CHECK(psnr(a, b, &mask) == kPsnrCap);
    CHECK(psnr(a, b) < kPsnrCap);

    Tensor<float> all = Tensor<float>::full({1, 4, 4}, 1.0f);
    CHECK_THROWS_AS(psnr(a, b, &all), UsageError);
}

TEST_CASE("dice") {
    Tensor<float> p = Tensor<float>::from({4}, {1, 1, 0, 0});
    Tensor<float> t = Tensor<float>::from({4}, {1, 1, 0, 0});
    CHECK(dice(p, t) == 1.0);

    Tensor<float> disj = Tensor<float>::from({4}, {0, 0, 1, 1});
    CHECK(dice(p, disj) == 0.0);

    // |P| = |T| = 4 with overlap 2 -> 0.5
    Tensor<float> p2 = Tensor<float>::from({8}, {1, 1, 1, 1, 0, 0, 0, 0});
    Tensor<float> t2 = Tensor<float>::from({8}, {0, 0, 1, 1, 1, 1, 0, 0});
    CHECK(dice(p2, t2) == 0.5);

    CHECK(dice(Tensor<float>::zeros({4}), Tensor<float>::zeros({4})) == 1.0);

    Tensor<float> bad = Tensor<float>::from({4}, {0.5f, 0, 0, 0});
    CHECK_THROWS_AS(dice(bad, t), UsageError);
}

TEST_CASE("diff_map_segment thresholding") {
    Tensor<float> x = constant(0.0f);
    CHECK(diff_map_segment(x, x).carray().sum() == 0.0f);

    Tensor<float> y = constant(0.0f);
    y.data()[7] = 0.5f;
    Tensor<float> seg = diff_map_segment(x, y, 0.1);
    CHECK(seg.carray().sum() == 1.0f);
    CHECK(seg.data()[7] == 1.0f);

    // exactly at the threshold: excluded (strict inequality)
    Tensor<float> z = constant(0.0f);
    z.data()[3] = 0.1f;
    CHECK(diff_map_segment(x, z, 0.1).carray().sum() == 0.0f);
}

TEST_CASE("scoring the identity mapping") {
    const std::string p =
        (std::filesystem::temp_directory_path() / "antgan_metrics_test.antd").string();
    make_phantoms(17, 5, 5, 16, p);
    Dataset ds = load_dataset(p);
    SplitPools pools = split_dataset(ds, 1);

    std::vector<Tensor<float>> out_a, out_n;
    for (const auto* s : pools.test_abnormal) out_a.push_back(s->image.detach());
    for (const auto* s : pools.test_normal) out_n.push_back(s->image.detach());
    EvalReport r = score_outputs(pools.test_abnormal, out_a, pools.test_normal, out_n);
    CHECK(r.identity_psnr_normal == kPsnrCap);
    CHECK(r.masked_psnr_abnormal == kPsnrCap);
    CHECK(r.dice_threshold_seg == 0.0);  // empty prediction vs nonempty truth
}

TEST_CASE("mask hygiene: generation path reads no masks") {
    const std::string p =
        (std::filesystem::temp_directory_path() / "antgan_metrics_hyg.antd").string();
    make_phantoms(18, 5, 5, 16, p);
    Dataset ds = load_dataset(p);
    SplitPools pools = split_dataset(ds, 1);
    GeneratorParams<float> g = build_generator<float>({16, 4, 1}, true, 5);

    reset_mask_reads();
    std::vector<Tensor<float>> out_a = generate_outputs(g, pools.test_abnormal);
    std::vector<Tensor<float>> out_n = generate_outputs(g, pools.test_normal);
    CHECK(mask_reads() == 0);

    score_outputs(pools.test_abnormal, out_a, pools.test_normal, out_n);
    CHECK(mask_reads() > 0);  // scoring legitimately consults them
    reset_mask_reads();
}

TEST_CASE("ablation variant names") {
    CHECK(variant_from_name("gan").enable_ac == false);
    CHECK(variant_from_name("cyclegan").enable_ac == true);
    CHECK(variant_from_name("cyclegan").enable_shortcut == false);
    CHECK(variant_from_name("shortcut").enable_shortcut == true);
    CHECK(variant_from_name("shortcut").enable_am == false);
    CHECK(variant_from_name("full").enable_am == true);
    CHECK_THROWS_AS(variant_from_name("bogus"), UsageError);
}

TEST_SUITE_END();
