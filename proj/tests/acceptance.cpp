// Acceptance suite. Runs every criterion end-to-end against the production
// code paths and prints one PASS/FAIL line per criterion. Exit code is the
// number of failed criteria.
//
// The heavy criteria (4 and 5) share one ablation sweep: three desk-scale
// trainings (cyclegan, shortcut, full) at 64px / 200+200 phantoms / 2000
// iterations with a fixed seed. The "full" variant doubles as the reference
// run whose frozen thresholds criterion 4 asserts.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "antgan/checkpoint.hpp"
#include "antgan/cli.hpp"
#include "antgan/config.hpp"
#include "antgan/dataset.hpp"
#include "antgan/gradcheck.hpp"
#include "antgan/losses.hpp"
#include "antgan/metrics.hpp"
#include "antgan/trainer.hpp"

using namespace antgan;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %-28s  %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

// --- criterion 1: gradient correctness ---------------------------------
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto entries = run_gradcheck_suite();
    const double secs = seconds_since(t0);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& e : entries)
        if (e.max_rel_err > worst) {
            worst = e.max_rel_err;
            worst_name = e.name;
        }
    const bool pass = worst < 1e-6 && secs < 120.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu ops, worst %.2e (%s), %.1f s", entries.size(), worst,
                  worst_name.c_str(), secs);
    report(1, "gradient correctness", pass, buf);
}

// --- criterion 2: architecture conformance ------------------------------
void criterion_2() {
    bool pass = true;
    std::string detail = "Tables I-III exact at full scale; desk arithmetic holds";
    auto expect = [&](const Shape& got, const Shape& want, const char* what) {
        if (got != want) {
            pass = false;
            detail = std::string(what) + " got " + shape_str(got) + " want " + shape_str(want);
        }
    };

    const ArchScale full = ArchScale::full();
    GeneratorParams<float> g = build_generator<float>(full, true, 1);
    Tensor<float> x = Tensor<float>::zeros({1, 1, 240, 240});
    ActivationTrace<float> gt;
    Tensor<float> y = generator_forward<float>(nullptr, g, x, &gt);
    expect(gt.at("Conv1").shape(), {1, 64, 240, 240}, "G Conv1");
    expect(gt.at("Conv2").shape(), {1, 128, 120, 120}, "G Conv2");
    expect(gt.at("Conv3").shape(), {1, 256, 60, 60}, "G Conv3");
    for (int k = 0; k < 9; ++k)
        expect(gt.at("RB_" + std::to_string(k)).shape(), {1, 256, 60, 60}, "G RB");
    expect(gt.at("Deconv1").shape(), {1, 256, 120, 120}, "G Deconv1");
    expect(gt.at("Deconv2").shape(), {1, 64, 240, 240}, "G Deconv2");
    expect(y.shape(), {1, 1, 240, 240}, "G Conv4");

    DiscriminatorParams<float> d = build_discriminator<float>(full, 2);
    ActivationTrace<float> dt;
    discriminator_forward<float>(nullptr, d, x, &dt);
    expect(dt.at("Conv1").shape(), {1, 64, 120, 120}, "D Conv1");
    expect(dt.at("Conv2").shape(), {1, 128, 60, 60}, "D Conv2");
    expect(dt.at("Conv3").shape(), {1, 256, 30, 30}, "D Conv3");
    expect(dt.at("Conv4").shape(), {1, 256, 30, 30}, "D Conv4");
    expect(dt.at("Conv5").shape(), {1, 1, 30, 30}, "D Conv5");

    // Desk scale: generator mirrors the scaled table; discriminator patch
    // grid is S/8 (the stride-1 stages preserve size).
    const ArchScale desk{64, 16, 3};
    GeneratorParams<float> gd = build_generator<float>(desk, true, 1);
    Tensor<float> xd = Tensor<float>::zeros({1, 1, 64, 64});
    ActivationTrace<float> gdt;
    Tensor<float> yd = generator_forward<float>(nullptr, gd, xd, &gdt);
    expect(gdt.at("Conv3").shape(), {1, 64, 16, 16}, "desk G bottleneck");
    expect(yd.shape(), {1, 1, 64, 64}, "desk G output");
    DiscriminatorParams<float> dd = build_discriminator<float>(desk, 2);
    expect(discriminator_forward<float>(nullptr, dd, xd).shape(), {1, 1, 8, 8}, "desk D patch");

    report(2, "architecture conformance", pass, detail);
}

// --- criterion 3: loss identities ---------------------------------------
void criterion_3() {
    bool pass = true;
    std::string detail = "AM/cycle/GAN identities and the lambda=0 reduction hold";

    Tensor<float> x = Tensor<float>::full({1, 1, 4, 4}, 0.5f);
    Tensor<float> out = Tensor<float>::full({1, 1, 4, 4}, -0.25f);
    Tensor<float> ones = Tensor<float>::full({1, 1, 4, 4}, 1.0f);
    pass = pass && loss_am<float>(nullptr, out, x, ones).item() == 0.0f;

    GenFn<float> identity = [](Tape<float>*, const Tensor<float>& v) { return v; };
    pass = pass &&
           loss_cycle<float>(nullptr, identity, identity, x, out, true, true).total.item() == 0.0f;

    DiscFn<float> perfect = [&x](Tape<float>*, const Tensor<float>& v) {
        return Tensor<float>::full({1, 1, 2, 2}, v.id() == x.id() ? 1.0f : 0.0f);
    };
    pass = pass &&
           loss_gan_d<float>(nullptr, perfect, x, out, AdvForm::least_squares).item() == 0.0f;

    Tensor<float> g1 = Tensor<float>::scalar(0.31f), g2 = Tensor<float>::scalar(0.12f);
    Tensor<float> ac = Tensor<float>::scalar(0.4f), nc = Tensor<float>::scalar(0.5f);
    Tensor<float> am = Tensor<float>::scalar(0.6f);
    LossWeights zero;
    zero.lambda_cc = 0.0;
    zero.lambda_am = 0.0;
    const double bare = static_cast<double>(g1.item()) + static_cast<double>(g2.item());
    const double combined =
        static_cast<double>(loss_full<float>(nullptr, g1, g2, &ac, &nc, &am, zero).item());
    pass = pass && std::abs(combined - bare) < 1e-6;

    report(3, "loss identities", pass, detail);
}

// --- criteria 4 and 5: reference run + ablation ordering ----------------
struct AblationOutcome {
    EvalReport cyclegan, shortcut, full;
    double full_secs = 0.0, total_secs = 0.0;
    bool ok = false;
};

AblationOutcome run_reference_sweep(const std::string& work) {
    AblationOutcome out;
    const std::string data = work + "/phantoms.antd";
    make_phantoms(1, 200, 200, 64, data);

    TrainConfig base;
    base.scale = {64, 16, 3};
    base.iterations = 2000;
    base.seed = 7;
    base.dataset_path = data;
    base.out_dir = work;

    const auto t0 = std::chrono::steady_clock::now();
    for (const std::string name : {"cyclegan", "shortcut", "full"}) {
        const auto tv = std::chrono::steady_clock::now();
        const auto rows = ablate(base, {name});
        const double secs = seconds_since(tv);
        if (name == "cyclegan") out.cyclegan = rows[0].report;
        if (name == "shortcut") out.shortcut = rows[0].report;
        if (name == "full") {
            out.full = rows[0].report;
            out.full_secs = secs;
        }
    }
    out.total_secs = seconds_since(t0);
    out.ok = true;
    return out;
}

void criterion_4(const AblationOutcome& o) {
    if (!o.ok) {
        report(4, "phantom end-to-end", false, "reference sweep did not run");
        return;
    }
    const bool pass = o.full.identity_psnr_normal >= 25.0 && o.full.masked_psnr_abnormal >= 25.0 &&
                      o.full.dice_threshold_seg >= 0.5 && o.full_secs < 1800.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "identity %.2f dB (>=25), masked %.2f dB (>=25), Dice %.3f (>=0.5), %.0f s (<1800)",
                  o.full.identity_psnr_normal, o.full.masked_psnr_abnormal,
                  o.full.dice_threshold_seg, o.full_secs);
    report(4, "phantom end-to-end", pass, buf);
}

void criterion_5(const AblationOutcome& o) {
    if (!o.ok) {
        report(5, "ablation ordering", false, "reference sweep did not run");
        return;
    }
    const double full = o.full.masked_psnr_abnormal;
    const double sc = o.shortcut.masked_psnr_abnormal;
    const double cg = o.cyclegan.masked_psnr_abnormal;
    const bool pass = full >= sc && sc >= cg && o.total_secs < 5400.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "masked PSNR: full %.2f >= shortcut %.2f >= cyclegan %.2f, %.0f s (<5400)",
                  full, sc, cg, o.total_secs);
    report(5, "ablation ordering", pass, buf);
}

// --- criterion 6: replay buffer -----------------------------------------
void criterion_6() {
    bool pass = true;
    Rng rng(6);
    for (int cap : {1, 7, 50}) {
        ReplayBuffer buf(cap);
        const int pushes = 200 + static_cast<int>(rng.uniform_int(800));
        for (int i = 0; i < pushes; ++i) {
            buf.push(Tensor<float>::full({1}, static_cast<float>(i)), rng);
            pass = pass && buf.size() <= cap;
        }
    }
    ReplayBuffer buf(1);
    buf.push(Tensor<float>::full({1}, -1.0f), rng);
    int hist = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        Tensor<float> img = Tensor<float>::full({1}, static_cast<float>(i));
        if (buf.push(img, rng).id() != img.id()) ++hist;
    }
    const double frac = static_cast<double>(hist) / n;
    pass = pass && frac >= 0.47 && frac <= 0.53;
    char buf2[120];
    std::snprintf(buf2, sizeof(buf2), "capacity respected; history fraction %.4f in [0.47,0.53]", frac);
    report(6, "replay buffer", pass, buf2);
}

// --- criterion 7: determinism -------------------------------------------
void criterion_7(const std::string& work) {
    const std::string data = work + "/det.antd";
    make_phantoms(2, 40, 40, 64, data);
    bool pass = true;
    std::string detail = "two train invocations: losses.csv and checkpoint bit-identical";
    for (const char* run : {"det_run1", "det_run2"}) {
        const int rc = run_cli({"train", "--dataset", data, "--out-dir", work + "/" + run,
                                "--iterations", "60", "--seed", "123"});
        pass = pass && rc == 0;
    }
    if (pass) {
        pass = read_bytes(work + "/det_run1/losses.csv") == read_bytes(work + "/det_run2/losses.csv") &&
               read_bytes(work + "/det_run1/model_final.antw") ==
                   read_bytes(work + "/det_run2/model_final.antw");
        if (!pass) detail = "outputs differ between identical runs";
    } else {
        detail = "train invocation failed";
    }
    report(7, "determinism", pass, detail);
}

// --- criterion 8: mask hygiene ------------------------------------------
void criterion_8(const std::string& work) {
    const std::string data = work + "/det.antd";            // from criterion 7
    const std::string ckpt = work + "/det_run1/model_final.antw";
    bool pass = true;
    std::string detail;

    reset_mask_reads();
    const int rc = run_cli({"translate", "--checkpoint", ckpt, "--dataset", data, "--direction",
                            "a2n", "--limit", "4", "--seed", "123", "--out-dir",
                            work + "/translated"});
    const std::uint64_t translate_reads = mask_reads();
    pass = pass && rc == 0 && translate_reads == 0;

    const ModelSet models = load_models(ckpt);
    const Dataset ds = load_dataset(data);
    const SplitPools pools = split_dataset(ds, 123);
    reset_mask_reads();
    generate_outputs(models.g_a2n, pools.test_abnormal);
    generate_outputs(models.g_a2n, pools.test_normal);
    const std::uint64_t generation_reads = mask_reads();
    pass = pass && generation_reads == 0;

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "mask reads: translate %llu, evaluate generation path %llu (both must be 0)",
                  static_cast<unsigned long long>(translate_reads),
                  static_cast<unsigned long long>(generation_reads));
    report(8, "mask hygiene", pass, buf);
}

// --- criterion 9: format round-trips ------------------------------------
void criterion_9(const std::string& work) {
    bool pass = true;
    std::string detail = "ANTD and ANTW byte-stable; PGM matches goldens";

    const std::string d1 = work + "/rt1.antd", d2 = work + "/rt2.antd";
    make_phantoms(9, 6, 6, 32, d1);
    save_dataset(load_dataset(d1), d2);
    pass = pass && read_bytes(d1) == read_bytes(d2);

    ModelSet m;
    m.scale = {16, 4, 1};
    m.use_shortcut = true;
    m.g_a2n = build_generator<float>(m.scale, true, 1);
    m.g_n2a = build_generator<float>(m.scale, true, 2);
    m.d_n = build_discriminator<float>(m.scale, 3);
    m.d_a = build_discriminator<float>(m.scale, 4);
    const std::string c1 = work + "/rt1.antw", c2 = work + "/rt2.antw";
    save_models(c1, m);
    save_models(c2, load_models(c1));
    pass = pass && read_bytes(c1) == read_bytes(c2);

    const std::string pgm = work + "/golden.pgm";
    export_image(Tensor<float>::full({1, 2, 2}, -1.0f), pgm);
    pass = pass && read_bytes(pgm) == std::string("P5\n2 2\n255\n\0\0\0\0", 15);
    export_image(Tensor<float>::full({1, 2, 2}, 1.0f), pgm);
    pass = pass && read_bytes(pgm) == std::string("P5\n2 2\n255\n\xff\xff\xff\xff", 15);
    export_image(Tensor<float>::zeros({1, 2, 2}), pgm);
    pass = pass && read_bytes(pgm) == std::string("P5\n2 2\n255\n\x80\x80\x80\x80", 15);

    if (!pass) detail = "a round-trip diverged";
    report(9, "format round-trips", pass, detail);
}

}  // namespace

int main(int argc, char** argv) {
    const std::string work = argc > 1 ? argv[1] : "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);

    criterion_1();
    criterion_2();
    criterion_3();
    AblationOutcome sweep;
    try {
        sweep = run_reference_sweep(work);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "reference sweep failed: %s\n", e.what());
    }
    criterion_4(sweep);
    criterion_5(sweep);
    criterion_6();
    criterion_7(work);
    criterion_8(work);
    criterion_9(work);

    std::printf("%d/9 criteria passed\n", 9 - g_failures);
    return g_failures;
}
