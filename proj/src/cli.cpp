#include "antgan/cli.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "antgan/checkpoint.hpp"
#include "antgan/config.hpp"
#include "antgan/dataset.hpp"
#include "antgan/gradcheck.hpp"
#include "antgan/metrics.hpp"
#include "antgan/trainer.hpp"

namespace antgan {

namespace {

// Flag values layered over a config file: flags win.
struct TrainFlags {
    std::optional<std::string> config_path, dataset, out_dir, adv_form;
    std::optional<std::int64_t> image_size, base_channels, n_res_blocks, iterations,
        buffer_capacity, checkpoint_every;
    std::optional<double> lambda_cc, lambda_am, lr, beta1, beta2, eps;
    std::optional<std::uint64_t> seed;
    std::optional<bool> shortcut, am, ac, nc;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--dataset", dataset, "ANTD dataset path");
        cmd->add_option("--out-dir", out_dir, "output directory");
        cmd->add_option("--image-size", image_size, "image side in pixels");
        cmd->add_option("--base-channels", base_channels, "first-layer filter count");
        cmd->add_option("--res-blocks", n_res_blocks, "residual block count");
        cmd->add_option("--iterations", iterations, "training iterations");
        cmd->add_option("--buffer-capacity", buffer_capacity, "replay buffer capacity");
        cmd->add_option("--checkpoint-every", checkpoint_every, "periodic checkpoint interval (0: final only)");
        cmd->add_option("--lambda-cc", lambda_cc, "cycle-consistency weight");
        cmd->add_option("--lambda-am", lambda_am, "anomaly-mask weight");
        cmd->add_option("--adv-form", adv_form, "adversarial form: least_squares|log");
        cmd->add_option("--lr", lr, "learning rate");
        cmd->add_option("--beta1", beta1, "Adam beta1");
        cmd->add_option("--beta2", beta2, "Adam beta2");
        cmd->add_option("--eps", eps, "Adam epsilon");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_flag("--shortcut,!--no-shortcut", shortcut, "global generator shortcut");
        cmd->add_flag("--am,!--no-am", am, "anomaly-mask loss term");
        cmd->add_flag("--ac,!--no-ac", ac, "abnormality-synthesis cycle term");
        cmd->add_flag("--nc,!--no-nc", nc, "normal-synthesis cycle term");
    }

    TrainConfig resolve() const {
        TrainConfig cfg;
        if (config_path) cfg = config_from_json_file(*config_path);
        if (dataset) cfg.dataset_path = *dataset;
        if (out_dir) cfg.out_dir = *out_dir;
        if (image_size) cfg.scale.image_size = *image_size;
        if (base_channels) cfg.scale.base_channels = *base_channels;
        if (n_res_blocks) cfg.scale.n_res_blocks = *n_res_blocks;
        if (iterations) cfg.iterations = *iterations;
        if (buffer_capacity) cfg.buffer_capacity = *buffer_capacity;
        if (checkpoint_every) cfg.checkpoint_every = *checkpoint_every;
        if (lambda_cc) cfg.weights.lambda_cc = *lambda_cc;
        if (lambda_am) cfg.weights.lambda_am = *lambda_am;
        if (adv_form) cfg.weights.adv_form = adv_form_from_string(*adv_form);
        if (lr) cfg.lr = *lr;
        if (beta1) cfg.beta1 = *beta1;
        if (beta2) cfg.beta2 = *beta2;
        if (eps) cfg.eps = *eps;
        if (seed) cfg.seed = *seed;
        if (shortcut) cfg.enable_shortcut = *shortcut;
        if (am) cfg.enable_am = *am;
        if (ac) cfg.enable_ac = *ac;
        if (nc) cfg.enable_nc = *nc;
        return cfg;
    }
};

void write_manifest(const TrainConfig& cfg, const std::vector<std::string>& outputs) {
    RunManifest m;
    m.config = cfg;
    m.tool_version = kToolVersion;
    m.dataset_checksum = file_checksum(cfg.dataset_path);
    m.outputs = outputs;
    write_text_file(cfg.out_dir + "/manifest.json", m.to_json());
}

std::vector<std::string> planned_train_outputs(const TrainConfig& cfg) {
    std::vector<std::string> out = {"manifest.json", "losses.csv", "model_final.antw"};
    if (cfg.checkpoint_every > 0)
        for (std::int64_t k = cfg.checkpoint_every; k <= cfg.iterations; k += cfg.checkpoint_every) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "model_%06lld.antw", static_cast<long long>(k));
            out.push_back(buf);
        }
    return out;
}

int cmd_train(const TrainFlags& flags) {
    TrainConfig cfg = flags.resolve();
    cfg.validate();
    make_directories(cfg.out_dir);
    write_manifest(cfg, planned_train_outputs(cfg));
    const TrainResult res = train(cfg);
    std::cout << "trained " << res.iterations_run << " iterations\n"
              << "checkpoint: " << res.checkpoint_path << "\n"
              << "loss log:   " << res.loss_log_path << "\n";
    return 0;
}

int cmd_ablate(const TrainFlags& flags, const std::string& variants_csv) {
    TrainConfig base = flags.resolve();
    base.validate();
    std::vector<std::string> names;
    std::stringstream ss(variants_csv);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) names.push_back(item);
    for (const auto& n : names) variant_from_name(n);  // validate before training anything

    make_directories(base.out_dir);
    std::vector<std::string> outputs = {"manifest.json", "ablation.json"};
    for (const auto& n : names) outputs.push_back(n + "/");
    write_manifest(base, outputs);

    const std::vector<VariantReport> rows = ablate(base, names);
    write_text_file(base.out_dir + "/ablation.json", ablation_json(rows));
    std::cout << ablation_table(rows);
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& dataset, std::uint64_t seed,
                 const std::string& out_dir, double threshold) {
    const ModelSet models = load_models(checkpoint);
    const Dataset ds = load_dataset(dataset);
    const SplitPools pools = split_dataset(ds, seed);
    if (pools.test_abnormal.empty() || pools.test_normal.empty())
        throw UsageError("evaluate: test pools are empty; dataset too small");
    const EvalReport report = evaluate(models.g_a2n, pools.test_abnormal, pools.test_normal, threshold);
    make_directories(out_dir);
    write_text_file(out_dir + "/report.json", report.to_json());
    std::cout << report.to_table("a2n checkpoint");
    return 0;
}

int cmd_translate(const std::string& checkpoint, const std::string& dataset,
                  const std::string& direction, const std::string& pool_name, std::int64_t limit,
                  std::uint64_t seed, const std::string& out_dir) {
    const ModelSet models = load_models(checkpoint);
    const Direction dir = direction_from_string(direction);
    const Dataset ds = load_dataset(dataset);
    const SplitPools pools = split_dataset(ds, seed);
    // Deployment-style inference runs on the held-out split, source pool
    // matching the translation direction unless overridden.
    std::string pool = pool_name.empty() ? (dir == Direction::a2n ? "abnormal" : "normal") : pool_name;
    const std::vector<const SliceSample*>* src = nullptr;
    if (pool == "abnormal")
        src = &pools.test_abnormal;
    else if (pool == "normal")
        src = &pools.test_normal;
    else
        throw UsageError("unknown pool '" + pool + "' (expected normal|abnormal)");
    if (src->empty()) throw UsageError("translate: selected test pool is empty");

    std::vector<Tensor<float>> inputs;
    for (const SliceSample* s : *src) {
        if (static_cast<std::int64_t>(inputs.size()) >= limit) break;
        inputs.push_back(s->image);
    }
    const std::vector<Tensor<float>> outputs = translate(models, dir, inputs);

    make_directories(out_dir);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "input_%03zu.pgm", i);
        export_image(inputs[i], out_dir + "/" + name);
        std::snprintf(name, sizeof(name), "output_%03zu.pgm", i);
        export_image(outputs[i], out_dir + "/" + name);
        // |x - G(x)| lies in [0,2]; shift to [-1,1] for export
        Tensor<float> diff = Tensor<float>::zeros(inputs[i].shape());
        diff.array() = (inputs[i].carray() - outputs[i].carray()).abs() - 1.0f;
        std::snprintf(name, sizeof(name), "diff_%03zu.pgm", i);
        export_image(diff, out_dir + "/" + name);
    }
    std::cout << "wrote " << inputs.size() << " translations to " << out_dir << "\n";
    return 0;
}

int cmd_grad_check(double h) {
    const std::vector<GradCheckEntry> entries = run_gradcheck_suite();
    (void)h;
    bool ok = true;
    for (const auto& e : entries) {
        std::printf("%-22s max rel err %.3e\n", e.name.c_str(), e.max_rel_err);
        ok = ok && e.max_rel_err < 1e-6;
    }
    std::printf("%s\n", ok ? "all gradients match finite differences (< 1e-6)"
                           : "GRADIENT CHECK FAILED");
    return ok ? 0 : 2;
}

int cmd_dump_activations(const std::string& checkpoint, const std::string& dataset,
                         const std::string& generator, const std::string& pool,
                         std::int64_t index, const std::string& layer, std::uint64_t seed,
                         const std::string& out_dir) {
    const ModelSet models = load_models(checkpoint);
    const GeneratorParams<float>& g = generator == "n2a" ? models.g_n2a : models.g_a2n;
    if (generator != "a2n" && generator != "n2a")
        throw UsageError("unknown generator '" + generator + "' (expected a2n|n2a)");
    const Dataset ds = load_dataset(dataset);
    const SplitPools pools = split_dataset(ds, seed);
    const auto& src = pool == "normal" ? pools.test_normal : pools.test_abnormal;
    if (pool != "normal" && pool != "abnormal")
        throw UsageError("unknown pool '" + pool + "' (expected normal|abnormal)");
    if (index < 0 || index >= static_cast<std::int64_t>(src.size()))
        throw UsageError("index out of range for the selected test pool");
    make_directories(out_dir);
    const std::int64_t S = g.scale.image_size;
    const auto paths = dump_activations(g, src[static_cast<std::size_t>(index)]->image.reshaped({1, 1, S, S}),
                                        layer, out_dir);
    std::cout << "wrote " << paths.size() << " channel images for layer " << layer << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"ANT-GAN: abnormal-to-normal medical image translation on lesion phantoms"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic phantom dataset");
    std::uint64_t gen_seed = 1;
    std::int64_t gen_normal = 200, gen_abnormal = 200, gen_size = 64;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--normal", gen_normal, "number of normal samples");
    gen->add_option("--abnormal", gen_abnormal, "number of abnormal samples");
    gen->add_option("--size", gen_size, "image side in pixels");
    gen->add_option("--out", gen_out, "output ANTD file")->required();

    // train
    auto* tr = app.add_subcommand("train", "train the full model or an ablation");
    TrainFlags train_flags;
    train_flags.add_to(tr);

    // translate
    auto* tl = app.add_subcommand("translate", "run a trained generator on held-out images");
    std::string tl_checkpoint, tl_dataset, tl_direction = "a2n", tl_pool, tl_out = "translated";
    std::int64_t tl_limit = 8;
    std::uint64_t tl_seed = 1;
    tl->add_option("--checkpoint", tl_checkpoint)->required();
    tl->add_option("--dataset", tl_dataset)->required();
    tl->add_option("--direction", tl_direction, "a2n|n2a");
    tl->add_option("--pool", tl_pool, "source test pool (normal|abnormal); default follows direction");
    tl->add_option("--limit", tl_limit, "max images to translate");
    tl->add_option("--seed", tl_seed, "seed that fixes the train/test split");
    tl->add_option("--out-dir", tl_out);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a checkpoint on the held-out split");
    std::string ev_checkpoint, ev_dataset, ev_out = "evaluated";
    std::uint64_t ev_seed = 1;
    double ev_threshold = 0.1;
    ev->add_option("--checkpoint", ev_checkpoint)->required();
    ev->add_option("--dataset", ev_dataset)->required();
    ev->add_option("--seed", ev_seed, "seed that fixes the train/test split");
    ev->add_option("--threshold", ev_threshold, "difference-map threshold");
    ev->add_option("--out-dir", ev_out);

    // ablate
    auto* ab = app.add_subcommand("ablate", "train and compare objective variants");
    TrainFlags ablate_flags;
    ablate_flags.add_to(ab);
    std::string ab_variants = "cyclegan,shortcut,full";
    ab->add_option("--variants", ab_variants, "comma list: gan,gan_ac,gan_nc,cyclegan,shortcut,full");

    // grad-check
    auto* gc = app.add_subcommand("grad-check", "verify every op against finite differences");
    double gc_h = 1e-4;
    gc->add_option("--step", gc_h, "finite-difference step");

    // dump-activations
    auto* da = app.add_subcommand("dump-activations", "write per-channel feature images of a layer");
    std::string da_checkpoint, da_dataset, da_generator = "a2n", da_pool = "abnormal", da_layer,
                da_out = "activations";
    std::int64_t da_index = 0;
    std::uint64_t da_seed = 1;
    da->add_option("--checkpoint", da_checkpoint)->required();
    da->add_option("--dataset", da_dataset)->required();
    da->add_option("--generator", da_generator, "a2n|n2a");
    da->add_option("--pool", da_pool, "normal|abnormal");
    da->add_option("--index", da_index, "image index within the test pool");
    da->add_option("--layer", da_layer, "Conv1|Conv2|Conv3|RB_k|Deconv1|Deconv2|Conv4")->required();
    da->add_option("--seed", da_seed, "seed that fixes the train/test split");
    da->add_option("--out-dir", da_out);

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (gen->parsed()) {
            make_phantoms(gen_seed, gen_normal, gen_abnormal, gen_size, gen_out);
            std::cout << "wrote " << gen_out << " (" << gen_normal << " normal, " << gen_abnormal
                      << " abnormal, " << gen_size << "px)\n";
            return 0;
        }
        if (tr->parsed()) return cmd_train(train_flags);
        if (tl->parsed())
            return cmd_translate(tl_checkpoint, tl_dataset, tl_direction, tl_pool, tl_limit,
                                 tl_seed, tl_out);
        if (ev->parsed()) return cmd_evaluate(ev_checkpoint, ev_dataset, ev_seed, ev_out, ev_threshold);
        if (ab->parsed()) return cmd_ablate(ablate_flags, ab_variants);
        if (gc->parsed()) return cmd_grad_check(gc_h);
        if (da->parsed())
            return cmd_dump_activations(da_checkpoint, da_dataset, da_generator, da_pool, da_index,
                                        da_layer, da_seed, da_out);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace antgan
