#include "antgan/metrics.hpp"

#include <cstdio>

#include <json.hpp>

#include "antgan/trainer.hpp"

namespace antgan {

using ordered_json = nlohmann::ordered_json;

std::vector<Tensor<float>> generate_outputs(const GeneratorParams<float>& g_a2n,
                                            const std::vector<const SliceSample*>& pool) {
    const std::int64_t S = g_a2n.scale.image_size;
    std::vector<Tensor<float>> out;
    out.reserve(pool.size());
    for (const SliceSample* s : pool) {
        Tensor<float> y = generator_forward<float>(nullptr, g_a2n, s->image.reshaped({1, 1, S, S}));
        out.push_back(y.reshaped({1, S, S}));
    }
    return out;
}

EvalReport score_outputs(const std::vector<const SliceSample*>& test_abnormal,
                         const std::vector<Tensor<float>>& out_abnormal,
                         const std::vector<const SliceSample*>& test_normal,
                         const std::vector<Tensor<float>>& out_normal, double threshold) {
    if (test_abnormal.size() != out_abnormal.size() || test_normal.size() != out_normal.size())
        throw UsageError("score_outputs: pool/output size mismatch");
    if (test_abnormal.empty() || test_normal.empty())
        throw UsageError("score_outputs: empty test pool");

    EvalReport r;
    r.n_abnormal = static_cast<std::int64_t>(test_abnormal.size());
    r.n_normal = static_cast<std::int64_t>(test_normal.size());
    for (std::size_t i = 0; i < test_abnormal.size(); ++i) {
        const Tensor<float>& x = test_abnormal[i]->image;
        const Tensor<float>& mask = test_abnormal[i]->mask();
        r.masked_psnr_abnormal += psnr(x, out_abnormal[i], &mask);
        r.dice_threshold_seg += dice(diff_map_segment(x, out_abnormal[i], threshold), mask);
    }
    r.masked_psnr_abnormal /= static_cast<double>(r.n_abnormal);
    r.dice_threshold_seg /= static_cast<double>(r.n_abnormal);
    for (std::size_t i = 0; i < test_normal.size(); ++i)
        r.identity_psnr_normal += psnr(test_normal[i]->image, out_normal[i]);
    r.identity_psnr_normal /= static_cast<double>(r.n_normal);
    return r;
}

EvalReport evaluate(const GeneratorParams<float>& g_a2n,
                    const std::vector<const SliceSample*>& test_abnormal,
                    const std::vector<const SliceSample*>& test_normal, double threshold) {
    std::vector<Tensor<float>> out_a = generate_outputs(g_a2n, test_abnormal);
    std::vector<Tensor<float>> out_n = generate_outputs(g_a2n, test_normal);
    return score_outputs(test_abnormal, out_a, test_normal, out_n, threshold);
}

std::string EvalReport::to_json() const {
    ordered_json j;
    j["masked_psnr_abnormal"] = masked_psnr_abnormal;
    j["identity_psnr_normal"] = identity_psnr_normal;
    j["dice_threshold_seg"] = dice_threshold_seg;
    j["n_abnormal"] = n_abnormal;
    j["n_normal"] = n_normal;
    return j.dump(2) + "\n";
}

std::string EvalReport::to_table(const std::string& title) const {
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "%-24s  masked PSNR (dB)  identity PSNR (dB)  Dice@0.1\n"
                  "%-24s  %16.2f  %18.2f  %8.3f\n",
                  "", title.c_str(), masked_psnr_abnormal, identity_psnr_normal,
                  dice_threshold_seg);
    return buf;
}

AblationVariant variant_from_name(const std::string& name) {
    if (name == "gan") return {name, false, false, false, false};
    if (name == "gan_ac") return {name, false, false, true, false};
    if (name == "gan_nc") return {name, false, false, false, true};
    if (name == "cyclegan") return {name, false, false, true, true};
    if (name == "shortcut") return {name, true, false, true, true};
    if (name == "full") return {name, true, true, true, true};
    throw UsageError("unknown ablation variant '" + name +
                     "' (expected gan|gan_ac|gan_nc|cyclegan|shortcut|full)");
}

std::string ablation_table(const std::vector<VariantReport>& rows) {
    std::string out;
    char buf[200];
    std::snprintf(buf, sizeof(buf), "%-12s  %16s  %18s  %8s\n", "variant", "masked PSNR (dB)",
                  "identity PSNR (dB)", "Dice@0.1");
    out += buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-12s  %16.2f  %18.2f  %8.3f\n", r.name.c_str(),
                      r.report.masked_psnr_abnormal, r.report.identity_psnr_normal,
                      r.report.dice_threshold_seg);
        out += buf;
    }
    return out;
}

std::string ablation_json(const std::vector<VariantReport>& rows) {
    ordered_json j = ordered_json::array();
    for (const auto& r : rows) {
        ordered_json e;
        e["variant"] = r.name;
        e["masked_psnr_abnormal"] = r.report.masked_psnr_abnormal;
        e["identity_psnr_normal"] = r.report.identity_psnr_normal;
        e["dice_threshold_seg"] = r.report.dice_threshold_seg;
        j.push_back(e);
    }
    return j.dump(2) + "\n";
}

std::vector<VariantReport> ablate(const TrainConfig& base,
                                  const std::vector<std::string>& variant_names) {
    if (variant_names.empty()) throw UsageError("ablate: no variants given");
    std::vector<VariantReport> rows;
    for (const std::string& name : variant_names) {
        const AblationVariant v = variant_from_name(name);
        TrainConfig cfg = base;
        cfg.enable_shortcut = v.enable_shortcut;
        cfg.enable_am = v.enable_am;
        cfg.enable_ac = v.enable_ac;
        cfg.enable_nc = v.enable_nc;
        cfg.out_dir = base.out_dir + "/" + v.name;
        make_directories(cfg.out_dir);
        const TrainResult res = train(cfg);
        const ModelSet models = load_models(res.checkpoint_path);

        const Dataset ds = load_dataset(cfg.dataset_path);
        const SplitPools pools = split_dataset(ds, cfg.seed);
        const EvalReport report = evaluate(models.g_a2n, pools.test_abnormal, pools.test_normal);
        write_text_file(cfg.out_dir + "/report.json", report.to_json());
        rows.push_back({v.name, report});
    }
    return rows;
}

}  // namespace antgan
