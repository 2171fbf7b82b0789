// Evaluation: PSNR (optionally masked), Dice overlap, and lesion
// segmentation by thresholding the input/output difference map.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "antgan/config.hpp"
#include "antgan/dataset.hpp"
#include "antgan/models.hpp"
#include "antgan/tensor.hpp"

namespace antgan {

// Identical inputs report this sentinel instead of +inf.
inline constexpr double kPsnrCap = 99.0;

// 10*log10(peak^2 / MSE) with peak = 2 (the [-1,1] dynamic range). If a mask
// is given, the MSE runs over pixels where the mask is 0 only.
template <typename S>
double psnr(const Tensor<S>& a, const Tensor<S>& b, const Tensor<S>* mask = nullptr) {
    detail::check_same_shape("psnr", a, b);
    double se = 0.0;
    std::int64_t n = 0;
    if (mask) {
        detail::check_same_shape("psnr", a, *mask);
        for (std::int64_t i = 0; i < a.size(); ++i) {
            if (mask->data()[i] != S(0)) continue;
            const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
            se += d * d;
            ++n;
        }
        if (n == 0) throw UsageError("psnr: mask excludes every pixel");
    } else {
        for (std::int64_t i = 0; i < a.size(); ++i) {
            const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
            se += d * d;
        }
        n = a.size();
    }
    const double mse = se / static_cast<double>(n);
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(4.0 / mse));
}

// 2|P and T| / (|P| + |T|); two empty masks count as perfect agreement.
template <typename S>
double dice(const Tensor<S>& pred, const Tensor<S>& truth) {
    detail::check_same_shape("dice", pred, truth);
    detail::check_binary("dice", pred);
    detail::check_binary("dice", truth);
    std::int64_t np = 0, nt = 0, ni = 0;
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data()[i] != S(0), t = truth.data()[i] != S(0);
        np += p;
        nt += t;
        ni += p && t;
    }
    if (np + nt == 0) return 1.0;
    return 2.0 * static_cast<double>(ni) / static_cast<double>(np + nt);
}

// 1 where |x - gx| exceeds the threshold (strictly), in [-1,1] units. The
// comparison runs in the tensors' own precision so a difference of exactly
// 0.1f stays excluded for float data.
template <typename S>
Tensor<S> diff_map_segment(const Tensor<S>& x, const Tensor<S>& gx, double threshold = 0.1) {
    detail::check_same_shape("diff_map_segment", x, gx);
    const S th = static_cast<S>(threshold);
    Tensor<S> out = Tensor<S>::zeros(x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i)
        out.data()[i] = std::abs(x.data()[i] - gx.data()[i]) > th ? S(1) : S(0);
    return out;
}

struct EvalReport {
    double masked_psnr_abnormal = 0.0;  // dB over non-lesion pixels, abnormal test set
    double identity_psnr_normal = 0.0;  // dB on healthy test inputs, no mask
    double dice_threshold_seg = 0.0;    // thresholded diff map vs ground truth
    std::int64_t n_abnormal = 0;
    std::int64_t n_normal = 0;

    std::string to_json() const;
    std::string to_table(const std::string& title) const;
};

// Scores an A2N generator on held-out pools. Outputs are generated for the
// whole set first; masks are consulted only afterwards, for scoring.
EvalReport evaluate(const GeneratorParams<float>& g_a2n,
                    const std::vector<const SliceSample*>& test_abnormal,
                    const std::vector<const SliceSample*>& test_normal,
                    double threshold = 0.1);

// The mask-free generation half of evaluate, exposed so the mask-hygiene
// test can instrument it directly.
std::vector<Tensor<float>> generate_outputs(const GeneratorParams<float>& g_a2n,
                                            const std::vector<const SliceSample*>& pool);

// Scoring half: masks are read here and only here.
EvalReport score_outputs(const std::vector<const SliceSample*>& test_abnormal,
                         const std::vector<Tensor<float>>& out_abnormal,
                         const std::vector<const SliceSample*>& test_normal,
                         const std::vector<Tensor<float>>& out_normal, double threshold = 0.1);

struct AblationVariant {
    std::string name;
    bool enable_shortcut, enable_am, enable_ac, enable_nc;
};

// gan | gan_ac | gan_nc | cyclegan | shortcut | full
AblationVariant variant_from_name(const std::string& name);

struct VariantReport {
    std::string name;
    EvalReport report;
};

std::string ablation_table(const std::vector<VariantReport>& rows);
std::string ablation_json(const std::vector<VariantReport>& rows);

// Trains every variant with the base config's seed and dataset (identical
// data streams, so scores are comparable), evaluates each on the held-out
// split, and writes per-variant subdirectories under base.out_dir.
std::vector<VariantReport> ablate(const TrainConfig& base,
                                  const std::vector<std::string>& variant_names);

}  // namespace antgan
