// The three objective terms: anomaly-mask penalty, cycle consistency, and
// the adversarial pair, plus the weighted combination. Expectations are
// realized as batch means (batch size 1 during training).
#pragma once

#include <functional>
#include <string>

#include "antgan/tensor.hpp"

namespace antgan {

enum class AdvForm { least_squares, log_form };

inline AdvForm adv_form_from_string(const std::string& s) {
    if (s == "least_squares") return AdvForm::least_squares;
    if (s == "log") return AdvForm::log_form;
    throw UsageError("unknown adv_form '" + s + "' (expected least_squares|log)");
}

inline std::string to_string(AdvForm f) {
    return f == AdvForm::least_squares ? "least_squares" : "log";
}

struct LossWeights {
    double lambda_cc = 10.0;
    double lambda_am = 10.0;
    AdvForm adv_form = AdvForm::least_squares;
};

enum class AmReduction { mean, sum };

namespace detail {
template <typename S>
void check_binary(const char* op, const Tensor<S>& m) {
    const S* p = m.data();
    for (std::int64_t i = 0; i < m.size(); ++i)
        if (p[i] != S(0) && p[i] != S(1))
            throw UsageError(std::string(op) + ": mask must be binary (0/1), found " +
                             std::to_string(static_cast<double>(p[i])));
}
}  // namespace detail

// Squared L2 of (1 - M) * (G(x) - x): any change outside the anomaly mask is
// penalized, changes inside it are free. Mean reduction by default so the
// weight is resolution-independent; sum reduction matches the raw norm.
template <typename S>
Tensor<S> loss_am(Tape<S>* tape, const Tensor<S>& gen_out, const Tensor<S>& x_abnormal,
                  const Tensor<S>& mask, AmReduction reduction = AmReduction::mean) {
    detail::check_same_shape("loss_am", gen_out, x_abnormal);
    detail::check_same_shape("loss_am", gen_out, mask);
    detail::check_binary("loss_am", mask);
    Tensor<S> keep = Tensor<S>::zeros(mask.shape());
    keep.array() = S(1) - mask.carray();
    Tensor<S> diff = sub(tape, gen_out, x_abnormal);
    Tensor<S> masked = mul(tape, keep, diff);
    Tensor<S> sq = mul(tape, masked, masked);
    return reduction == AmReduction::mean ? mean(tape, sq) : sum(tape, sq);
}

template <typename S>
using GenFn = std::function<Tensor<S>(Tape<S>*, const Tensor<S>&)>;

template <typename S>
struct CycleLoss {
    Tensor<S> total;  // sum of the enabled terms
    Tensor<S> ac;     // ||G_n2a(G_a2n(x_a)) - x_a||_1, invalid when disabled
    Tensor<S> nc;     // ||G_a2n(G_n2a(x_n)) - x_n||_1, invalid when disabled
};

// L1 reconstruction through both generator compositions. Each enabled term
// is mean-reduced; at least one must be enabled.
template <typename S>
CycleLoss<S> loss_cycle(Tape<S>* tape, const GenFn<S>& g_a2n, const GenFn<S>& g_n2a,
                        const Tensor<S>& x_a, const Tensor<S>& x_n, bool enable_ac,
                        bool enable_nc) {
    if (!enable_ac && !enable_nc)
        throw UsageError("loss_cycle: at least one of AC/NC must be enabled");
    CycleLoss<S> out;
    if (enable_ac) {
        Tensor<S> rec = g_n2a(tape, g_a2n(tape, x_a));
        out.ac = mean(tape, abs(tape, sub(tape, rec, x_a)));
    }
    if (enable_nc) {
        Tensor<S> rec = g_a2n(tape, g_n2a(tape, x_n));
        out.nc = mean(tape, abs(tape, sub(tape, rec, x_n)));
    }
    if (enable_ac && enable_nc)
        out.total = add(tape, out.ac, out.nc);
    else
        out.total = enable_ac ? out.ac : out.nc;
    return out;
}

template <typename S>
using DiscFn = std::function<Tensor<S>(Tape<S>*, const Tensor<S>&)>;

// Generator-side adversarial loss: the patch map of D on a fake is pulled
// toward the all-ones target (least-squares form), or the literal log
// objective on sigmoid-ed scores.
template <typename S>
Tensor<S> loss_gan_g(Tape<S>* tape, const DiscFn<S>& d, const Tensor<S>& fake, AdvForm form) {
    Tensor<S> score = d(tape, fake);
    if (form == AdvForm::least_squares) {
        Tensor<S> diff = add_scalar(tape, score, S(-1));
        return mean(tape, mul(tape, diff, diff));
    }
    // E[ln(1 - sigmoid(D(fake)))] = -E[softplus(D(fake))], minimized by the
    // generator, i.e. the generator pushes D's scores up.
    return mul_scalar(tape, mean(tape, softplus(tape, score)), S(-1));
}

// Discriminator-side loss. The fake batch must come from the replay buffer,
// detached from any generator tape.
template <typename S>
Tensor<S> loss_gan_d(Tape<S>* tape, const DiscFn<S>& d, const Tensor<S>& real,
                     const Tensor<S>& fake_from_buffer, AdvForm form) {
    if (fake_from_buffer.tracked())
        throw UsageError("loss_gan_d: fake images must be detached from the generator tape");
    Tensor<S> real_score = d(tape, real);
    Tensor<S> fake_score = d(tape, fake_from_buffer);
    if (form == AdvForm::least_squares) {
        Tensor<S> rd = add_scalar(tape, real_score, S(-1));
        Tensor<S> real_term = mean(tape, mul(tape, rd, rd));
        Tensor<S> fake_term = mean(tape, mul(tape, fake_score, fake_score));
        return add(tape, real_term, fake_term);
    }
    // -E[ln sigmoid(D(real))] - E[ln(1 - sigmoid(D(fake)))]
    Tensor<S> real_term = mean(tape, softplus(tape, mul_scalar(tape, real_score, S(-1))));
    Tensor<S> fake_term = mean(tape, softplus(tape, fake_score));
    return add(tape, real_term, fake_term);
}

// Generator-side total: adversarial terms plus the weighted cycle and
// anomaly-mask terms. Disabled components are passed as null pointers; with
// lambda_cc = lambda_am = 0 (or all components absent) this reduces to the
// bare adversarial loss. Discriminator-side totals are their adversarial
// losses alone.
template <typename S>
Tensor<S> loss_full(Tape<S>* tape, const Tensor<S>& g_adv_a2n, const Tensor<S>& g_adv_n2a,
                    const Tensor<S>* cc_ac, const Tensor<S>* cc_nc, const Tensor<S>* am,
                    const LossWeights& w) {
    Tensor<S> total = add(tape, g_adv_a2n, g_adv_n2a);
    const S lcc = static_cast<S>(w.lambda_cc), lam = static_cast<S>(w.lambda_am);
    if (cc_ac && cc_ac->valid())
        total = add(tape, total, mul_scalar(tape, *cc_ac, lcc));
    if (cc_nc && cc_nc->valid())
        total = add(tape, total, mul_scalar(tape, *cc_nc, lcc));
    if (am && am->valid())
        total = add(tape, total, mul_scalar(tape, *am, lam));
    return total;
}

}  // namespace antgan
