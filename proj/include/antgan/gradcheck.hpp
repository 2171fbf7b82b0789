// Central finite-difference gradient verification. Always run in double:
// float32 cannot resolve the 1e-6 relative tolerance.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "antgan/tensor.hpp"

namespace antgan {

// f(x +- h e_i) central differences, per element. f must not mutate x.
inline Tensor<double> finite_diff_grad(const std::function<double(const Tensor<double>&)>& f,
                                       const Tensor<double>& x, double h = 1e-4) {
    Tensor<double> g = Tensor<double>::zeros(x.shape());
    Tensor<double> probe = x.detach();
    for (std::int64_t i = 0; i < x.size(); ++i) {
        const double v = probe.data()[i];
        probe.data()[i] = v + h;
        const double fp = f(probe);
        probe.data()[i] = v - h;
        const double fm = f(probe);
        probe.data()[i] = v;
        g.data()[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Builds the loss twice: once on a tape for the analytic gradient of `x`,
// and pointwise for the numeric one. Returns the worst relative error,
// normalized by the gradient's own magnitude (floor 1).
template <typename F>  // F: (Tape<double>*, const Tensor<double>&) -> scalar Tensor<double>
double check_gradient(F&& build_loss, const Tensor<double>& x, double h = 1e-4) {
    Tensor<double> var = x.detach();
    var.set_requires_grad(true);
    Tape<double> tape;
    Tensor<double> loss = build_loss(&tape, var);
    tape.backward(loss);
    Tensor<double> analytic = Tensor<double>::zeros(x.shape());
    analytic.array() = var.grad();

    Tensor<double> numeric = finite_diff_grad(
        [&](const Tensor<double>& p) { return build_loss(nullptr, p).item(); }, x, h);

    const double denom = std::max({analytic.carray().abs().maxCoeff(),
                                   numeric.carray().abs().maxCoeff(), 1.0});
    return (analytic.carray() - numeric.carray()).abs().maxCoeff() / denom;
}

struct GradCheckEntry {
    std::string name;
    double max_rel_err;
};

// Fixed-seed sweep over every differentiable op plus the composed networks.
// Declared here, defined in gradcheck.cpp (pulls in the model builders).
std::vector<GradCheckEntry> run_gradcheck_suite();

}  // namespace antgan
