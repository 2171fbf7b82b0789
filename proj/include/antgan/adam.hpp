// Adam with bias correction. Parameters are updated in registration order,
// so two runs over the same parameter list are bit-identical.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "antgan/tensor.hpp"

namespace antgan {

template <typename S>
class Adam {
public:
    Adam(std::vector<Tensor<S>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (const auto& p : params_) {
            if (!p.requires_grad())
                throw UsageError("Adam: parameter without gradient buffer");
            state_.push_back({ArrayX<S>::Zero(p.size()), ArrayX<S>::Zero(p.size())});
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step() {
        ++t_;
        const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        const S c1 = S(1) / static_cast<S>(1.0 - std::pow(beta1_, t_));
        const S c2 = S(1) / static_cast<S>(1.0 - std::pow(beta2_, t_));
        const S lr = static_cast<S>(lr_), eps = static_cast<S>(eps_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto g = params_[i].grad();
            auto& st = state_[i];
            st.m = b1 * st.m + (S(1) - b1) * g;
            st.v = b2 * st.v + (S(1) - b2) * g.square();
            params_[i].array() -= lr * (st.m * c1) / ((st.v * c2).sqrt() + eps);
        }
    }

    std::int64_t t() const { return t_; }
    const std::vector<Tensor<S>>& params() const { return params_; }

private:
    struct Moments {
        ArrayX<S> m, v;
    };
    std::vector<Tensor<S>> params_;
    std::vector<Moments> state_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

}  // namespace antgan
