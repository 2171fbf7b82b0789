// Instance normalization: per-sample, per-channel standardization over the
// spatial plane (population variance) with a learned affine pair.
#pragma once

#include <cmath>
#include <cstdint>

#include "antgan/tensor.hpp"

namespace antgan {

inline constexpr double kInstanceNormEpsilon = 1e-5;

template <typename S>
Tensor<S> instance_norm(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& scale,
                        const Tensor<S>& shift, S epsilon = S(kInstanceNormEpsilon)) {
    if (input.rank() != 4) throw DimensionError("instance_norm: input must be N,C,H,W");
    const std::int64_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
    if (scale.rank() != 1 || scale.dim(0) != C || shift.rank() != 1 || shift.dim(0) != C)
        throw DimensionError("instance_norm: scale/shift must have one entry per channel");
    if (H * W < 2) throw UsageError("instance_norm: plane must have at least 2 elements");
    if (!input.all_finite()) throw NumericError("instance_norm: non-finite input");

    const std::int64_t P = H * W;
    Tensor<S> out = Tensor<S>::zeros(input.shape());
    // x_hat is needed again in backward; cheap to keep.
    Tensor<S> xhat = Tensor<S>::zeros(input.shape());
    Tensor<S> inv_std = Tensor<S>::zeros({N, C});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        Eigen::Map<const ArrayX<S>> xp(input.data() + nc * P, P);
        Eigen::Map<ArrayX<S>> hp(xhat.data() + nc * P, P);
        Eigen::Map<ArrayX<S>> op(out.data() + nc * P, P);
        // Double accumulation: makes a constant plane normalize to exactly
        // zero instead of amplified rounding noise.
        const S m = static_cast<S>(xp.template cast<double>().mean());
        const S var = static_cast<S>((xp.template cast<double>() - static_cast<double>(m))
                                         .square()
                                         .sum() /
                                     static_cast<double>(P));
        const S r = S(1) / std::sqrt(var + epsilon);
        inv_std.data()[nc] = r;
        hp = (xp - m) * r;
        const std::int64_t c = nc % C;
        op = hp * scale.data()[c] + shift.data()[c];
    }

    if (tape && detail::any_tracked<S>({&input, &scale, &shift})) {
        out.mark_tracked();
        tape->record(out, [input, scale, shift, out, xhat, inv_std] {
            const std::int64_t C = input.dim(1);
            const std::int64_t P = input.dim(2) * input.dim(3);
            const std::int64_t NC = input.dim(0) * C;
            for (std::int64_t nc = 0; nc < NC; ++nc) {
                const std::int64_t c = nc % C;
                Eigen::Map<const ArrayX<S>> g(out.grad_data() + nc * P, P);
                Eigen::Map<const ArrayX<S>> hp(xhat.data() + nc * P, P);
                if (shift.tracked()) shift.grad_data()[c] += g.sum();
                if (scale.tracked()) scale.grad_data()[c] += (g * hp).sum();
                if (input.tracked()) {
                    const S gr = scale.data()[c] * inv_std.data()[nc];
                    const S gmean = g.mean();
                    const S ghmean = (g * hp).mean();
                    Eigen::Map<ArrayX<S>> xg(input.grad_data() + nc * P, P);
                    xg += gr * (g - gmean - hp * ghmean);
                }
            }
        });
    }
    return out;
}

}  // namespace antgan
