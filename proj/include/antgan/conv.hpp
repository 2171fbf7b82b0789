// 2-D convolution, transposed convolution and zero padding, with exact
// analytic backward passes. Spatial work is lowered to GEMM via im2col;
// Eigen does the matrix products.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>

#include "antgan/tensor.hpp"

namespace antgan {

namespace detail {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;  // col-major

template <typename S>
using RowMajorMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using CRowMajorMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ColMajorMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename S>
using CColMajorMap = Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>>;

// cols(m, k) = src[c, oh*stride+ki-pad, ow*stride+kj-pad] with m = oh*Wo+ow,
// k = (c*kh+ki)*kw+kj; out-of-image taps are zero.
template <typename S>
void im2col(const S* src, std::int64_t C, std::int64_t H, std::int64_t W,
            std::int64_t kh, std::int64_t kw, std::int64_t stride, std::int64_t pad,
            std::int64_t Ho, std::int64_t Wo, MatX<S>& cols) {
    const std::int64_t M = Ho * Wo;
    cols.resize(M, C * kh * kw);
    for (std::int64_t c = 0; c < C; ++c) {
        const S* plane = src + c * H * W;
        for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
                S* dst = cols.data() + ((c * kh + ki) * kw + kj) * M;
                for (std::int64_t oh = 0; oh < Ho; ++oh) {
                    const std::int64_t ih = oh * stride + ki - pad;
                    S* drow = dst + oh * Wo;
                    if (ih < 0 || ih >= H) {
                        std::fill(drow, drow + Wo, S(0));
                        continue;
                    }
                    const S* srow = plane + ih * W;
                    std::int64_t iw = kj - pad;
                    for (std::int64_t ow = 0; ow < Wo; ++ow, iw += stride)
                        drow[ow] = (iw >= 0 && iw < W) ? srow[iw] : S(0);
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds cols back into a C x H x W buffer.
template <typename S>
void col2im_add(const MatX<S>& cols, std::int64_t C, std::int64_t H, std::int64_t W,
                std::int64_t kh, std::int64_t kw, std::int64_t stride, std::int64_t pad,
                std::int64_t Ho, std::int64_t Wo, S* dst) {
    const std::int64_t M = Ho * Wo;
    for (std::int64_t c = 0; c < C; ++c) {
        S* plane = dst + c * H * W;
        for (std::int64_t ki = 0; ki < kh; ++ki) {
            for (std::int64_t kj = 0; kj < kw; ++kj) {
                const S* scol = cols.data() + ((c * kh + ki) * kw + kj) * M;
                for (std::int64_t oh = 0; oh < Ho; ++oh) {
                    const std::int64_t ih = oh * stride + ki - pad;
                    if (ih < 0 || ih >= H) continue;
                    S* srow = plane + ih * W;
                    const S* srcrow = scol + oh * Wo;
                    std::int64_t iw = kj - pad;
                    for (std::int64_t ow = 0; ow < Wo; ++ow, iw += stride)
                        if (iw >= 0 && iw < W) srow[iw] += srcrow[ow];
                }
            }
        }
    }
}

template <typename S>
void check_conv_args(const char* op, const Tensor<S>& input, const Tensor<S>& weight,
                     const Tensor<S>& bias, std::int64_t stride, std::int64_t padding) {
    if (input.rank() != 4) throw DimensionError(std::string(op) + ": input must be N,C,H,W");
    if (weight.rank() != 4) throw DimensionError(std::string(op) + ": weight must be rank 4");
    if (bias.rank() != 1) throw DimensionError(std::string(op) + ": bias must be rank 1");
    if (stride != 1 && stride != 2) throw UsageError(std::string(op) + ": stride must be 1 or 2");
    if (padding < 0) throw UsageError(std::string(op) + ": padding must be >= 0");
    if (!input.all_finite() || !weight.all_finite() || !bias.all_finite())
        throw NumericError(std::string(op) + ": non-finite values in inputs");
}

}  // namespace detail

// input [N,Cin,H,W], weight [Cout,Cin,kh,kw], bias [Cout] -> [N,Cout,Ho,Wo]
// Ho = floor((H + 2*padding - kh)/stride) + 1.
template <typename S>
Tensor<S> conv2d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& weight,
                 const Tensor<S>& bias, std::int64_t stride, std::int64_t padding) {
    detail::check_conv_args("conv2d", input, weight, bias, stride, padding);
    const std::int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(1) != Cin)
        throw DimensionError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                             " input channels, input has " + std::to_string(Cin));
    if (bias.dim(0) != Cout) throw DimensionError("conv2d: bias size does not match Cout");
    if (kh > H + 2 * padding || kw > W + 2 * padding)
        throw DimensionError("conv2d: kernel larger than padded input");

    const std::int64_t Ho = (H + 2 * padding - kh) / stride + 1;
    const std::int64_t Wo = (W + 2 * padding - kw) / stride + 1;
    const std::int64_t M = Ho * Wo, K = Cin * kh * kw;

    Tensor<S> out = Tensor<S>::zeros({N, Cout, Ho, Wo});
    detail::CRowMajorMap<S> wmat(weight.data(), Cout, K);
    detail::MatX<S> cols;
    for (std::int64_t n = 0; n < N; ++n) {
        detail::im2col(input.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, padding, Ho, Wo, cols);
        detail::ColMajorMap<S> omat(out.data() + n * Cout * M, M, Cout);
        omat.noalias() = cols * wmat.transpose();
        for (std::int64_t co = 0; co < Cout; ++co) omat.col(co).array() += bias.data()[co];
    }

    if (tape && detail::any_tracked<S>({&input, &weight, &bias})) {
        out.mark_tracked();
        tape->record(out, [input, weight, bias, out, stride, padding] {
            const std::int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
            const std::int64_t Cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
            const std::int64_t Ho = out.dim(2), Wo = out.dim(3);
            const std::int64_t M = Ho * Wo, K = Cin * kh * kw;
            detail::CRowMajorMap<S> wmat(weight.data(), Cout, K);
            detail::MatX<S> cols, dcols;
            for (std::int64_t n = 0; n < N; ++n) {
                detail::CColMajorMap<S> gmat(out.grad_data() + n * Cout * M, M, Cout);
                if (bias.tracked())
                    for (std::int64_t co = 0; co < Cout; ++co)
                        bias.grad_data()[co] += gmat.col(co).sum();
                if (weight.tracked()) {
                    detail::im2col(input.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride,
                                   padding, Ho, Wo, cols);
                    detail::RowMajorMap<S> wg(weight.grad_data(), Cout, K);
                    wg.noalias() += gmat.transpose() * cols;
                }
                if (input.tracked()) {
                    dcols.noalias() = gmat * wmat;
                    detail::col2im_add(dcols, Cin, H, W, kh, kw, stride, padding, Ho, Wo,
                                       input.grad_data() + n * Cin * H * W);
                }
            }
        });
    }
    return out;
}

// input [N,Cin,H,W], weight [Cin,Cout,kh,kw], bias [Cout] -> [N,Cout,Ho,Wo]
// Ho = (H-1)*stride - 2*padding + kh + output_padding. The forward pass is
// the adjoint of conv2d: it equals conv2d's backward-data for the same weight.
template <typename S>
Tensor<S> conv_transpose2d(Tape<S>* tape, const Tensor<S>& input, const Tensor<S>& weight,
                           const Tensor<S>& bias, std::int64_t stride, std::int64_t padding,
                           std::int64_t output_padding) {
    detail::check_conv_args("conv_transpose2d", input, weight, bias, stride, padding);
    if (output_padding < 0 || output_padding >= stride)
        throw UsageError("conv_transpose2d: output_padding must be in [0, stride)");
    const std::int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const std::int64_t Cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    if (weight.dim(0) != Cin)
        throw DimensionError("conv_transpose2d: weight expects " + std::to_string(weight.dim(0)) +
                             " input channels, input has " + std::to_string(Cin));
    if (bias.dim(0) != Cout) throw DimensionError("conv_transpose2d: bias size does not match Cout");

    const std::int64_t Ho = (H - 1) * stride - 2 * padding + kh + output_padding;
    const std::int64_t Wo = (W - 1) * stride - 2 * padding + kw + output_padding;
    if (Ho < 1 || Wo < 1) throw DimensionError("conv_transpose2d: empty output");
    const std::int64_t Mi = H * W, K = Cout * kh * kw;

    Tensor<S> out = Tensor<S>::zeros({N, Cout, Ho, Wo});
    detail::CRowMajorMap<S> wmat(weight.data(), Cin, K);
    detail::MatX<S> t;
    for (std::int64_t n = 0; n < N; ++n) {
        detail::CColMajorMap<S> xmat(input.data() + n * Cin * Mi, Mi, Cin);
        t.noalias() = xmat * wmat;
        detail::col2im_add(t, Cout, Ho, Wo, kh, kw, stride, padding, H, W,
                           out.data() + n * Cout * Ho * Wo);
        S* optr = out.data() + n * Cout * Ho * Wo;
        for (std::int64_t co = 0; co < Cout; ++co)
            Eigen::Map<ArrayX<S>>(optr + co * Ho * Wo, Ho * Wo) += bias.data()[co];
    }

    if (tape && detail::any_tracked<S>({&input, &weight, &bias})) {
        out.mark_tracked();
        tape->record(out, [input, weight, bias, out, stride, padding] {
            const std::int64_t N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
            const std::int64_t Cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
            const std::int64_t Ho = out.dim(2), Wo = out.dim(3);
            const std::int64_t Mi = H * W, K = Cout * kh * kw;
            detail::CRowMajorMap<S> wmat(weight.data(), Cin, K);
            detail::MatX<S> gcols;
            for (std::int64_t n = 0; n < N; ++n) {
                const S* gptr = out.grad_data() + n * Cout * Ho * Wo;
                if (bias.tracked())
                    for (std::int64_t co = 0; co < Cout; ++co)
                        bias.grad_data()[co] +=
                            Eigen::Map<const ArrayX<S>>(gptr + co * Ho * Wo, Ho * Wo).sum();
                if (input.tracked() || weight.tracked())
                    detail::im2col(gptr, Cout, Ho, Wo, kh, kw, stride, padding, H, W, gcols);
                if (input.tracked()) {
                    detail::ColMajorMap<S> ig(input.grad_data() + n * Cin * Mi, Mi, Cin);
                    ig.noalias() += gcols * wmat.transpose();
                }
                if (weight.tracked()) {
                    detail::CRowMajorMap<S> xmat(input.data() + n * Cin * Mi, Cin, Mi);
                    detail::RowMajorMap<S> wg(weight.grad_data(), Cin, K);
                    wg.noalias() += xmat * gcols;
                }
            }
        });
    }
    return out;
}

// Zero padding with independent amounts per side; backward is a crop.
template <typename S>
Tensor<S> zero_pad2d(Tape<S>* tape, const Tensor<S>& x, std::int64_t top, std::int64_t bottom,
                     std::int64_t left, std::int64_t right) {
    if (x.rank() != 4) throw DimensionError("zero_pad2d: input must be N,C,H,W");
    if (top < 0 || bottom < 0 || left < 0 || right < 0)
        throw UsageError("zero_pad2d: negative padding");
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::int64_t Ho = H + top + bottom, Wo = W + left + right;
    Tensor<S> out = Tensor<S>::zeros({N, C, Ho, Wo});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const S* src = x.data() + nc * H * W;
        S* dst = out.data() + nc * Ho * Wo;
        for (std::int64_t i = 0; i < H; ++i)
            std::copy(src + i * W, src + (i + 1) * W, dst + (i + top) * Wo + left);
    }
    if (tape && x.tracked()) {
        out.mark_tracked();
        tape->record(out, [x, out, top, left] {
            const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
            const std::int64_t Ho = out.dim(2), Wo = out.dim(3);
            for (std::int64_t nc = 0; nc < N * C; ++nc) {
                const S* g = out.grad_data() + nc * Ho * Wo;
                S* xg = x.grad_data() + nc * H * W;
                for (std::int64_t i = 0; i < H; ++i)
                    for (std::int64_t j = 0; j < W; ++j)
                        xg[i * W + j] += g[(i + top) * Wo + (j + left)];
            }
        });
    }
    return out;
}

}  // namespace antgan
