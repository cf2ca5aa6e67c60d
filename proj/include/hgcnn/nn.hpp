#pragma once

#include <string>
#include <vector>

#include "hgcnn/linalg.hpp"
#include "hgcnn/rng.hpp"
#include "hgcnn/spectral.hpp"

namespace hgcnn {

/// Learnable dense map y = x W + b with gradient buffers.
struct DenseParam {
    Matrix weights;  // F1 x F2
    Vector bias;     // F2
    Matrix grad_weights;
    Vector grad_bias;

    int in_features() const { return static_cast<int>(weights.rows()); }
    int out_features() const { return static_cast<int>(weights.cols()); }

    void zero_grad() {
        grad_weights.setZero();
        grad_bias.setZero();
    }
};

DenseParam make_dense(int f1, int f2, Rng& rng);

/// Per-feature batch normalization over the joint batch x vertex axis.
struct BatchNormParam {
    Vector gamma, beta;
    Vector grad_gamma, grad_beta;
    Vector running_mean, running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;

    void zero_grad() {
        grad_gamma.setZero();
        grad_beta.setZero();
    }
};

BatchNormParam make_batchnorm(int features);

/// One hypergraph convolution layer: Chebyshev filtering with learnable
/// coefficients, dense feature map, optional batch norm, ReLU.
struct HyperConvLayer {
    std::string name;
    SpectralFilter filter;  // learnable theta, one vector per layer
    std::vector<double> grad_theta;
    DenseParam dense;
    bool use_batchnorm = true;
    BatchNormParam bn;

    void zero_grad() {
        std::fill(grad_theta.begin(), grad_theta.end(), 0.0);
        dense.zero_grad();
        if (use_batchnorm) bn.zero_grad();
    }
};

HyperConvLayer make_hyperconv(const std::string& name, int f1, int f2, int K, bool rescale,
                              double lambda_max, bool use_batchnorm, Rng& rng);

/// Forward-pass cache for the exact backward path. Valid only for the batch
/// it was produced from.
struct HyperConvCache {
    bool valid = false;
    bool training = false;
    std::vector<std::vector<Matrix>> cheb_terms;  // per sample, T_k(L) x for k < K
    std::vector<Matrix> filtered;                 // per sample, sum_k theta_k T_k x
    std::vector<Matrix> normalized;               // per sample, BN z-hat (empty if BN off)
    std::vector<Matrix> pre_activation;           // per sample, input of ReLU
    Vector batch_mean, batch_var;                 // stats used by BN in training mode
};

/// y_s = ReLU(BN(cheb(L_s, x_s, theta) W + b)). BN statistics are taken over
/// all vertices of all samples in the batch when training, and from running
/// stats otherwise. Throws "numerical blow-up in layer <name>" when the
/// activations go non-finite.
std::vector<Matrix> hyperconv_forward_batch(HyperConvLayer& layer,
                                            const std::vector<const Matrix*>& laplacians,
                                            const std::vector<Matrix>& inputs, bool training,
                                            HyperConvCache* cache);

/// Single-sample convenience wrapper (inference-style BN).
Matrix hyperconv_forward(HyperConvLayer& layer, const Matrix& laplacian, const Matrix& x,
                         bool training = false);

/// Accumulates parameter gradients into the layer and returns per-sample
/// input gradients. Requires the cache of the matching forward call.
std::vector<Matrix> hyperconv_backward_batch(HyperConvLayer& layer,
                                             const std::vector<const Matrix*>& laplacians,
                                             const std::vector<Matrix>& inputs,
                                             const HyperConvCache& cache,
                                             const std::vector<Matrix>& upstream);

/// Dense layer over row-stacked features.
Matrix dense_forward(const DenseParam& p, const Matrix& x);
/// Accumulates grads; returns gradient with respect to x.
Matrix dense_backward(DenseParam& p, const Matrix& x, const Matrix& upstream);

struct LossResult {
    double loss = 0.0;
    Matrix grad;  // same shape as logits
};

/// Mean cross entropy of softmax(logits) against integer labels, stabilized
/// by max subtraction. grad is (softmax - onehot)/batch.
LossResult cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels);

/// Uniform Xavier/Glorot init on +-sqrt(6/(f1+f2)), filled in column-major
/// order so a fixed seed reproduces the matrix bit for bit.
Matrix xavier_init(int f1, int f2, Rng& rng);

/// Flat view of one parameter tensor and its gradient.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;
    std::size_t size = 0;
};

std::vector<ParamRef> collect_params(HyperConvLayer& layer);
std::vector<ParamRef> collect_params(DenseParam& p, const std::string& name);

struct AdamState {
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<Vector> m, v;  // aligned with the parameter list
};

AdamState make_adam(const std::vector<ParamRef>& params, double lr);

/// One bias-corrected Adam update. Throws on non-finite gradients.
void adam_step(AdamState& state, const std::vector<ParamRef>& params);

/// Scales all gradients by max_norm/||g|| when the global norm exceeds
/// max_norm; returns the norm before clipping.
double clip_global_norm(const std::vector<ParamRef>& params, double max_norm);

}  // namespace hgcnn
