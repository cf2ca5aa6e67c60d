#include "hgcnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hgcnn/parallel.hpp"

namespace hgcnn {

DenseParam make_dense(int f1, int f2, Rng& rng) {
    DenseParam p;
    p.weights = xavier_init(f1, f2, rng);
    p.bias = Vector::Zero(f2);
    p.grad_weights = Matrix::Zero(f1, f2);
    p.grad_bias = Vector::Zero(f2);
    return p;
}

BatchNormParam make_batchnorm(int features) {
    BatchNormParam bn;
    bn.gamma = Vector::Ones(features);
    bn.beta = Vector::Zero(features);
    bn.grad_gamma = Vector::Zero(features);
    bn.grad_beta = Vector::Zero(features);
    bn.running_mean = Vector::Zero(features);
    bn.running_var = Vector::Ones(features);
    return bn;
}

HyperConvLayer make_hyperconv(const std::string& name, int f1, int f2, int K, bool rescale,
                              double lambda_max, bool use_batchnorm, Rng& rng) {
    if (K < 1) throw std::invalid_argument("make_hyperconv: filter order < 1");
    HyperConvLayer layer;
    layer.name = name;
    layer.filter.coefficients.assign(K, 1.0);
    layer.filter.rescale_spectrum = rescale;
    layer.filter.lambda_max = lambda_max;
    layer.grad_theta.assign(K, 0.0);
    layer.dense = make_dense(f1, f2, rng);
    layer.use_batchnorm = use_batchnorm;
    if (use_batchnorm) layer.bn = make_batchnorm(f2);
    return layer;
}

namespace {

// T_k terms for one sample; a null Laplacian means "no graph", which is only
// meaningful for an order-1 filter (the term list is just {x}).
std::vector<Matrix> sample_basis(const HyperConvLayer& layer, const Matrix* L, const Matrix& x) {
    const int K = layer.filter.order();
    if (L == nullptr) {
        if (K != 1)
            throw std::invalid_argument("hyperconv: graph-free layer '" + layer.name +
                                        "' requires filter order 1");
        return {x};
    }
    return chebyshev_basis(*L, x, K, layer.filter.rescale_spectrum, layer.filter.lambda_max);
}

Matrix weighted_sum(const std::vector<Matrix>& terms, const std::vector<double>& theta) {
    Matrix acc = theta[0] * terms[0];
    for (std::size_t k = 1; k < terms.size(); ++k) acc += theta[k] * terms[k];
    return acc;
}

}  // namespace

std::vector<Matrix> hyperconv_forward_batch(HyperConvLayer& layer,
                                            const std::vector<const Matrix*>& laplacians,
                                            const std::vector<Matrix>& inputs, bool training,
                                            HyperConvCache* cache) {
    const int B = static_cast<int>(inputs.size());
    if (B == 0) throw std::invalid_argument("hyperconv_forward: empty batch");
    if (laplacians.size() != inputs.size())
        throw std::invalid_argument("hyperconv_forward: batch size mismatch");
    const int f1 = layer.dense.in_features();
    const int f2 = layer.dense.out_features();
    for (const Matrix& x : inputs)
        if (x.cols() != f1)
            throw std::invalid_argument("hyperconv_forward: layer '" + layer.name + "' expects " +
                                        std::to_string(f1) + " input features, got " +
                                        std::to_string(x.cols()));

    std::vector<std::vector<Matrix>> terms(B);
    std::vector<Matrix> filtered(B);
    std::vector<Matrix> pre_bn(B);
    parallel_for(B, [&](int s) {
        terms[s] = sample_basis(layer, laplacians[s], inputs[s]);
        filtered[s] = weighted_sum(terms[s], layer.filter.coefficients);
        pre_bn[s] = (filtered[s] * layer.dense.weights).rowwise() +
                    layer.dense.bias.transpose();
    });

    Vector mean, var;
    std::vector<Matrix> normalized(B);
    std::vector<Matrix> pre_act(B);
    if (layer.use_batchnorm) {
        if (training) {
            // Statistics over every vertex of every sample, per feature.
            long total_rows = 0;
            Vector sum = Vector::Zero(f2);
            Vector sumsq = Vector::Zero(f2);
            for (int s = 0; s < B; ++s) {
                total_rows += pre_bn[s].rows();
                sum += pre_bn[s].colwise().sum().transpose();
                sumsq += pre_bn[s].array().square().colwise().sum().matrix().transpose();
            }
            const double inv_n = 1.0 / static_cast<double>(total_rows);
            mean = sum * inv_n;
            var = (sumsq * inv_n - mean.cwiseProduct(mean)).cwiseMax(0.0);
            layer.bn.running_mean =
                layer.bn.momentum * layer.bn.running_mean + (1.0 - layer.bn.momentum) * mean;
            layer.bn.running_var =
                layer.bn.momentum * layer.bn.running_var + (1.0 - layer.bn.momentum) * var;
        } else {
            mean = layer.bn.running_mean;
            var = layer.bn.running_var;
        }
        const Vector inv_std = (var.array() + layer.bn.epsilon).sqrt().inverse().matrix();
        parallel_for(B, [&](int s) {
            normalized[s] = (pre_bn[s].rowwise() - mean.transpose()) * inv_std.asDiagonal();
            pre_act[s] = (normalized[s] * layer.bn.gamma.asDiagonal()).rowwise() +
                         layer.bn.beta.transpose();
        });
    } else {
        pre_act = pre_bn;
    }

    std::vector<Matrix> outputs(B);
    for (int s = 0; s < B; ++s) {
        if (!is_finite(pre_act[s]))
            throw std::runtime_error("numerical blow-up in layer " + layer.name);
        outputs[s] = pre_act[s].cwiseMax(0.0);
    }

    if (cache) {
        cache->valid = true;
        cache->training = training;
        cache->cheb_terms = std::move(terms);
        cache->filtered = std::move(filtered);
        cache->normalized = std::move(normalized);
        cache->pre_activation = std::move(pre_act);
        cache->batch_mean = mean;
        cache->batch_var = var;
    }
    return outputs;
}

Matrix hyperconv_forward(HyperConvLayer& layer, const Matrix& laplacian, const Matrix& x,
                         bool training) {
    std::vector<const Matrix*> ls{&laplacian};
    std::vector<Matrix> xs{x};
    return hyperconv_forward_batch(layer, ls, xs, training, nullptr)[0];
}

std::vector<Matrix> hyperconv_backward_batch(HyperConvLayer& layer,
                                             const std::vector<const Matrix*>& laplacians,
                                             const std::vector<Matrix>& inputs,
                                             const HyperConvCache& cache,
                                             const std::vector<Matrix>& upstream) {
    if (!cache.valid)
        throw std::invalid_argument("hyperconv_backward: missing forward cache for layer '" +
                                    layer.name + "'");
    const int B = static_cast<int>(inputs.size());
    if (static_cast<int>(upstream.size()) != B ||
        static_cast<int>(cache.pre_activation.size()) != B)
        throw std::invalid_argument("hyperconv_backward: batch size mismatch");
    const int f2 = layer.dense.out_features();
    const int K = layer.filter.order();

    // ReLU mask, then (optionally) the batch-norm chain evaluated with the
    // statistics the forward pass actually used.
    std::vector<Matrix> g_u(B);
    parallel_for(B, [&](int s) {
        g_u[s] = (cache.pre_activation[s].array() > 0.0).select(upstream[s], 0.0);
    });

    std::vector<Matrix> g_z(B);
    if (layer.use_batchnorm) {
        if (!cache.training)
            throw std::invalid_argument(
                "hyperconv_backward: cache was produced by an inference-mode forward");
        long total_rows = 0;
        Vector s1 = Vector::Zero(f2);  // sum of g_zhat
        Vector s2 = Vector::Zero(f2);  // sum of g_zhat .* zhat
        std::vector<Matrix> g_zhat(B);
        for (int s = 0; s < B; ++s) {
            g_zhat[s] = g_u[s] * layer.bn.gamma.asDiagonal();
            total_rows += g_zhat[s].rows();
            s1 += g_zhat[s].colwise().sum().transpose();
            s2 += (g_zhat[s].array() * cache.normalized[s].array())
                      .colwise()
                      .sum()
                      .matrix()
                      .transpose();
            layer.bn.grad_beta += g_u[s].colwise().sum().transpose();
            layer.bn.grad_gamma += (g_u[s].array() * cache.normalized[s].array())
                                       .colwise()
                                       .sum()
                                       .matrix()
                                       .transpose();
        }
        const double n = static_cast<double>(total_rows);
        const Vector inv_std = (cache.batch_var.array() + layer.bn.epsilon).sqrt().inverse();
        parallel_for(B, [&](int s) {
            Matrix centered = n * g_zhat[s];
            centered.rowwise() -= s1.transpose();
            centered -= cache.normalized[s] * s2.asDiagonal();
            g_z[s] = (centered * inv_std.asDiagonal()) / n;
        });
    } else {
        g_z = g_u;
    }

    // Dense and filter gradients; per-sample partials are reduced in sample
    // order so results do not depend on the thread count.
    std::vector<Matrix> partial_gw(B);
    std::vector<Vector> partial_gb(B);
    std::vector<std::vector<double>> partial_gtheta(B);
    std::vector<Matrix> g_x(B);
    parallel_for(B, [&](int s) {
        partial_gw[s] = cache.filtered[s].transpose() * g_z[s];
        partial_gb[s] = g_z[s].colwise().sum().transpose();
        Matrix g_f = g_z[s] * layer.dense.weights.transpose();
        partial_gtheta[s].resize(K);
        for (int k = 0; k < K; ++k)
            partial_gtheta[s][k] = (cache.cheb_terms[s][k].array() * g_f.array()).sum();
        // T_k(L) is symmetric, so the adjoint of the filter is the filter.
        if (laplacians[s] == nullptr)
            g_x[s] = layer.filter.coefficients[0] * g_f;
        else
            g_x[s] = chebyshev_filter(*laplacians[s], g_f, layer.filter);
    });
    for (int s = 0; s < B; ++s) {
        layer.dense.grad_weights += partial_gw[s];
        layer.dense.grad_bias += partial_gb[s];
        for (int k = 0; k < K; ++k) layer.grad_theta[k] += partial_gtheta[s][k];
    }
    return g_x;
}

Matrix dense_forward(const DenseParam& p, const Matrix& x) {
    if (x.cols() != p.weights.rows())
        throw std::invalid_argument("dense_forward: feature size mismatch");
    return (x * p.weights).rowwise() + p.bias.transpose();
}

Matrix dense_backward(DenseParam& p, const Matrix& x, const Matrix& upstream) {
    if (upstream.rows() != x.rows() || upstream.cols() != p.weights.cols())
        throw std::invalid_argument("dense_backward: shape mismatch");
    p.grad_weights += x.transpose() * upstream;
    p.grad_bias += upstream.colwise().sum().transpose();
    return upstream * p.weights.transpose();
}

LossResult cross_entropy_loss(const Matrix& logits, const std::vector<int>& labels) {
    const int B = static_cast<int>(logits.rows());
    const int C = static_cast<int>(logits.cols());
    if (B == 0) throw std::invalid_argument("cross_entropy_loss: empty batch");
    if (static_cast<int>(labels.size()) != B)
        throw std::invalid_argument("cross_entropy_loss: labels/logits size mismatch");
    if (!is_finite(logits)) throw std::invalid_argument("cross_entropy_loss: non-finite logits");

    LossResult out;
    out.grad = Matrix(B, C);
    double total = 0.0;
    for (int i = 0; i < B; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= C)
            throw std::invalid_argument("cross_entropy_loss: label out of range");
        const double m = logits.row(i).maxCoeff();
        double z = 0.0;
        for (int c = 0; c < C; ++c) z += std::exp(logits(i, c) - m);
        const double log_z = std::log(z);
        total += log_z - (logits(i, y) - m);
        for (int c = 0; c < C; ++c)
            out.grad(i, c) = std::exp(logits(i, c) - m) / z;
        out.grad(i, y) -= 1.0;
    }
    out.loss = total / B;
    out.grad /= static_cast<double>(B);
    return out;
}

Matrix xavier_init(int f1, int f2, Rng& rng) {
    if (f1 < 1 || f2 < 1) throw std::invalid_argument("xavier_init: non-positive shape");
    const double bound = std::sqrt(6.0 / (f1 + f2));
    Matrix m(f1, f2);
    double* data = m.data();
    for (std::size_t i = 0; i < static_cast<std::size_t>(m.size()); ++i)
        data[i] = rng.uniform(-bound, bound);
    return m;
}

std::vector<ParamRef> collect_params(HyperConvLayer& layer) {
    std::vector<ParamRef> refs;
    refs.push_back({layer.name + ".theta", layer.filter.coefficients.data(),
                    layer.grad_theta.data(), layer.filter.coefficients.size()});
    refs.push_back({layer.name + ".weights", layer.dense.weights.data(),
                    layer.dense.grad_weights.data(),
                    static_cast<std::size_t>(layer.dense.weights.size())});
    refs.push_back({layer.name + ".bias", layer.dense.bias.data(), layer.dense.grad_bias.data(),
                    static_cast<std::size_t>(layer.dense.bias.size())});
    if (layer.use_batchnorm) {
        refs.push_back({layer.name + ".bn_gamma", layer.bn.gamma.data(),
                        layer.bn.grad_gamma.data(),
                        static_cast<std::size_t>(layer.bn.gamma.size())});
        refs.push_back({layer.name + ".bn_beta", layer.bn.beta.data(), layer.bn.grad_beta.data(),
                        static_cast<std::size_t>(layer.bn.beta.size())});
    }
    return refs;
}

std::vector<ParamRef> collect_params(DenseParam& p, const std::string& name) {
    std::vector<ParamRef> refs;
    refs.push_back({name + ".weights", p.weights.data(), p.grad_weights.data(),
                    static_cast<std::size_t>(p.weights.size())});
    refs.push_back({name + ".bias", p.bias.data(), p.grad_bias.data(),
                    static_cast<std::size_t>(p.bias.size())});
    return refs;
}

AdamState make_adam(const std::vector<ParamRef>& params, double lr) {
    AdamState state;
    state.lr = lr;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const ParamRef& p : params) {
        state.m.push_back(Vector::Zero(static_cast<long>(p.size)));
        state.v.push_back(Vector::Zero(static_cast<long>(p.size)));
    }
    return state;
}

void adam_step(AdamState& state, const std::vector<ParamRef>& params) {
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: state/parameter list mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        double* value = params[p].value;
        const double* grad = params[p].grad;
        Vector& m = state.m[p];
        Vector& v = state.v[p];
        for (std::size_t i = 0; i < params[p].size; ++i) {
            const double g = grad[i];
            if (!std::isfinite(g))
                throw std::runtime_error("adam_step: non-finite gradient in " + params[p].name);
            m(static_cast<long>(i)) = state.beta1 * m(static_cast<long>(i)) + (1.0 - state.beta1) * g;
            v(static_cast<long>(i)) = state.beta2 * v(static_cast<long>(i)) + (1.0 - state.beta2) * g * g;
            const double mhat = m(static_cast<long>(i)) / bc1;
            const double vhat = v(static_cast<long>(i)) / bc2;
            value[i] -= state.lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

double clip_global_norm(const std::vector<ParamRef>& params, double max_norm) {
    double sq = 0.0;
    for (const ParamRef& p : params)
        for (std::size_t i = 0; i < p.size; ++i) sq += p.grad[i] * p.grad[i];
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const ParamRef& p : params)
            for (std::size_t i = 0; i < p.size; ++i) p.grad[i] *= scale;
    }
    return norm;
}

}  // namespace hgcnn
