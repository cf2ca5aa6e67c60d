#include "hgcnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hgcnn {

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (int p = 0; p < a.rows(); ++p)
        for (int q = p + 1; q < a.cols(); ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
}

}  // namespace

Eigendecomposition symmetric_eigendecomposition(const Matrix& m, double tol) {
    const int n = static_cast<int>(m.rows());
    if (n < 1 || m.cols() != n)
        throw std::invalid_argument("symmetric_eigendecomposition: matrix must be square");
    if (symmetry_defect(m) > 1e-10)
        throw std::invalid_argument("symmetric_eigendecomposition: matrix is not symmetric");

    Matrix a = m;
    Matrix v = Matrix::Identity(n, n);
    const double norm = std::max(m.norm(), 1e-300);
    const double target = tol * norm;
    constexpr int kMaxSweeps = 100;

    double off = offdiag_frobenius(a);
    int sweep = 0;
    while (off > target && sweep < kMaxSweeps) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // Rotation angle per the classical two-sided Jacobi step.
                const double tau = (aqq - app) / (2.0 * apq);
                double t;
                if (tau >= 0.0)
                    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
                else
                    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
        off = offdiag_frobenius(a);
        ++sweep;
    }
    if (off > target)
        throw std::runtime_error("symmetric_eigendecomposition: no convergence after " +
                                 std::to_string(kMaxSweeps) +
                                 " sweeps, off-diagonal residual " + std::to_string(off));

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](int i, int j) { return a(i, i) < a(j, j); });

    Eigendecomposition eig;
    eig.eigenvalues = Vector(n);
    eig.eigenvectors = Matrix(n, n);
    for (int i = 0; i < n; ++i) {
        eig.eigenvalues(i) = a(order[i], order[i]);
        Vector col = v.col(order[i]);
        // Sign convention: largest-magnitude entry positive, first on ties.
        int arg = 0;
        double best = std::abs(col(0));
        for (int k = 1; k < n; ++k) {
            const double mag = std::abs(col(k));
            if (mag > best) {
                best = mag;
                arg = k;
            }
        }
        if (col(arg) < 0.0) col = -col;
        eig.eigenvectors.col(i) = col;
    }
    return eig;
}

void ensure_eigendecomposition(HypergraphLaplacian& L) {
    if (L.eigenvalues && L.eigenvectors) return;
    Eigendecomposition eig = symmetric_eigendecomposition(L.matrix);
    L.eigenvalues = std::move(eig.eigenvalues);
    L.eigenvectors = std::move(eig.eigenvectors);
}

Matrix hgft(const HypergraphLaplacian& L, const Matrix& x) {
    if (!L.eigenvectors) throw std::invalid_argument("hgft: eigendecomposition not present");
    if (L.eigenvectors->rows() != x.rows())
        throw std::invalid_argument("hgft: signal has " + std::to_string(x.rows()) +
                                    " rows, Laplacian has " + std::to_string(L.eigenvectors->rows()));
    return L.eigenvectors->transpose() * x;
}

Matrix inverse_hgft(const HypergraphLaplacian& L, const Matrix& x_hat) {
    if (!L.eigenvectors)
        throw std::invalid_argument("inverse_hgft: eigendecomposition not present");
    if (L.eigenvectors->cols() != x_hat.rows())
        throw std::invalid_argument("inverse_hgft: coefficient/basis size mismatch");
    return *L.eigenvectors * x_hat;
}

double chebyshev_eval_scalar(const SpectralFilter& f, double lambda, double lambda_max) {
    const int K = f.order();
    const double lam = f.rescale_spectrum ? 2.0 * lambda / lambda_max - 1.0 : lambda;
    double tkm2 = 1.0;
    double acc = f.coefficients[0];
    if (K == 1) return acc;
    double tkm1 = lam;
    acc += f.coefficients[1] * tkm1;
    for (int k = 2; k < K; ++k) {
        const double tk = 2.0 * lam * tkm1 - tkm2;
        acc += f.coefficients[k] * tk;
        tkm2 = tkm1;
        tkm1 = tk;
    }
    return acc;
}

Matrix spectral_filter_exact(const HypergraphLaplacian& L, const Matrix& x,
                             const SpectralFilter& f) {
    if (f.order() < 1) throw std::invalid_argument("spectral_filter_exact: filter order < 1");
    if (!L.eigenvalues || !L.eigenvectors)
        throw std::invalid_argument("spectral_filter_exact: eigendecomposition not present");
    const double lmax =
        f.rescale_spectrum ? (f.lambda_max > 0.0 ? f.lambda_max : estimate_lambda_max(L.matrix))
                           : 0.0;
    Matrix x_hat = hgft(L, x);
    for (int i = 0; i < x_hat.rows(); ++i)
        x_hat.row(i) *= chebyshev_eval_scalar(f, (*L.eigenvalues)(i), lmax);
    return inverse_hgft(L, x_hat);
}

Matrix chebyshev_filter(const Matrix& L, const Matrix& x, const SpectralFilter& f) {
    const int K = f.order();
    if (K < 1) throw std::invalid_argument("chebyshev_filter: filter order < 1");
    if (L.rows() != x.rows())
        throw std::invalid_argument("chebyshev_filter: signal/Laplacian size mismatch");

    // T_k is evaluated on L directly, or on 2L/lambda_max - I when rescaling.
    const bool rescale = f.rescale_spectrum;
    const double lmax = rescale ? (f.lambda_max > 0.0 ? f.lambda_max : estimate_lambda_max(L)) : 0.0;
    const auto apply = [&](const Matrix& s) -> Matrix {
        if (!rescale) return L * s;
        return (2.0 / lmax) * (L * s) - s;
    };

    Matrix y = f.coefficients[0] * x;
    if (K == 1) return y;
    Matrix tkm2 = x;
    Matrix tkm1 = apply(x);
    y += f.coefficients[1] * tkm1;
    for (int k = 2; k < K; ++k) {
        Matrix tk = 2.0 * apply(tkm1) - tkm2;
        y += f.coefficients[k] * tk;
        tkm2 = std::move(tkm1);
        tkm1 = std::move(tk);
    }
    return y;
}

std::vector<Matrix> chebyshev_basis(const Matrix& L, const Matrix& x, int order, bool rescale,
                                    double lambda_max) {
    if (order < 1) throw std::invalid_argument("chebyshev_basis: order < 1");
    if (L.rows() != x.rows())
        throw std::invalid_argument("chebyshev_basis: signal/Laplacian size mismatch");
    const double lmax = rescale ? (lambda_max > 0.0 ? lambda_max : estimate_lambda_max(L)) : 0.0;
    const auto apply = [&](const Matrix& s) -> Matrix {
        if (!rescale) return L * s;
        return (2.0 / lmax) * (L * s) - s;
    };

    std::vector<Matrix> terms;
    terms.reserve(order);
    terms.push_back(x);
    if (order == 1) return terms;
    terms.push_back(apply(x));
    for (int k = 2; k < order; ++k)
        terms.push_back(2.0 * apply(terms[k - 1]) - terms[k - 2]);
    return terms;
}

double estimate_lambda_max(const Matrix& L) {
    const int n = static_cast<int>(L.rows());
    Vector v = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    for (int it = 0; it < 64; ++it) {
        Vector w = L * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        lambda = norm;
    }
    // Small headroom so the rescaled spectrum stays inside [-1, 1].
    return lambda * (1.0 + 1e-9);
}

}  // namespace hgcnn
