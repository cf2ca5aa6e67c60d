#pragma once

#include <vector>

#include "hgcnn/hypergraph.hpp"
#include "hgcnn/linalg.hpp"

namespace hgcnn {

/// Chebyshev filter g(lambda) = sum_{k<K} theta_k T_k(lambda). When
/// rescale_spectrum is set the polynomial argument is 2*lambda/lambda_max - 1,
/// mapping the spectrum into [-1,1]; off (the default) it is lambda itself,
/// which is safe for the hypergraph Laplacian whose spectrum lies in [0,1].
struct SpectralFilter {
    std::vector<double> coefficients;  // theta_0 .. theta_{K-1}
    bool rescale_spectrum = false;
    double lambda_max = 0.0;  // used only when rescale_spectrum; <=0 -> estimated

    int order() const { return static_cast<int>(coefficients.size()); }
};

struct Eigendecomposition {
    Vector eigenvalues;  // ascending
    Matrix eigenvectors;
};

/// Cyclic Jacobi rotations on a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm drops below tol * ||m||_F (default tol 1e-12),
/// capped at 100 sweeps. Eigenvalues come back ascending; each eigenvector is
/// sign-fixed so its largest-magnitude entry (first such on ties) is positive.
Eigendecomposition symmetric_eigendecomposition(const Matrix& m, double tol = 1e-12);

/// Fills in the Laplacian's eigenpair fields (no-op when already present).
void ensure_eigendecomposition(HypergraphLaplacian& L);

/// Hypergraph Fourier transform: x_hat = U^T x. Accepts a matrix of signals,
/// one column per channel.
Matrix hgft(const HypergraphLaplacian& L, const Matrix& x);
Matrix inverse_hgft(const HypergraphLaplacian& L, const Matrix& x_hat);

/// Exact spectral filtering y = U g(Lambda) U^T x, the oracle for the fast
/// path. Requires the eigendecomposition to be present.
Matrix spectral_filter_exact(const HypergraphLaplacian& L, const Matrix& x,
                             const SpectralFilter& f);

/// K-term Chebyshev filtering via the three-term recurrence on signal
/// matrices; never forms T_k(L) as a matrix. Cost is K dense mat-vecs.
Matrix chebyshev_filter(const Matrix& L, const Matrix& x, const SpectralFilter& f);

/// Scalar g(lambda) under the same rescaling convention as the matrix path.
double chebyshev_eval_scalar(const SpectralFilter& f, double lambda, double lambda_max);

/// The individual recurrence terms T_k(L) x for k = 0..order-1, in order;
/// chebyshev_filter is the coefficient-weighted sum of these. Kept separate
/// so callers that need the terms for gradients can cache them.
std::vector<Matrix> chebyshev_basis(const Matrix& L, const Matrix& x, int order, bool rescale,
                                    double lambda_max);

/// Largest eigenvalue estimate by power iteration with a fixed deterministic
/// start vector; used when a rescaling filter does not carry lambda_max.
double estimate_lambda_max(const Matrix& L);

}  // namespace hgcnn
