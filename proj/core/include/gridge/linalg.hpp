#ifndef GRIDGE_LINALG_HPP
#define GRIDGE_LINALG_HPP

#include "gridge/types.hpp"

namespace gridge {

/// Number of singular values above rank_rtol * sigma_max; 0 for the zero matrix.
Index numerical_rank(const Matrix& m, const Tolerances& tol = {});

/// Orthonormal basis Z of the orthogonal complement of the column space of x.
///
/// x must be n x k with full column rank and n > k. The result is n x (n-k)
/// with X^T Z = 0 and Z^T Z = I. Uses unpivoted Householder QR, so the basis
/// is identical on every call with the same input.
Matrix null_space_basis(const Matrix& x, const Tolerances& tol = {});

/// Orthonormal basis of the column space of m (rank-revealing, via SVD).
Matrix orthonormal_col_basis(const Matrix& m, const Tolerances& tol = {});

/// Symmetric idempotent projector onto the column space of m.
Matrix orthogonal_projector(const Matrix& m, const Tolerances& tol = {});

/// Minimum-norm least-squares solution G of b * G = a.
Matrix least_squares_solve(const Matrix& b, const Matrix& a);

struct SubsetResult {
    bool contained = false;
    double residual = 0.0; // max-abs of (I - P_b) a, scaled by max(1, max_abs(a))
    Matrix witness;        // G with a ~ b G (least squares)
};

/// Tests span(a) subseteq span(b) via the projector residual.
SubsetResult col_space_subset(const Matrix& a, const Matrix& b,
                              const Tolerances& tol = {});

/// Secondary rank-based subset test: rank([b a]) == rank(b).
bool col_space_subset_rank_based(const Matrix& a, const Matrix& b,
                                 const Tolerances& tol = {});

struct EqualityResult {
    bool equal = false;
    double residual_forward = 0.0;  // a against span(b)
    double residual_backward = 0.0; // b against span(a)
    Matrix witness;                 // G with a ~ b G
    double witness_min_sv = 0.0;    // nonsingularity certificate when equal
};

/// Tests span(a) == span(b); a and b must have identical shapes.
EqualityResult col_space_equal(const Matrix& a, const Matrix& b,
                               const Tolerances& tol = {});

/// Eigenvalue tests on the symmetrized input. Asymmetry beyond
/// residual_atol (relative to max(1, max_abs)) raises SymmetryError.
bool is_psd(const Matrix& m, const Tolerances& tol = {});
bool is_pd(const Matrix& m, const Tolerances& tol = {});

} // namespace gridge

#endif
