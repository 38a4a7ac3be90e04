#include "gridge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gridge {

double Tolerances::effective_rank_rtol(Index rows, Index cols) const {
    if (rank_rtol > 0.0) {
        return rank_rtol;
    }
    const double dim = static_cast<double>(std::max<Index>({rows, cols, 1}));
    return dim * std::numeric_limits<double>::epsilon();
}

void Tolerances::validate() const {
    const bool rank_ok = rank_rtol >= 0.0 && std::isfinite(rank_rtol);
    const bool res_ok = residual_atol > 0.0 && std::isfinite(residual_atol);
    const bool psd_ok = psd_atol > 0.0 && std::isfinite(psd_atol);
    if (!rank_ok || !res_ok || !psd_ok) {
        throw InvalidInputError("tolerances must be positive and finite");
    }
}

double max_abs(const Matrix& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return m.cwiseAbs().maxCoeff();
}

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) {
        throw InvalidInputError(std::string(name) + " contains non-finite entries");
    }
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw ShapeError("vstack: column counts differ (" +
                         std::to_string(top.cols()) + " vs " +
                         std::to_string(bottom.cols()) + ")");
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

Index numerical_rank(const Matrix& m, const Tolerances& tol) {
    tol.validate();
    require_finite(m, "matrix");
    if (m.size() == 0) {
        return 0;
    }
    Eigen::BDCSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return 0;
    }
    const double cutoff = tol.effective_rank_rtol(m.rows(), m.cols()) * sv(0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            ++rank;
        }
    }
    return rank;
}

Matrix null_space_basis(const Matrix& x, const Tolerances& tol) {
    tol.validate();
    require_finite(x, "design matrix");
    const Index n = x.rows();
    const Index k = x.cols();
    if (n <= k || k == 0) {
        throw ShapeError("null_space_basis: need n > k >= 1, got " +
                         std::to_string(n) + " x " + std::to_string(k));
    }
    if (numerical_rank(x, tol) != k) {
        throw RankDeficiencyError("null_space_basis: design matrix is rank deficient");
    }
    // Unpivoted QR keeps the basis deterministic for a fixed input.
    Eigen::HouseholderQR<Matrix> qr(x);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    return q.rightCols(n - k);
}

Matrix orthonormal_col_basis(const Matrix& m, const Tolerances& tol) {
    tol.validate();
    require_finite(m, "matrix");
    if (m.size() == 0) {
        return Matrix(m.rows(), 0);
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return Matrix(m.rows(), 0);
    }
    const double cutoff = tol.effective_rank_rtol(m.rows(), m.cols()) * sv(0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            ++rank;
        }
    }
    return svd.matrixU().leftCols(rank);
}

Matrix orthogonal_projector(const Matrix& m, const Tolerances& tol) {
    Matrix basis = orthonormal_col_basis(m, tol);
    if (basis.cols() == 0) {
        return Matrix::Zero(m.rows(), m.rows());
    }
    return basis * basis.transpose();
}

Matrix least_squares_solve(const Matrix& b, const Matrix& a) {
    return b.completeOrthogonalDecomposition().solve(a);
}

SubsetResult col_space_subset(const Matrix& a, const Matrix& b, const Tolerances& tol) {
    tol.validate();
    require_finite(a, "left matrix");
    require_finite(b, "right matrix");
    if (a.rows() != b.rows()) {
        throw ShapeError("col_space_subset: row counts differ (" +
                         std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
    }
    SubsetResult out;
    const Matrix projector = orthogonal_projector(b, tol);
    const Matrix residual_matrix = a - projector * a;
    out.residual = max_abs(residual_matrix) / std::max(1.0, max_abs(a));
    out.contained = out.residual <= tol.residual_atol;
    out.witness = least_squares_solve(b, a);
    return out;
}

bool col_space_subset_rank_based(const Matrix& a, const Matrix& b, const Tolerances& tol) {
    if (a.rows() != b.rows()) {
        throw ShapeError("col_space_subset_rank_based: row counts differ");
    }
    Matrix stacked(a.rows(), a.cols() + b.cols());
    stacked.leftCols(b.cols()) = b;
    stacked.rightCols(a.cols()) = a;
    return numerical_rank(stacked, tol) == numerical_rank(b, tol);
}

EqualityResult col_space_equal(const Matrix& a, const Matrix& b, const Tolerances& tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("col_space_equal: shapes differ");
    }
    SubsetResult forward = col_space_subset(a, b, tol);
    SubsetResult backward = col_space_subset(b, a, tol);

    EqualityResult out;
    out.residual_forward = forward.residual;
    out.residual_backward = backward.residual;
    out.equal = forward.contained && backward.contained;
    out.witness = forward.witness;
    if (out.equal && out.witness.size() > 0) {
        Eigen::BDCSVD<Matrix> svd(out.witness);
        const Vector& sv = svd.singularValues();
        out.witness_min_sv = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
    }
    return out;
}

namespace {

Matrix symmetrized_or_throw(const Matrix& m, const Tolerances& tol) {
    tol.validate();
    require_finite(m, "matrix");
    if (m.rows() != m.cols()) {
        throw ShapeError("definiteness test needs a square matrix");
    }
    const double asymmetry = max_abs(m - m.transpose());
    if (asymmetry > tol.residual_atol * std::max(1.0, max_abs(m))) {
        throw SymmetryError("matrix is asymmetric beyond tolerance (max |M - M^T| = " +
                            std::to_string(asymmetry) + ")");
    }
    return 0.5 * (m + m.transpose());
}

} // namespace

bool is_psd(const Matrix& m, const Tolerances& tol) {
    const Matrix sym = symmetrized_or_throw(m, tol);
    if (sym.rows() == 0) {
        return true;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol.psd_atol;
}

bool is_pd(const Matrix& m, const Tolerances& tol) {
    const Matrix sym = symmetrized_or_throw(m, tol);
    if (sym.rows() == 0) {
        return true;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > tol.psd_atol;
}

} // namespace gridge
