#include "gridge/ridge.hpp"

#include <cmath>
#include <string>

#include "gridge/linalg.hpp"

namespace gridge {

Penalty Penalty::zero() {
    return Penalty{};
}

Penalty Penalty::ordinary_ridge(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw PenaltyError("ordinary ridge needs a positive finite lambda");
    }
    Penalty p;
    p.kind_ = PenaltyKind::ordinary_ridge;
    p.lambda_ = lambda;
    return p;
}

Penalty Penalty::shrinkage(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw PenaltyError("shrinkage needs a positive finite delta");
    }
    Penalty p;
    p.kind_ = PenaltyKind::shrinkage;
    p.delta_ = delta;
    return p;
}

Penalty Penalty::custom(Matrix k) {
    Penalty p;
    p.kind_ = PenaltyKind::custom;
    p.custom_ = std::move(k);
    return p;
}

namespace {

// Phi^{-1} M through a Cholesky factorization, never an explicit inverse.
Matrix pd_solve(const Matrix& phi, const Matrix& rhs, const char* what) {
    const Matrix sym = 0.5 * (phi + phi.transpose());
    Eigen::LLT<Matrix> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw InvalidInputError(std::string(what) + " is not positive definite");
    }
    return llt.solve(rhs);
}

} // namespace

Matrix Penalty::materialize(const Matrix& x, const Matrix& phi, const Tolerances& tol) const {
    tol.validate();
    const Index k = x.cols();
    switch (kind_) {
    case PenaltyKind::zero:
        return Matrix::Zero(k, k);
    case PenaltyKind::ordinary_ridge:
        return lambda_ * Matrix::Identity(k, k);
    case PenaltyKind::shrinkage: {
        require_finite(x, "design matrix");
        if (phi.rows() != x.rows() || phi.cols() != x.rows()) {
            throw ShapeError("shrinkage penalty: phi must be n x n");
        }
        const Matrix phi_inv_x = pd_solve(phi, x, "shrinkage phi");
        Matrix out = delta_ * (x.transpose() * phi_inv_x);
        return 0.5 * (out + out.transpose());
    }
    case PenaltyKind::custom: {
        if (custom_.rows() != k || custom_.cols() != k) {
            throw PenaltyError("custom penalty has shape " + std::to_string(custom_.rows()) +
                               " x " + std::to_string(custom_.cols()) + ", expected " +
                               std::to_string(k) + " x " + std::to_string(k));
        }
        bool psd = false;
        try {
            psd = is_psd(custom_, tol);
        } catch (const SymmetryError&) {
            throw PenaltyError("custom penalty is not symmetric within tolerance");
        }
        if (!psd) {
            throw PenaltyError("custom penalty is not positive semidefinite");
        }
        return custom_;
    }
    }
    throw InvalidInputError("unknown penalty kind");
}

Matrix Penalty::materialize(const Matrix& x, const Tolerances& tol) const {
    return materialize(x, Matrix::Identity(x.rows(), x.rows()), tol);
}

void GlmInstance::validate(const Tolerances& tol) const {
    require_finite(x, "design matrix");
    require_finite(omega, "omega");
    if (omega.rows() != x.rows() || omega.cols() != x.rows()) {
        throw ShapeError("omega must be n x n with n = rows of X");
    }
    if (y && y->size() != x.rows()) {
        throw ShapeError("response length does not match the design");
    }
    if (sigma2 && !(*sigma2 > 0.0)) {
        throw InvalidInputError("sigma2 must be positive");
    }
    if (numerical_rank(x, tol) != x.cols()) {
        throw RankDeficiencyError("design matrix is rank deficient");
    }
    if (!is_pd(omega, tol)) {
        throw InvalidInputError("omega is not positive definite");
    }
}

Matrix gr_hat_operator(const Matrix& x, const Matrix& phi, const Matrix& k,
                       const Tolerances& tol) {
    tol.validate();
    require_finite(x, "design matrix");
    require_finite(phi, "phi");
    require_finite(k, "penalty");
    const Index n = x.rows();
    const Index p = x.cols();
    if (phi.rows() != n || phi.cols() != n) {
        throw ShapeError("phi must be n x n");
    }
    if (k.rows() != p || k.cols() != p) {
        throw ShapeError("penalty must be k x k");
    }
    if (numerical_rank(x, tol) != p) {
        throw RankDeficiencyError("design matrix is rank deficient");
    }

    const Matrix phi_inv_x = pd_solve(phi, x, "phi");
    Matrix bracket = x.transpose() * phi_inv_x + k;
    bracket = 0.5 * (bracket + bracket.transpose());
    Eigen::LLT<Matrix> llt(bracket);
    if (llt.info() != Eigen::Success) {
        // Cannot happen for full-rank X, pd Phi, psd K; signals a
        // tolerance or conditioning failure.
        throw SingularSystemError("X^T Phi^{-1} X + K is numerically singular");
    }
    return llt.solve(phi_inv_x.transpose());
}

Vector gr_estimate(const Matrix& x, const Matrix& phi, const Matrix& k,
                   const Vector& y, const Tolerances& tol) {
    if (y.size() != x.rows()) {
        throw ShapeError("response length does not match the design");
    }
    return gr_hat_operator(x, phi, k, tol) * y;
}

Vector gr_estimate(const GlmInstance& inst, const Matrix& phi, const Matrix& k,
                   const Tolerances& tol) {
    if (!inst.y) {
        throw MissingDataError("instance has no response vector");
    }
    return gr_estimate(inst.x, phi, k, *inst.y, tol);
}

CoincidenceResult estimators_coincide(const Matrix& x, const Matrix& omega,
                                      const Matrix& k, const Tolerances& tol) {
    const Matrix h_omega = gr_hat_operator(x, omega, k, tol);
    const Matrix h_eye = gr_hat_operator(x, Matrix::Identity(x.rows(), x.rows()), k, tol);
    const double scale = std::max(max_abs(h_eye), 1e-300);
    CoincidenceResult out;
    out.residual = max_abs(h_omega - h_eye) / scale;
    out.coincide = out.residual <= tol.residual_atol;
    return out;
}

} // namespace gridge
