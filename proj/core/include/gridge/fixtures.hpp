#ifndef GRIDGE_FIXTURES_HPP
#define GRIDGE_FIXTURES_HPP

#include "gridge/models.hpp"
#include "gridge/ridge.hpp"
#include "gridge/spatial.hpp"
#include "gridge/types.hpp"

namespace gridge {

/// Moving-average instance built so the design sits in the null spaces of
/// W + W^T and W W^T: a single directed edge W = e1 e2^T on five regions,
/// design spanning {e3, e4}, K = I2. The estimators coincide at every
/// admissible rho.
struct NullspaceSmaFixture {
    Matrix w;
    Matrix x;
    Matrix k;
};
NullspaceSmaFixture nullspace_sma_fixture();

/// Mixed-effects instance of the reduced model (no design-aligned random
/// effect): the estimators coincide for every penalty and every DeltaBar.
struct RaoZeroGammaFixture {
    Matrix x;         // 8 x 2
    Matrix gamma_bar; // zero
    Matrix delta_bar; // fixed pd
    Matrix k;         // identity ridge penalty
};
RaoZeroGammaFixture rao_zero_gamma_fixture();

/// Two-equation instance with a shared design of orthonormal columns and
/// K = 0; the estimators coincide for every cross-covariance. The one-shot
/// product condition does not fire here (it cannot fire on any nonzero
/// full-rank pair), so this fixture is the honest coincidence witness.
struct SurSharedDesignFixture {
    Matrix x1; // 6 x 2, orthonormal columns
    Matrix x2; // same as x1
    Matrix k;  // zero
};
SurSharedDesignFixture sur_shared_design_fixture();

/// Generic spatial autoregressive instance on a 5 x 10 rook-adjacency grid:
/// row-normalized weights, intercept-plus-coordinates design, rho = 0.5.
/// The estimators differ; used for sampler and Monte Carlo exercises.
struct SarLatticeFixture {
    Matrix w;   // 50 x 50
    Matrix x;   // 50 x 3
    double rho; // 0.5
    Vector beta_true;
};
SarLatticeFixture sar_lattice_fixture();

/// Serial-correlation instance with the intra-class matrix and a
/// ones-column design, K = 0: A X lands in span(X), so the estimators
/// coincide for every admissible theta.
struct SerialIntraclassFixture {
    Matrix a;   // 10 x 10 intra-class
    Matrix x;   // ones column
    Matrix k;   // zero
    double theta; // reference value 0.5
};
SerialIntraclassFixture serial_intraclass_fixture();

} // namespace gridge

#endif
