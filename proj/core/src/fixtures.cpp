#include "gridge/fixtures.hpp"

#include <cmath>

namespace gridge {

NullspaceSmaFixture nullspace_sma_fixture() {
    NullspaceSmaFixture f;
    f.w = Matrix::Zero(5, 5);
    f.w(0, 1) = 1.0;
    f.x = Matrix::Zero(5, 2);
    f.x(2, 0) = 1.0;
    f.x(3, 1) = 1.0;
    f.k = Matrix::Identity(2, 2);
    return f;
}

RaoZeroGammaFixture rao_zero_gamma_fixture() {
    RaoZeroGammaFixture f;
    f.x.resize(8, 2);
    for (Index i = 0; i < 8; ++i) {
        f.x(i, 0) = 1.0;
        f.x(i, 1) = static_cast<double>(i) - 3.5;
    }
    f.gamma_bar = Matrix::Zero(2, 2);
    f.delta_bar = Matrix::Zero(6, 6);
    for (Index i = 0; i < 6; ++i) {
        f.delta_bar(i, i) = 0.5 + 0.25 * static_cast<double>(i);
    }
    for (Index i = 0; i + 1 < 6; ++i) {
        f.delta_bar(i, i + 1) = 0.1;
        f.delta_bar(i + 1, i) = 0.1;
    }
    f.k = Matrix::Identity(2, 2);
    return f;
}

SurSharedDesignFixture sur_shared_design_fixture() {
    SurSharedDesignFixture f;
    f.x1.resize(6, 2);
    const double c = 1.0 / std::sqrt(6.0);
    for (Index i = 0; i < 6; ++i) {
        f.x1(i, 0) = c;
        f.x1(i, 1) = (i % 2 == 0 ? c : -c);
    }
    f.x2 = f.x1;
    f.k = Matrix::Zero(4, 4);
    return f;
}

SarLatticeFixture sar_lattice_fixture() {
    constexpr Index kRows = 5;
    constexpr Index kCols = 10;
    SarLatticeFixture f;
    f.w = row_normalize(grid_contiguity(kRows, kCols)).w;
    f.x.resize(kRows * kCols, 3);
    for (Index r = 0; r < kRows; ++r) {
        for (Index c = 0; c < kCols; ++c) {
            const Index i = r * kCols + c;
            f.x(i, 0) = 1.0;
            f.x(i, 1) = static_cast<double>(r) / (kRows - 1) - 0.5;
            f.x(i, 2) = static_cast<double>(c) / (kCols - 1) - 0.5;
        }
    }
    f.rho = 0.5;
    f.beta_true.resize(3);
    f.beta_true << 1.0, 0.5, -0.25;
    return f;
}

SerialIntraclassFixture serial_intraclass_fixture() {
    SerialIntraclassFixture f;
    f.a = serial_preset_matrix(SerialPreset::intra_class, 10);
    f.x = Matrix::Ones(10, 1);
    f.k = Matrix::Zero(1, 1);
    f.theta = 0.5;
    return f;
}

} // namespace gridge
