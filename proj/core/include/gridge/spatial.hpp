#ifndef GRIDGE_SPATIAL_HPP
#define GRIDGE_SPATIAL_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "gridge/types.hpp"

namespace gridge {

/// Binary, symmetric, zero-diagonal adjacency of regions.
class ContiguityMatrix {
public:
    explicit ContiguityMatrix(Matrix entries);

    Index size() const { return entries_.rows(); }
    const Matrix& entries() const { return entries_; }

private:
    Matrix entries_;
};

/// Row-normalized spatial weights. Rows of regions without neighbors stay
/// zero and are flagged rather than rejected.
struct WeightMatrix {
    Matrix w;
    Vector row_sums;
    std::vector<Index> isolated_rows;
};

/// w_ij = c_ij / (number of neighbors of region i).
WeightMatrix row_normalize(const ContiguityMatrix& c);

/// Maximum absolute row sum; equals 1 when every region has a neighbor.
double inf_norm(const Matrix& w);

/// |rho| * inf_norm(w) < 1, which guarantees both spatial covariance forms
/// are positive definite.
bool pd_guarantee(const Matrix& w, double rho);

/// Rook-adjacency contiguity of a rows x cols grid of regions.
ContiguityMatrix grid_contiguity(Index rows, Index cols);

/// Parses the edge-list format: header "n <count>", then one "i j" pair per
/// line (1-based). Also accepts a dense 0/1 matrix in the shared matrix
/// format. Raises ParseError with the offending line number.
ContiguityMatrix read_contiguity(const std::string& path);
ContiguityMatrix parse_contiguity(std::istream& in, const std::string& source_name);

/// The cyclic instance on five regions where the covariance-aware and
/// covariance-free estimators coincide although the one-shot inclusion
/// condition fails: W is the 5-cycle shift (W^5 = I), the design holds the
/// first real Fourier pair, rho = -2 cos(2 pi / 5) and K = I_2. Note W is a
/// permutation matrix, not row-normalized symmetric contiguity, so it lives
/// here as a raw matrix fixture.
struct CounterexampleInstance {
    Matrix w;
    Matrix x;
    double rho;
    Matrix k;
};

CounterexampleInstance counterexample_instance();

} // namespace gridge

#endif
