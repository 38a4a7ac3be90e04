#include "gridge/spatial.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gridge/io.hpp"

namespace gridge {

ContiguityMatrix::ContiguityMatrix(Matrix entries) : entries_(std::move(entries)) {
    require_finite(entries_, "contiguity matrix");
    if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
        throw ShapeError("contiguity matrix must be square and nonempty");
    }
    for (Index i = 0; i < entries_.rows(); ++i) {
        if (entries_(i, i) != 0.0) {
            throw InvalidInputError("contiguity matrix has a nonzero diagonal at region " +
                                    std::to_string(i + 1));
        }
        for (Index j = 0; j < entries_.cols(); ++j) {
            const double v = entries_(i, j);
            if (v != 0.0 && v != 1.0) {
                throw InvalidInputError("contiguity entries must be 0 or 1, found " +
                                        std::to_string(v));
            }
            if (entries_(i, j) != entries_(j, i)) {
                throw InvalidInputError("contiguity must be symmetric (regions " +
                                        std::to_string(i + 1) + ", " +
                                        std::to_string(j + 1) + ")");
            }
        }
    }
}

WeightMatrix row_normalize(const ContiguityMatrix& c) {
    const Matrix& entries = c.entries();
    const Index n = c.size();
    WeightMatrix out;
    out.w = Matrix::Zero(n, n);
    out.row_sums = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        const double neighbors = entries.row(i).sum();
        if (neighbors == 0.0) {
            out.isolated_rows.push_back(i);
            continue;
        }
        out.w.row(i) = entries.row(i) / neighbors;
        out.row_sums(i) = out.w.row(i).sum();
    }
    return out;
}

double inf_norm(const Matrix& w) {
    if (w.size() == 0) {
        return 0.0;
    }
    return w.cwiseAbs().rowwise().sum().maxCoeff();
}

bool pd_guarantee(const Matrix& w, double rho) {
    return std::abs(rho) * inf_norm(w) < 1.0;
}

ContiguityMatrix grid_contiguity(Index rows, Index cols) {
    if (rows < 1 || cols < 1 || rows * cols < 2) {
        throw InvalidInputError("grid needs at least two regions");
    }
    const Index n = rows * cols;
    Matrix c = Matrix::Zero(n, n);
    auto id = [cols](Index r, Index col) { return r * cols + col; };
    for (Index r = 0; r < rows; ++r) {
        for (Index col = 0; col < cols; ++col) {
            if (r + 1 < rows) {
                c(id(r, col), id(r + 1, col)) = 1.0;
                c(id(r + 1, col), id(r, col)) = 1.0;
            }
            if (col + 1 < cols) {
                c(id(r, col), id(r, col + 1)) = 1.0;
                c(id(r, col + 1), id(r, col)) = 1.0;
            }
        }
    }
    return ContiguityMatrix(std::move(c));
}

namespace {

bool is_comment_or_blank(const std::string& line) {
    for (char ch : line) {
        if (ch == '#') {
            return true;
        }
        if (!std::isspace(static_cast<unsigned char>(ch))) {
            return false;
        }
    }
    return true;
}

} // namespace

ContiguityMatrix parse_contiguity(std::istream& in, const std::string& source_name) {
    std::string line;
    long line_no = 0;
    // Find the header; a leading "n" marks the edge-list format, a number
    // marks the dense matrix format.
    while (std::getline(in, line)) {
        ++line_no;
        if (!is_comment_or_blank(line)) {
            break;
        }
    }
    if (in.fail() && line.empty()) {
        throw ParseError(source_name + ": empty contiguity file");
    }

    std::istringstream header(line);
    std::string first_token;
    header >> first_token;
    if (first_token != "n") {
        // Dense 0/1 matrix in the shared format; re-parse from the top.
        in.clear();
        in.seekg(0);
        return ContiguityMatrix(parse_matrix(in, source_name));
    }

    Index n = 0;
    if (!(header >> n) || n < 1) {
        throw ParseError(source_name + ":" + std::to_string(line_no) +
                         ": header must be \"n <count>\"");
    }
    Matrix c = Matrix::Zero(n, n);
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) {
            continue;
        }
        std::istringstream edge(line);
        Index i = 0;
        Index j = 0;
        if (!(edge >> i >> j)) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": expected \"i j\" edge");
        }
        std::string extra;
        if (edge >> extra) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": trailing tokens after edge");
        }
        if (i < 1 || i > n || j < 1 || j > n || i == j) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": edge (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") out of range for n = " + std::to_string(n));
        }
        c(i - 1, j - 1) = 1.0;
        c(j - 1, i - 1) = 1.0;
    }
    return ContiguityMatrix(std::move(c));
}

ContiguityMatrix read_contiguity(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }
    return parse_contiguity(in, path);
}

CounterexampleInstance counterexample_instance() {
    const double theta = 2.0 * std::numbers::pi / 5.0;
    CounterexampleInstance inst;
    inst.w = Matrix::Zero(5, 5);
    for (Index i = 0; i < 5; ++i) {
        inst.w(i, (i + 1) % 5) = 1.0;
    }
    inst.x.resize(5, 2);
    for (Index m = 0; m < 5; ++m) {
        inst.x(m, 0) = std::cos(static_cast<double>(m) * theta);
        inst.x(m, 1) = std::sin(static_cast<double>(m) * theta);
    }
    inst.x(0, 0) = 1.0;
    inst.x(0, 1) = 0.0;
    inst.rho = -2.0 * std::cos(theta);
    inst.k = Matrix::Identity(2, 2);
    return inst;
}

} // namespace gridge
