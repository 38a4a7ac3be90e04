#include "gridge/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gridge {

namespace {

bool comment_or_blank(const std::string& line) {
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

Matrix parse_matrix(std::istream& in, const std::string& source_name) {
    std::string line;
    long line_no = 0;

    Index rows = 0;
    Index cols = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (comment_or_blank(line)) {
            continue;
        }
        std::istringstream header(line);
        if (!(header >> rows >> cols) || rows < 1 || cols < 1) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": expected header \"<rows> <cols>\"");
        }
        std::string extra;
        if (header >> extra) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": trailing tokens after header");
        }
        have_header = true;
        break;
    }
    if (!have_header) {
        throw ParseError(source_name + ": missing matrix header");
    }

    Matrix m(rows, cols);
    Index filled = 0;
    const Index total = rows * cols;
    while (filled < total && std::getline(in, line)) {
        ++line_no;
        if (comment_or_blank(line)) {
            continue;
        }
        std::istringstream values(line);
        double v = 0.0;
        while (values >> v) {
            if (filled >= total) {
                throw ParseError(source_name + ":" + std::to_string(line_no) +
                                 ": more entries than rows*cols");
            }
            m(filled / cols, filled % cols) = v;
            ++filled;
        }
        if (!values.eof()) {
            throw ParseError(source_name + ":" + std::to_string(line_no) +
                             ": not a number");
        }
    }
    if (filled < total) {
        throw ParseError(source_name + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(total) + " entries, found " +
                         std::to_string(filled));
    }
    if (!m.allFinite()) {
        throw ParseError(source_name + ": matrix contains non-finite entries");
    }
    return m;
}

Matrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open file");
    }
    return parse_matrix(in, path);
}

std::string format_g17(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string format_g6(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.6g", value);
    return buffer;
}

std::string format_matrix(const Matrix& m) {
    std::ostringstream out;
    out << m.rows() << " " << m.cols() << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) {
                out << " ";
            }
            out << format_g17(m(i, j));
        }
        out << "\n";
    }
    return out.str();
}

void write_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw ParseError(path + ": cannot open file for writing");
    }
    out << format_matrix(m);
    if (!out) {
        throw ParseError(path + ": write failed");
    }
}

Vector read_vector(const std::string& path) {
    Matrix m = read_matrix(path);
    if (m.cols() == 1) {
        return m.col(0);
    }
    if (m.rows() == 1) {
        return m.row(0).transpose();
    }
    throw ParseError(path + ": expected a vector (one row or one column), got " +
                     std::to_string(m.rows()) + " x " + std::to_string(m.cols()));
}

void write_vector(const std::string& path, const Vector& v) {
    write_matrix(path, v);
}

} // namespace gridge
