#ifndef GRIDGE_IO_HPP
#define GRIDGE_IO_HPP

#include <iosfwd>
#include <string>

#include "gridge/types.hpp"

namespace gridge {

/// Shared matrix file format: first line "<rows> <cols>", then row-major
/// whitespace-separated decimals; '#' starts a comment line. Parse errors
/// carry the offending line number.
Matrix read_matrix(const std::string& path);
Matrix parse_matrix(std::istream& in, const std::string& source_name);

/// Writes with 17 significant digits so that re-parsing is bit-identical.
void write_matrix(const std::string& path, const Matrix& m);
std::string format_matrix(const Matrix& m);

/// A vector file is a matrix file with one column (or a single row, which is
/// transposed on read).
Vector read_vector(const std::string& path);
void write_vector(const std::string& path, const Vector& v);

/// Round-trip-safe decimal formatting (17 significant digits).
std::string format_g17(double value);

/// Human-readable formatting (6 significant digits).
std::string format_g6(double value);

} // namespace gridge

#endif
