#pragma once
// Binary matrix container, CSV export and grey-scale rasters.

#include "itomc/grid_fem.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace itomc {

/// Container kinds; values are part of the file format.
enum class FileKind : std::uint32_t { generic = 0, dtn = 1, albedo = 2, field = 3 };

struct ItomFile {
    FileKind kind = FileKind::generic;
    Eigen::MatrixXd data; ///< for fields: ny rows by nx columns, row j holds pixels (0..nx-1, j)
};

/// Layout: "ITOM", u32 version (1), u32 kind, u64 rows, u64 cols, row-major f64; little-endian.
void write_itom(const std::filesystem::path &path, FileKind kind, const Eigen::MatrixXd &m);
ItomFile read_itom(const std::filesystem::path &path);

void write_ito_matrix(const std::filesystem::path &path, const ItoMatrix &m);
void write_field(const std::filesystem::path &path, const ConductivityField &a);
ConductivityField read_field(const std::filesystem::path &path);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Lossless CSV, one matrix row per line.
void write_matrix_csv(std::ostream &os, const Eigen::MatrixXd &m);
void write_matrix_csv(const std::filesystem::path &path, const Eigen::MatrixXd &m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path);

/// Binary PGM of a field, linearly mapped from [lo, hi] to [0, 255]; y axis points up.
void write_pgm(const std::filesystem::path &path, const ConductivityField &a, double lo, double hi);
/// Binary PGM of a matrix (row 0 at the top), mapped from [lo, hi].
void write_pgm(const std::filesystem::path &path, const Eigen::MatrixXd &m, double lo, double hi);

} // namespace itomc
