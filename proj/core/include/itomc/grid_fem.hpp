#pragma once
// Bilinear finite elements on the uniform unit-square grid and the boundary
// (Dirichlet-to-Neumann) matrix they induce.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace itomc {

/// Uniform grid with 2^level cells per side.
struct GridSpec {
    int level = 0;
    int nodes_per_dim = 0;  ///< 2^level + 1
    double mesh_size = 0;   ///< 1 / 2^level
    int boundary_count = 0; ///< 2^(level+2)

    static GridSpec from_level(int level);

    int cells_per_dim() const { return nodes_per_dim - 1; }
    int node_count() const { return nodes_per_dim * nodes_per_dim; }
    int node_index(int i, int j) const { return i + nodes_per_dim * j; }

    /// Grid coordinates (i, j) of boundary node k. Counterclockwise from the
    /// corner (0,0): bottom, right, top, left.
    std::array<int, 2> boundary_node(int k) const;
    std::array<double, 2> boundary_point(int k) const;
    /// Arclength position of boundary node k; the perimeter is 4.
    double arclength(int k) const { return k * mesh_size; }
    /// Global node numbers of the boundary nodes in cyclic order.
    std::vector<int> boundary_nodes() const;
};

/// Piecewise-constant positive coefficient on an nx-by-ny pixel grid.
/// Pixel (i, j) covers [i/nx, (i+1)/nx) x [j/ny, (j+1)/ny); storage index i + nx*j.
class ConductivityField {
  public:
    ConductivityField() = default;
    ConductivityField(int nx, int ny, Eigen::VectorXd values);

    static ConductivityField constant(int nx, int ny, double value);
    /// Evaluates g at pixel centres.
    static ConductivityField sample(int nx, int ny, const std::function<double(double, double)> &g);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int size() const { return nx_ * ny_; }
    const Eigen::VectorXd &values() const { return values_; }
    double operator()(int i, int j) const { return values_[i + nx_ * j]; }

    /// Throws unless every FE cell of the grid lies inside one pixel.
    void check_compatible(const GridSpec &grid) const;
    /// Pixel index containing FE cell (ci, cj).
    int pixel_of_cell(const GridSpec &grid, int ci, int cj) const;

  private:
    int nx_ = 0, ny_ = 0;
    Eigen::VectorXd values_;
};

enum class ItoKind : unsigned { generic = 0, dtn = 1, albedo = 2 };

/// Dense input-to-output matrix with a little metadata.
struct ItoMatrix {
    Eigen::MatrixXd entries;
    ItoKind kind = ItoKind::generic;
    int level = -1; ///< grid level for DtN matrices

    Eigen::Index size() const { return entries.rows(); }
};

using SpMat = Eigen::SparseMatrix<double>;

/// Stiffness matrix split into interior and boundary parts, with a cached
/// sparse Cholesky factorization of the interior block.
class StiffnessSystem {
  public:
    StiffnessSystem(const GridSpec &grid, const ConductivityField &a);

    const GridSpec &grid() const { return grid_; }
    const SpMat &interior_block() const { return sii_; }
    const SpMat &coupling() const { return sib_; } ///< S^ib (interior x boundary)
    const SpMat &boundary_block() const { return sbb_; }
    /// -1 for boundary nodes, otherwise the interior unknown number.
    const std::vector<int> &interior_number() const { return inum_; }

    /// Solves S^ii X = B.
    Eigen::MatrixXd solve(const Eigen::MatrixXd &rhs) const;

    /// Schur complement restricted to boundary rows [r0, r0+nr) and columns [c0, c0+nc).
    Eigen::MatrixXd schur_block(int r0, int nr, int c0, int nc) const;

    /// Discrete harmonic extensions of the boundary unit vectors, one column per
    /// boundary node, evaluated at all grid nodes.
    Eigen::MatrixXd harmonic_extensions() const;

  private:
    GridSpec grid_;
    SpMat sii_, sib_, sbb_;
    std::vector<int> inum_;
    std::vector<int> bnodes_;
    Eigen::SimplicialLLT<SpMat> chol_;
};

/// Bilinear element stiffness for a unit coefficient, counterclockwise local
/// numbering starting at the lower-left node. Independent of h.
const Eigen::Matrix4d &element_stiffness();

/// n-by-n DtN matrix: S^bb - S^bi (S^ii)^{-1} S^ib.
ItoMatrix assemble_dtn(const GridSpec &grid, const ConductivityField &a);

/// One contiguous block of the DtN matrix without forming the rest.
Eigen::MatrixXd assemble_dtn_block(const GridSpec &grid, const ConductivityField &a, int r0, int nr,
                                   int c0, int nc);

struct BoundaryPoint {
    double x, y; ///< position on the boundary of the unit square
    double s;    ///< arclength from (0,0), counterclockwise, in [0, 4)
};
using BoundaryFunction = std::function<double(const BoundaryPoint &)>;

/// Nodal interpolation of f at the cyclically ordered boundary nodes.
Eigen::VectorXd boundary_project(const GridSpec &grid, const BoundaryFunction &f);

/// Mass matrix of the periodic piecewise-linear boundary space.
Eigen::MatrixXd boundary_mass(const GridSpec &grid);

/// Sensitivities of the DtN matrix with respect to the pixel values.
/// Column k holds dLambda/da_k, flattened column-major (n*n rows).
class DtnJacobian {
  public:
    DtnJacobian(const GridSpec &grid, const ConductivityField &a);

    int n() const { return n_; }
    int parameters() const { return static_cast<int>(data_.cols()); }
    const Eigen::MatrixXd &matrix() const { return data_; }
    Eigen::Map<const Eigen::MatrixXd> slice(int k) const {
        return {data_.col(k).data(), n_, n_};
    }
    /// The DtN matrix at the linearization point (a by-product).
    const Eigen::MatrixXd &dtn() const { return dtn_; }

  private:
    int n_ = 0;
    Eigen::MatrixXd data_;
    Eigen::MatrixXd dtn_;
};

} // namespace itomc
