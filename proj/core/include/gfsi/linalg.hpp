#pragma once

#include "gfsi/graph.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace gfsi {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Minimum-norm least-squares solution M^+ v. Singular values below
/// max(rows, cols) * eps * sigma_max are treated as zero.
/// Throws InputError on dimension mismatch or non-finite input.
Vector minnorm_solve(const DenseMatrix& m, const Vector& v);

/// Orthogonal projection of v onto Null(d_sub), computed from an SVD.
Vector project_null(const DenseMatrix& d_sub, const Vector& v);

/// Projection onto Null(D_{-B}) for an incidence submatrix: replaces each
/// entry by the mean of v over its block.
Vector project_null(const Partition& blocks, const Vector& v);

/// Solves the least-squares systems of the dual path for one boundary set
/// without forming (D_{-B} D_{-B}^T)^+.
///
/// For the incidence matrix with rows B removed, (D_{-B} D_{-B}^T)^+ D_{-B} v
/// is the minimum-norm solution a of D_{-B}^T a = v - P v, where P averages
/// over the blocks of G_{-B}. Tree blocks are solved by leaf peeling; blocks
/// with cycles go through a grounded Laplacian factorization.
class ReducedIncidenceSolver {
public:
    ReducedIncidenceSolver(const Graph& g, const std::vector<char>& removed);
    ~ReducedIncidenceSolver();
    ReducedIncidenceSolver(ReducedIncidenceSolver&&) noexcept;
    ReducedIncidenceSolver& operator=(ReducedIncidenceSolver&&) noexcept;

    const Partition& partition() const noexcept { return partition_; }
    /// Kept edges in increasing order; the output of dual_solve is aligned
    /// with this list.
    const std::vector<int>& interior() const noexcept { return interior_; }

    Vector project_null(const Vector& v) const;
    Vector dual_solve(const Vector& v) const;

private:
    struct CycleBlock;

    const Graph* graph_;
    Partition partition_;
    std::vector<int> interior_;
    std::vector<int> edge_slot_;      // edge -> position in interior_, or -1
    std::vector<int> peel_order_;     // BFS order over tree blocks
    std::vector<int> parent_edge_;    // per node, -1 at roots
    std::vector<int> parent_node_;
    std::vector<std::unique_ptr<CycleBlock>> cycle_blocks_;
};

}  // namespace gfsi
