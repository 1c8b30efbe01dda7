#include "gfsi/linalg.hpp"

#include "gfsi/errors.hpp"

#include <Eigen/SVD>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <deque>
#include <limits>

namespace gfsi {

namespace {

void require_finite(const DenseMatrix& m, const Vector& v) {
    if (!m.allFinite() || !v.allFinite()) throw InputError("non-finite entries in linear solve");
}

double rank_cutoff(const Eigen::BDCSVD<DenseMatrix>& svd, Eigen::Index rows, Eigen::Index cols) {
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * smax;
}

}  // namespace

Vector minnorm_solve(const DenseMatrix& m, const Vector& v) {
    if (m.rows() != v.size()) throw InputError("minnorm_solve: dimension mismatch");
    require_finite(m, v);
    if (m.size() == 0) return Vector::Zero(m.cols());
    Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double cutoff = rank_cutoff(svd, m.rows(), m.cols());
    const auto& sv = svd.singularValues();
    Vector coeff = svd.matrixU().transpose() * v;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        coeff(i) = (sv(i) > cutoff && sv(i) > 0.0) ? coeff(i) / sv(i) : 0.0;
    }
    return svd.matrixV() * coeff;
}

Vector project_null(const DenseMatrix& d_sub, const Vector& v) {
    if (d_sub.cols() != v.size()) throw InputError("project_null: dimension mismatch");
    require_finite(d_sub, Vector::Zero(0));
    if (!v.allFinite()) throw InputError("non-finite entries in projection");
    if (d_sub.rows() == 0) return v;
    Eigen::BDCSVD<DenseMatrix> svd(d_sub, Eigen::ComputeThinV);
    const double cutoff = rank_cutoff(svd, d_sub.rows(), d_sub.cols());
    const auto& sv = svd.singularValues();
    Vector out = v;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            const auto col = svd.matrixV().col(i);
            out -= col.dot(v) * col;
        }
    }
    return out;
}

Vector project_null(const Partition& blocks, const Vector& v) {
    if (blocks.n_nodes() != v.size()) throw InputError("project_null: dimension mismatch");
    Vector out(v.size());
    for (const auto& b : blocks.blocks()) {
        double sum = 0.0;
        for (int j : b) sum += v(j);
        const double mean = sum / static_cast<double>(b.size());
        for (int j : b) out(j) = mean;
    }
    return out;
}

struct ReducedIncidenceSolver::CycleBlock {
    std::vector<int> nodes;  // nodes[0] is grounded
    std::vector<int> edges;
    std::vector<std::pair<int, int>> ends;  // local ids of edge endpoints, -1 for the ground
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>> ldlt;
};

ReducedIncidenceSolver::~ReducedIncidenceSolver() = default;
ReducedIncidenceSolver::ReducedIncidenceSolver(ReducedIncidenceSolver&&) noexcept = default;
ReducedIncidenceSolver& ReducedIncidenceSolver::operator=(ReducedIncidenceSolver&&) noexcept = default;

ReducedIncidenceSolver::ReducedIncidenceSolver(const Graph& g, const std::vector<char>& removed)
    : graph_(&g), partition_(components_after_removal_mask(g, removed)) {
    const int n = g.n_nodes();
    const int m = g.n_edges();
    edge_slot_.assign(static_cast<std::size_t>(m), -1);
    for (int e = 0; e < m; ++e) {
        if (!removed[e]) {
            edge_slot_[e] = static_cast<int>(interior_.size());
            interior_.push_back(e);
        }
    }

    const auto& labels = partition_.labels();
    std::vector<int> edges_per_block(partition_.size(), 0);
    for (int e : interior_) ++edges_per_block[labels[g.edge(e).first]];

    parent_edge_.assign(static_cast<std::size_t>(n), -1);
    parent_node_.assign(static_cast<std::size_t>(n), -1);
    std::vector<int> local(static_cast<std::size_t>(n), -1);

    for (std::size_t b = 0; b < partition_.size(); ++b) {
        const NodeSet& nodes = partition_.block(b);
        const bool is_tree = edges_per_block[b] + 1 == static_cast<int>(nodes.size());
        if (is_tree) {
            std::deque<int> queue{nodes.front()};
            parent_node_[nodes.front()] = nodes.front();
            while (!queue.empty()) {
                const int x = queue.front();
                queue.pop_front();
                peel_order_.push_back(x);
                for (int e : g.incident_edges()[x]) {
                    if (removed[e]) continue;
                    const auto [u, v] = g.edge(e);
                    const int y = (u == x) ? v : u;
                    if (parent_node_[y] >= 0) continue;
                    parent_node_[y] = x;
                    parent_edge_[y] = e;
                    queue.push_back(y);
                }
            }
            continue;
        }

        auto block = std::make_unique<CycleBlock>();
        block->nodes = nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i) - 1;
        const int dim = static_cast<int>(nodes.size()) - 1;
        std::vector<Eigen::Triplet<double>> trip;
        for (int e : interior_) {
            const auto [u, v] = g.edge(e);
            if (labels[u] != static_cast<int>(b)) continue;
            block->edges.push_back(e);
            const int lu = local[u];
            const int lv = local[v];
            block->ends.emplace_back(lu, lv);
            if (lu >= 0) trip.emplace_back(lu, lu, 1.0);
            if (lv >= 0) trip.emplace_back(lv, lv, 1.0);
            if (lu >= 0 && lv >= 0) {
                trip.emplace_back(lu, lv, -1.0);
                trip.emplace_back(lv, lu, -1.0);
            }
        }
        Eigen::SparseMatrix<double> lap(dim, dim);
        lap.setFromTriplets(trip.begin(), trip.end());
        block->ldlt.compute(lap);
        if (block->ldlt.info() != Eigen::Success) throw NumericalError("grounded Laplacian factorization failed");
        cycle_blocks_.push_back(std::move(block));
    }
}

Vector ReducedIncidenceSolver::project_null(const Vector& v) const { return gfsi::project_null(partition_, v); }

Vector ReducedIncidenceSolver::dual_solve(const Vector& v) const {
    const Graph& g = *graph_;
    Vector r = v - project_null(v);
    Vector out = Vector::Zero(static_cast<Eigen::Index>(interior_.size()));

    // Peel leaves towards each tree root; r is consumed as the running balance.
    for (auto it = peel_order_.rbegin(); it != peel_order_.rend(); ++it) {
        const int x = *it;
        const int pe = parent_edge_[x];
        if (pe < 0) continue;
        const double dx = (g.edge(pe).first == x) ? 1.0 : -1.0;
        const double a = r(x) / dx;
        out(edge_slot_[pe]) = a;
        r(parent_node_[x]) += dx * a;  // D_{pe,parent} = -dx
    }

    for (const auto& block : cycle_blocks_) {
        const auto dim = static_cast<Eigen::Index>(block->nodes.size()) - 1;
        Vector rhs(dim);
        for (Eigen::Index i = 0; i < dim; ++i) rhs(i) = r(block->nodes[static_cast<std::size_t>(i) + 1]);
        const Vector x = block->ldlt.solve(rhs);
        for (std::size_t i = 0; i < block->edges.size(); ++i) {
            const auto [lu, lw] = block->ends[i];
            out(edge_slot_[block->edges[i]]) = (lu >= 0 ? x(lu) : 0.0) - (lw >= 0 ? x(lw) : 0.0);
        }
    }
    return out;
}

}  // namespace gfsi
