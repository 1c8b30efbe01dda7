#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace gfsi {

using NodeSet = std::vector<int>;  // sorted, unique node ids

/// An undirected simple graph with a fixed edge order.
///
/// Edge r of the graph is row r of its incidence matrix, so the order in
/// which edges are supplied is part of the graph's identity.
class Graph {
public:
    using Edge = std::pair<int, int>;

    Graph() = default;
    /// Throws InputError on out-of-range endpoints, self loops or duplicate
    /// edges (duplicates are detected up to orientation).
    Graph(int n_nodes, std::vector<Edge> edges);

    int n_nodes() const noexcept { return n_nodes_; }
    int n_edges() const noexcept { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const Edge& edge(int r) const { return edges_.at(static_cast<std::size_t>(r)); }

    /// Edge indices incident to each node, in increasing edge order.
    const std::vector<std::vector<int>>& incident_edges() const noexcept { return incident_; }

private:
    int n_nodes_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<int>> incident_;
};

/// Oriented edge-incidence penalty matrix: row r has +1 at the first
/// endpoint of edge r and -1 at the second.
class IncidenceMatrix {
public:
    explicit IncidenceMatrix(const Graph& g);

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    const Eigen::SparseMatrix<double>& sparse() const noexcept { return sparse_; }
    Eigen::MatrixXd dense() const { return Eigen::MatrixXd(sparse_); }

    /// Dense submatrix formed by the listed rows, in the listed order.
    Eigen::MatrixXd rows_subset(std::span<const int> rows) const;

private:
    int rows_ = 0;
    int cols_ = 0;
    Eigen::SparseMatrix<double> sparse_;
};

/// Disjoint blocks covering every node, sorted by smallest member.
class Partition {
public:
    Partition() = default;
    /// Blocks are sorted internally; throws InputError if they do not
    /// partition 0..n_nodes-1.
    Partition(int n_nodes, std::vector<NodeSet> blocks);

    int n_nodes() const noexcept { return static_cast<int>(label_.size()); }
    std::size_t size() const noexcept { return blocks_.size(); }
    const std::vector<NodeSet>& blocks() const noexcept { return blocks_; }
    const NodeSet& block(std::size_t i) const { return blocks_.at(i); }
    /// Block index of each node.
    const std::vector<int>& labels() const noexcept { return label_; }

    /// True if `nodes` (sorted) is exactly one of the blocks.
    bool has_block(const NodeSet& nodes) const;

    friend bool operator==(const Partition& a, const Partition& b) { return a.blocks_ == b.blocks_; }

private:
    std::vector<NodeSet> blocks_;
    std::vector<int> label_;
};

IncidenceMatrix build_incidence(const Graph& g);

/// Connected components of `g` after deleting the edges in `boundary`.
/// Throws InputError if an edge index is out of range.
Partition components_after_removal(const Graph& g, std::span<const int> boundary);

/// Same as above with a boolean mask over edges (true = removed).
Partition components_after_removal_mask(const Graph& g, const std::vector<char>& removed);

Graph chain_graph(int n);
/// 4-neighbour lattice; node id of (r, c) is r * cols + c.
Graph grid_graph(int rows, int cols);

/// Reads "u,v" lines (0-based); blank lines and lines starting with '#'
/// are skipped. The node count is one plus the largest id seen unless
/// `n_nodes` is given.
Graph load_edge_list(const std::filesystem::path& path, int n_nodes = -1);

/// Rank of the dense incidence matrix computed from the graph structure:
/// n minus the number of connected components.
int incidence_rank(const Graph& g);

}  // namespace gfsi
