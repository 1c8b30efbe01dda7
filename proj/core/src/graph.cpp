#include "gfsi/graph.hpp"

#include "gfsi/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

namespace gfsi {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        // Keep the smaller id as root so block order falls out naturally.
        if (b < a) std::swap(a, b);
        parent_[b] = a;
    }

private:
    std::vector<int> parent_;
};

Partition partition_from_sets(DisjointSets& sets, int n) {
    std::vector<int> root_to_block(static_cast<std::size_t>(n), -1);
    std::vector<NodeSet> blocks;
    for (int v = 0; v < n; ++v) {
        const int r = sets.find(v);
        if (root_to_block[r] < 0) {
            root_to_block[r] = static_cast<int>(blocks.size());
            blocks.emplace_back();
        }
        blocks[root_to_block[r]].push_back(v);
    }
    return Partition(n, std::move(blocks));
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int parse_int(const std::string& token, const std::string& line, int line_no) {
    const std::string t = trim(token);
    int value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw InputError("edge list line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
    }
    return value;
}

}  // namespace

Graph::Graph(int n_nodes, std::vector<Edge> edges) : n_nodes_(n_nodes), edges_(std::move(edges)) {
    if (n_nodes_ < 1) throw InputError("graph must have at least one node");
    incident_.assign(static_cast<std::size_t>(n_nodes_), {});
    std::set<std::pair<int, int>> seen;
    for (int r = 0; r < n_edges(); ++r) {
        const auto [u, v] = edges_[r];
        if (u < 0 || v < 0 || u >= n_nodes_ || v >= n_nodes_) {
            throw InputError("edge " + std::to_string(r) + " has an endpoint outside [0, n)");
        }
        if (u == v) throw InputError("edge " + std::to_string(r) + " is a self loop");
        if (!seen.emplace(std::min(u, v), std::max(u, v)).second) {
            throw InputError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
        }
        incident_[u].push_back(r);
        incident_[v].push_back(r);
    }
}

IncidenceMatrix::IncidenceMatrix(const Graph& g) : rows_(g.n_edges()), cols_(g.n_nodes()), sparse_(rows_, cols_) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(2 * static_cast<std::size_t>(rows_));
    for (int r = 0; r < rows_; ++r) {
        const auto [u, v] = g.edge(r);
        triplets.emplace_back(r, u, 1.0);
        triplets.emplace_back(r, v, -1.0);
    }
    sparse_.setFromTriplets(triplets.begin(), triplets.end());
}

Eigen::MatrixXd IncidenceMatrix::rows_subset(std::span<const int> rows) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), cols_);
    const Eigen::SparseMatrix<double, Eigen::RowMajor> by_row(sparse_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(by_row, rows[i]); it; ++it) {
            out(static_cast<Eigen::Index>(i), it.col()) = it.value();
        }
    }
    return out;
}

Partition::Partition(int n_nodes, std::vector<NodeSet> blocks) : blocks_(std::move(blocks)) {
    label_.assign(static_cast<std::size_t>(n_nodes), -1);
    for (auto& b : blocks_) {
        if (b.empty()) throw InputError("partition block is empty");
        std::sort(b.begin(), b.end());
    }
    std::sort(blocks_.begin(), blocks_.end(), [](const NodeSet& a, const NodeSet& b) { return a.front() < b.front(); });
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        for (int v : blocks_[i]) {
            if (v < 0 || v >= n_nodes) throw InputError("partition node out of range");
            if (label_[v] >= 0) throw InputError("partition blocks overlap");
            label_[v] = static_cast<int>(i);
        }
    }
    if (std::find(label_.begin(), label_.end(), -1) != label_.end()) {
        throw InputError("partition does not cover every node");
    }
}

bool Partition::has_block(const NodeSet& nodes) const {
    if (nodes.empty() || nodes.front() < 0 || nodes.front() >= n_nodes()) return false;
    const auto& candidate = blocks_[label_[nodes.front()]];
    return candidate == nodes;
}

IncidenceMatrix build_incidence(const Graph& g) { return IncidenceMatrix(g); }

Partition components_after_removal(const Graph& g, std::span<const int> boundary) {
    std::vector<char> removed(static_cast<std::size_t>(g.n_edges()), 0);
    for (int e : boundary) {
        if (e < 0 || e >= g.n_edges()) throw InputError("boundary edge index out of range");
        removed[e] = 1;
    }
    return components_after_removal_mask(g, removed);
}

Partition components_after_removal_mask(const Graph& g, const std::vector<char>& removed) {
    DisjointSets sets(g.n_nodes());
    for (int r = 0; r < g.n_edges(); ++r) {
        if (removed[r]) continue;
        const auto [u, v] = g.edge(r);
        sets.unite(u, v);
    }
    return partition_from_sets(sets, g.n_nodes());
}

Graph chain_graph(int n) {
    if (n < 2) throw InputError("chain graph needs at least two nodes");
    std::vector<Graph::Edge> edges;
    edges.reserve(static_cast<std::size_t>(n - 1));
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return Graph(n, std::move(edges));
}

Graph grid_graph(int rows, int cols) {
    if (rows < 1 || cols < 1) throw InputError("grid dimensions must be positive");
    std::vector<Graph::Edge> edges;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int id = r * cols + c;
            if (c + 1 < cols) edges.emplace_back(id, id + 1);
            if (r + 1 < rows) edges.emplace_back(id, id + cols);
        }
    }
    return Graph(rows * cols, std::move(edges));
}

Graph load_edge_list(const std::filesystem::path& path, int n_nodes) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open edge list " + path.string());
    std::vector<Graph::Edge> edges;
    std::string line;
    int line_no = 0;
    int max_id = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw InputError("edge list line " + std::to_string(line_no) + ": expected 'u,v', got '" + line + "'");
        }
        const int u = parse_int(t.substr(0, comma), line, line_no);
        const int v = parse_int(t.substr(comma + 1), line, line_no);
        if (u < 0 || v < 0) throw InputError("edge list line " + std::to_string(line_no) + ": negative node id");
        max_id = std::max({max_id, u, v});
        edges.emplace_back(u, v);
    }
    const int n = n_nodes > 0 ? n_nodes : max_id + 1;
    return Graph(n, std::move(edges));
}

int incidence_rank(const Graph& g) {
    const std::vector<char> none(static_cast<std::size_t>(g.n_edges()), 0);
    return g.n_nodes() - static_cast<int>(components_after_removal_mask(g, none).size());
}

}  // namespace gfsi
