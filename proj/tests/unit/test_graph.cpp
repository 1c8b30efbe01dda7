#include "gfsi/errors.hpp"
#include "gfsi/graph.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

namespace gfsi {
namespace {

int count_components_bfs(int n, const std::vector<Graph::Edge>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& [u, v] : edges) {
        adj[static_cast<std::size_t>(u)].push_back(v);
        adj[static_cast<std::size_t>(v)].push_back(u);
    }
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    int count = 0;
    for (int s = 0; s < n; ++s) {
        if (seen[static_cast<std::size_t>(s)]) continue;
        ++count;
        std::vector<int> stack{s};
        seen[static_cast<std::size_t>(s)] = 1;
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            for (int w : adj[static_cast<std::size_t>(x)]) {
                if (!seen[static_cast<std::size_t>(w)]) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    stack.push_back(w);
                }
            }
        }
    }
    return count;
}

Graph random_graph(int n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(p);
    std::vector<Graph::Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) e.emplace_back(i, j);
    return Graph(n, e);
}

TEST(Graph, ChainEdges) {
    const Graph g = chain_graph(3);
    ASSERT_EQ(g.n_edges(), 2);
    EXPECT_EQ(g.edge(0), Graph::Edge(0, 1));
    EXPECT_EQ(g.edge(1), Graph::Edge(1, 2));
}

TEST(Graph, GridCounts) {
    const Graph g = grid_graph(8, 8);
    EXPECT_EQ(g.n_nodes(), 64);
    // Enumerate horizontal and vertical neighbours directly.
    int count = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) count += (c + 1 < 8) + (r + 1 < 8);
    EXPECT_EQ(g.n_edges(), count);
    EXPECT_EQ(g.n_edges(), 112);
    const Graph one = grid_graph(1, 1);
    EXPECT_EQ(one.n_nodes(), 1);
    EXPECT_EQ(one.n_edges(), 0);
}

TEST(Graph, RejectsBadEdges) {
    EXPECT_THROW(Graph(3, {{0, 3}}), InputError);
    EXPECT_THROW(Graph(3, {{1, 1}}), InputError);
    EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), InputError);
}

TEST(Incidence, RowSigns) {
    const IncidenceMatrix D(chain_graph(3));
    const Eigen::MatrixXd d = D.dense();
    Eigen::MatrixXd expected(2, 3);
    expected << 1, -1, 0, 0, 1, -1;
    EXPECT_EQ(d, expected);
    const int rows[] = {1};
    EXPECT_EQ(D.rows_subset(rows), expected.row(1));
}

TEST(Components, ChainCut) {
    const Graph g = chain_graph(5);
    const int cut[] = {1, 3};
    const Partition p = components_after_removal(g, cut);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p.block(0), (NodeSet{0, 1}));
    EXPECT_EQ(p.block(1), (NodeSet{2, 3}));
    EXPECT_EQ(p.block(2), (NodeSet{4}));
    EXPECT_TRUE(p.has_block({2, 3}));
    EXPECT_FALSE(p.has_block({2}));
    const int bad[] = {7};
    EXPECT_THROW(components_after_removal(g, bad), InputError);
}

TEST(Components, EmptyBoundaryOneBlockIffConnected) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        const int n = 1 + static_cast<int>(rng() % 12);
        const Graph g = random_graph(n, 0.25, rng);
        const Partition p = components_after_removal(g, std::span<const int>{});
        EXPECT_EQ(p.size() == 1, count_components_bfs(n, g.edges()) == 1);
    }
}

TEST(Components, BlocksPartitionNodes) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + static_cast<int>(rng() % 15);
        const Graph g = random_graph(n, 0.3, rng);
        std::vector<char> removed(static_cast<std::size_t>(g.n_edges()));
        for (auto& r : removed) r = static_cast<char>(rng() % 2);
        const Partition p = components_after_removal_mask(g, removed);
        std::vector<int> hits(static_cast<std::size_t>(n), 0);
        for (const auto& b : p.blocks())
            for (int v : b) ++hits[static_cast<std::size_t>(v)];
        for (int h : hits) EXPECT_EQ(h, 1);
        for (std::size_t i = 1; i < p.size(); ++i) EXPECT_LT(p.block(i - 1).front(), p.block(i).front());
        std::vector<Graph::Edge> kept;
        for (int e = 0; e < g.n_edges(); ++e)
            if (!removed[static_cast<std::size_t>(e)]) kept.push_back(g.edge(e));
        EXPECT_EQ(static_cast<int>(p.size()), count_components_bfs(n, kept));
    }
}

TEST(Incidence, RankMatchesComponentCount) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + static_cast<int>(rng() % 12);
        const Graph g = random_graph(n, 0.3, rng);
        const int expected = n - count_components_bfs(n, g.edges());
        EXPECT_EQ(incidence_rank(g), expected);
        if (g.n_edges() > 0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(IncidenceMatrix(g).dense());
            EXPECT_EQ(static_cast<int>(lu.rank()), expected);
        }
    }
}

TEST(EdgeList, LoadsCommentsAndBlanks) {
    const auto path = std::filesystem::temp_directory_path() / "gfsi_edges_test.csv";
    {
        std::ofstream f(path);
        f << "# header\n0,1\n\n1,2\n  # indented comment\n2,3\n";
    }
    const Graph g = load_edge_list(path);
    EXPECT_EQ(g.n_nodes(), 4);
    EXPECT_EQ(g.n_edges(), 3);
    EXPECT_EQ(load_edge_list(path, 6).n_nodes(), 6);
    {
        std::ofstream f(path);
        f << "0;1\n";
    }
    EXPECT_THROW(load_edge_list(path), InputError);
    EXPECT_THROW(load_edge_list(path.string() + ".missing"), InputError);
    std::filesystem::remove(path);
}

TEST(EdgeList, StatesFixtureStructure) {
    const Graph g = load_edge_list(GFSI_DATA_DIR "/states_edges.csv");
    EXPECT_EQ(g.n_nodes(), 48);
    EXPECT_EQ(components_after_removal(g, std::span<const int>{}).size(), 1u);
}

}  // namespace
}  // namespace gfsi
