#include <queue>
#include <random>

#include "doctest.h"
#include "wmagin/graph.hpp"

using namespace wmagin;

namespace {

UtteranceFeatures ramp_utterance(std::size_t frames, std::size_t dim) {
    UtteranceFeatures u;
    u.frames = Matrix(frames, dim);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t k = 0; k < dim; ++k) u.frames(t, k) = 1.0 + t * 10.0 + k;
    u.label = 2;
    u.utterance_id = "utt";
    return u;
}

std::size_t count_true(const Mask& m) { return std::count(m.begin(), m.end(), std::uint8_t{1}); }

// Breadth-first eccentricities; returns the diameter (max distance).
std::size_t diameter(const NeighborLists& nb) {
    std::size_t best = 0;
    for (std::size_t s = 0; s < nb.num_nodes(); ++s) {
        std::vector<std::size_t> dist(nb.num_nodes(), SIZE_MAX);
        std::queue<std::size_t> q;
        dist[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (auto v : nb.neighbors(u)) {
                if (dist[v] == SIZE_MAX) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        for (auto d : dist) {
            REQUIRE(d != SIZE_MAX);  // connected
            best = std::max(best, d);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("segmentation counts and padding") {
    const auto long_u = ramp_utterance(300, 2);
    const auto graphs = segment_utterance(long_u, 120);
    REQUIRE(graphs.size() == 3);
    CHECK(count_true(graphs[0].mask) == 120);
    CHECK(count_true(graphs[1].mask) == 120);
    CHECK(count_true(graphs[2].mask) == 60);
    for (const auto& g : graphs) {
        CHECK(g.label == 2);
        CHECK(g.num_nodes() == 120);
    }

    const auto exact = segment_utterance(ramp_utterance(120, 2), 120);
    REQUIRE(exact.size() == 1);
    CHECK(count_true(exact[0].mask) == 120);

    const auto tiny = segment_utterance(ramp_utterance(5, 3), 120);
    REQUIRE(tiny.size() == 1);
    CHECK(count_true(tiny[0].mask) == 5);
    for (std::size_t t = 5; t < 120; ++t)
        for (std::size_t k = 0; k < 3; ++k) CHECK(tiny[0].node_features(t, k) == 0.0);

    UtteranceFeatures empty;
    empty.frames = Matrix(0, 3);
    CHECK_THROWS(segment_utterance(empty, 120));
    CHECK_THROWS(segment_utterance(long_u, 2));
}

TEST_CASE("reassembling segments reproduces the frames") {
    for (std::size_t frames : {1u, 7u, 24u, 25u, 61u}) {
        const auto u = ramp_utterance(frames, 3);
        Matrix rebuilt(0, 3);
        for (const auto& g : segment_utterance(u, 24)) {
            for (std::size_t t = 0; t < g.num_nodes(); ++t) {
                if (!g.mask[t]) continue;
                const auto row = g.node_features.row(t);
                rebuilt.values.insert(rebuilt.values.end(), row.begin(), row.end());
                ++rebuilt.rows;
            }
        }
        CHECK(rebuilt == u.frames);
    }
}

TEST_CASE("adjacency construction") {
    const auto c4 = build_adjacency(4, AdjacencyKind::Cycle);
    const auto n0 = c4.neighbors(0);
    CHECK(std::vector<std::size_t>(n0.begin(), n0.end()) == std::vector<std::size_t>{1, 3});
    const auto n2 = c4.neighbors(2);
    CHECK(std::vector<std::size_t>(n2.begin(), n2.end()) == std::vector<std::size_t>{1, 3});

    const auto f4 = build_adjacency(4, AdjacencyKind::Full);
    for (std::size_t i = 0; i < 4; ++i) CHECK(f4.degree(i) == 3);

    const auto c120 = build_adjacency(120, AdjacencyKind::Cycle);
    const auto n = c120.neighbors(0);
    CHECK(std::find(n.begin(), n.end(), 119u) != n.end());

    CHECK_THROWS_AS(build_adjacency(2, AdjacencyKind::Cycle), std::invalid_argument);
    CHECK_THROWS_AS(build_adjacency(0, AdjacencyKind::Full), std::invalid_argument);
}

TEST_CASE("adjacency invariants over sizes") {
    for (std::size_t n = 3; n <= 13; ++n) {
        for (auto kind : {AdjacencyKind::Cycle, AdjacencyKind::Full}) {
            const auto nb = build_adjacency(n, kind);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(nb.degree(i) == (kind == AdjacencyKind::Cycle ? 2 : n - 1));
                for (auto j : nb.neighbors(i)) {
                    CHECK(j != i);
                    const auto back = nb.neighbors(j);
                    CHECK(std::find(back.begin(), back.end(), i) != back.end());
                }
            }
            CHECK(diameter(nb) == (kind == AdjacencyKind::Cycle ? n / 2 : 1));
        }
    }
}

TEST_CASE("neighbor matrix") {
    const auto m3 = neighbor_matrix(build_adjacency(3, AdjacencyKind::Cycle));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(m3.at(i, j) == (i == j ? 0.0 : 1.0));

    for (auto [n, kind, degree] : {std::tuple{4u, AdjacencyKind::Cycle, 2.0},
                                   std::tuple{5u, AdjacencyKind::Full, 4.0}}) {
        const auto m = neighbor_matrix(build_adjacency(n, kind));
        for (std::size_t i = 0; i < n; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row += m.at(i, j);
                CHECK(m.at(i, j) == m.at(j, i));
            }
            CHECK(row == degree);
        }
    }
}

TEST_CASE("tiled neighbor lists form a block-diagonal union") {
    const auto c = build_adjacency(4, AdjacencyKind::Cycle).tiled(3);
    CHECK(c.num_nodes() == 12);
    const auto n8 = c.neighbors(8);
    CHECK(std::vector<std::size_t>(n8.begin(), n8.end()) == std::vector<std::size_t>{9, 11});
}
