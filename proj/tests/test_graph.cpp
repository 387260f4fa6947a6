#include "doctest.h"

#include "graphsq/errors.hpp"
#include "graphsq/graph.hpp"

#include <cmath>
#include <sstream>

using namespace graphsq;

namespace
{
    Graph star(std::size_t leaves)
    {
        std::vector<Edge> e;
        for (Vertex v = 1; v <= leaves; ++v)
            e.emplace_back(0, v);
        return Graph::from_edges(leaves + 1, false, e);
    }

    std::string serialize(const Graph& g)
    {
        std::ostringstream os;
        write_edgelist(os, g);
        return os.str();
    }

    void check_symmetric(const Graph& g)
    {
        for (Vertex i = 0; i < g.size(); ++i)
            for (Vertex j : g.neighbors(i))
            {
                REQUIRE(i != j);
                REQUIRE(g.has_edge(j, i));
            }
    }
} // namespace

TEST_CASE("clique and cycle shapes")
{
    const Graph k4 = generate({GraphFamily::Clique, 4}, 0);
    CHECK(k4.edge_count() == 6);
    for (Vertex i = 0; i < 4; ++i)
        CHECK(k4.degree(i) == 3);

    GraphSpec spec{GraphFamily::Circulant, 6};
    spec.k = 1;
    const Graph c6 = generate(spec, 0);
    CHECK(c6.edge_count() == 6);
    for (Vertex i = 0; i < 6; ++i)
        CHECK(c6.degree(i) == 2);
    CHECK(c6 == generate({GraphFamily::Cycle, 6}, 0));
}

TEST_CASE("errg edge count is binomial")
{
    GraphSpec spec{GraphFamily::Errg, 1000};
    spec.p = 0.01;
    const Graph g = generate(spec, 12345);
    const double pairs = 1000.0 * 999.0 / 2.0;
    const double mean = pairs * 0.01;
    const double sd = std::sqrt(pairs * 0.01 * 0.99);
    CHECK(mean == doctest::Approx(4995.0));
    CHECK(std::abs(static_cast<double>(g.edge_count()) - mean) <= 4.0 * sd);
    check_symmetric(g);
}

TEST_CASE("errg mean degree over seeds")
{
    const std::size_t n = 200, seeds = 200;
    const double p = 0.05;
    GraphSpec spec{GraphFamily::Errg, n};
    spec.p = p;
    double total = 0.0;
    for (std::uint64_t s = 0; s < seeds; ++s)
        total += 2.0 * static_cast<double>(generate(spec, s).edge_count()) / static_cast<double>(n);
    const double avg = total / static_cast<double>(seeds);
    const double var_one = 4.0 * (n * (n - 1) / 2.0) * p * (1 - p) / (static_cast<double>(n) * n);
    CHECK(std::abs(avg - (n - 1) * p) <= 4.0 * std::sqrt(var_one / seeds));
}

TEST_CASE("errg extremes")
{
    GraphSpec spec{GraphFamily::Errg, 7};
    spec.p = 0.0;
    CHECK(generate(spec, 1).edge_count() == 0);
    spec.p = 1.0;
    CHECK(generate(spec, 1).edge_count() == 21);
    spec.family = GraphFamily::DirectedErrg;
    CHECK(generate(spec, 1).edge_count() == 42);
}

TEST_CASE("k-regular generators give epsilon zero")
{
    for (std::size_t k : {1, 2, 5})
    {
        GraphSpec spec{GraphFamily::Circulant, 31};
        spec.k = k;
        const auto r = regularity_report(generate(spec, 0));
        CHECK(r.d_min == 2 * k);
        CHECK(r.d_max == 2 * k);
        CHECK(r.epsilon == doctest::Approx(0.0).epsilon(1e-12));
    }
    for (std::uint64_t seed = 0; seed < 20; ++seed)
    {
        GraphSpec spec{GraphFamily::RandomRegular, 50};
        spec.k = 3 + seed % 2;
        const Graph g = generate(spec, seed);
        check_symmetric(g);
        const auto r = regularity_report(g);
        CHECK(r.d_min == spec.k);
        CHECK(r.d_max == spec.k);
        CHECK(r.epsilon < 1e-12);
    }
}

TEST_CASE("generator parameter errors")
{
    GraphSpec spec{GraphFamily::RandomRegular, 101};
    spec.k = 3;
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.n = 10;
    spec.k = 10;
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.k = 0;
    CHECK_THROWS_AS(generate(spec, 1), ConfigError);
    spec.k = 3;
    spec.retry_budget = 0;
    CHECK_THROWS_AS(generate(spec, 1), ModelError);
    CHECK_THROWS_AS(generate({GraphFamily::Clique, 1}, 0), ConfigError);
    GraphSpec bad_p{GraphFamily::Errg, 10};
    bad_p.p = 1.5;
    CHECK_THROWS_AS(generate(bad_p, 0), ConfigError);
}

TEST_CASE("generation is reproducible byte for byte")
{
    for (auto family : {GraphFamily::Errg, GraphFamily::DirectedErrg, GraphFamily::RandomRegular})
    {
        GraphSpec spec{family, 300};
        spec.p = 0.03;
        spec.k = 4;
        CHECK(serialize(generate(spec, 99)) == serialize(generate(spec, 99)));
        CHECK(serialize(generate(spec, 99)) != serialize(generate(spec, 100)));
    }
}

TEST_CASE("regularity report on hand-made graphs")
{
    const auto clique = regularity_report(generate({GraphFamily::Clique, 9}, 0));
    CHECK(clique.d_min == 8);
    CHECK(clique.d_max == 8);
    CHECK(clique.epsilon == doctest::Approx(0.0).epsilon(1e-12));

    const auto s = regularity_report(star(4));
    CHECK(s.rho[0] == doctest::Approx(4.0));
    for (Vertex v = 1; v <= 4; ++v)
        CHECK(s.rho[v] == doctest::Approx(0.25));
    CHECK(s.epsilon == doctest::Approx(3.0));
    CHECK(s.d_min == 1);
    CHECK(s.d_max == 4);

    const auto c = regularity_report(generate({GraphFamily::Cycle, 10}, 0));
    CHECK(c.epsilon == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.d_min == 2);

    const std::vector<Edge> e{{0, 1}};
    const auto iso = regularity_report(Graph::from_edges(3, false, e), 3);
    CHECK(iso.isolated_count == 1);
    CHECK(iso.rho[2] == 0.0);
    CHECK(iso.below_d_count == 3);
}

TEST_CASE("directed graphs use out-degrees")
{
    const std::vector<Edge> arcs{{0, 1}, {0, 2}, {1, 2}, {2, 0}};
    const Graph g = Graph::from_edges(3, true, arcs);
    CHECK(g.degree(0) == 2);
    CHECK(g.in_degree(2) == 2);
    CHECK(g.in_neighbors(2).size() == 2);
    const auto r = regularity_report(g);
    CHECK(r.rho[0] == doctest::Approx(1.0));
    CHECK(r.rho[1] == doctest::Approx(0.5));
    CHECK(r.rho[2] == doctest::Approx(1.5));
    CHECK(r.epsilon == doctest::Approx(0.5));
    CHECK(r.d_min == 1);
    CHECK(r.d_max == 2);

    GraphSpec spec{GraphFamily::DirectedErrg, 60};
    spec.p = 0.2;
    const Graph dg = generate(spec, 4);
    std::size_t in_total = 0;
    for (Vertex v = 0; v < dg.size(); ++v)
    {
        in_total += dg.in_degree(v);
        for (Vertex u : dg.in_neighbors(v))
            CHECK(dg.has_edge(u, v));
    }
    CHECK(in_total == dg.edge_count());
}

TEST_CASE("graph construction rejects malformed input")
{
    const std::vector<Edge> loop{{1, 1}};
    CHECK_THROWS_AS(Graph::from_edges(3, false, loop), ConfigError);
    const std::vector<Edge> dup{{0, 1}, {1, 0}};
    CHECK_THROWS_AS(Graph::from_edges(3, false, dup), ConfigError);
    const std::vector<Edge> range{{0, 3}};
    CHECK_THROWS_AS(Graph::from_edges(3, false, range), ConfigError);
}

TEST_CASE("edge list format")
{
    GraphSpec spec{GraphFamily::Errg, 40};
    spec.p = 0.2;
    const Graph g = generate(spec, 3);
    const std::string text = serialize(g);
    CHECK(text.rfind("graphsq-edgelist v1 40 0\n", 0) == 0);
    std::istringstream in(text);
    CHECK(read_edgelist(in) == g);

    std::istringstream small("graphsq-edgelist v1 3 0\n0 1\n1 2\n");
    const Graph path = read_edgelist(small);
    CHECK(path.edge_count() == 2);
    CHECK(serialize(path) == "graphsq-edgelist v1 3 0\n0 1\n1 2\n");

    std::istringstream bad_header("edgelist 3 0\n");
    CHECK_THROWS_AS(read_edgelist(bad_header), ConfigError);
    std::istringstream reversed("graphsq-edgelist v1 3 0\n1 0\n");
    CHECK_THROWS_AS(read_edgelist(reversed), ConfigError);
}

TEST_CASE("finite-size degree regularity check")
{
    const auto cycle = check_condition1(regularity_report(generate({GraphFamily::Cycle, 1024}, 0)), 1024, 2);
    CHECK_FALSE(cycle.pass);
    CHECK(cycle.label == "FAIL (d_min=2)");

    GraphSpec spec{GraphFamily::Circulant, 1024};
    spec.k = 32;
    const auto circ = check_condition1(regularity_report(generate(spec, 0)), 1024, 2);
    CHECK(circ.pass);
    CHECK(circ.label == "PASS");

    const auto s = check_condition1(regularity_report(star(40)), 41, 2);
    CHECK(s.label.find("epsilon=") != std::string::npos);
}
