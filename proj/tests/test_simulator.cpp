#include "doctest.h"

#include "graphsq/errors.hpp"
#include "graphsq/mean_field.hpp"
#include "graphsq/simulator.hpp"
#include "graphsq/stats.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace graphsq;

namespace
{
    std::string dump(const Trajectory& t)
    {
        std::ostringstream os;
        write_occupancy_csv(os, t.grid_times, t.occupancy_series);
        write_tagged_csv(os, t);
        os << t.event_count << ' ' << t.arrivals << ' ' << t.departures;
        return os.str();
    }
} // namespace

TEST_CASE("sample_initial")
{
    Rng rng(3);
    auto zeros = sample_initial(100, OccupancyVector{1.0, 0.0}, rng);
    CHECK(std::all_of(zeros.queues.begin(), zeros.queues.end(), [](auto x) { return x == 0; }));
    auto ones = sample_initial(100, OccupancyVector{1.0, 1.0, 0.0}, rng);
    CHECK(std::all_of(ones.queues.begin(), ones.queues.end(), [](auto x) { return x == 1; }));

    const std::size_t n = 10000;
    auto half = sample_initial(n, OccupancyVector{1.0, 0.5, 0.0}, rng);
    const auto busy = std::count_if(half.queues.begin(), half.queues.end(), [](auto x) { return x >= 1; });
    CHECK(std::abs(static_cast<double>(busy) / n - 0.5) <= 4.0 * std::sqrt(0.25 / n));
    CHECK(std::all_of(half.queues.begin(), half.queues.end(), [](auto x) { return x <= 1; }));

    CHECK_THROWS_AS(sample_initial(5, OccupancyVector{1.0, 0.2, 0.4}, rng), ConfigError);
    CHECK_THROWS_AS(sample_initial(5, OccupancyVector{0.9, 0.2}, rng), ConfigError);
}

TEST_CASE("occupancy vectors from states")
{
    const std::vector<QueueLength> x{0, 2, 1, 2};
    const auto q = occupancy(x, 3);
    CHECK(q == OccupancyVector{1.0, 0.75, 0.5, 0.0});
    CHECK(occupancy(std::vector<QueueLength>(5, 0), 4) == OccupancyVector::empty(4));
    CHECK(occupancy(x, 1) == OccupancyVector{1.0, 0.75});

    std::vector<Edge> e;
    for (Vertex v = 1; v <= 4; ++v)
        e.emplace_back(0, v);
    const Graph star = Graph::from_edges(5, false, e);
    const std::vector<QueueLength> sx{2, 0, 0, 0, 0};
    const auto nq = neighborhood_occupancy(star, sx, 0, 2);
    CHECK(nq[1] == doctest::Approx(0.2));
    CHECK(nq[2] == doctest::Approx(0.2));

    const Graph k6 = generate({GraphFamily::Clique, 6}, 0);
    const std::vector<QueueLength> kx{0, 3, 1, 1, 2, 0};
    CHECK(neighborhood_occupancy(k6, kx, 2, 4) == occupancy(kx, 4));

    const std::vector<Edge> one{{0, 1}};
    const Graph iso = Graph::from_edges(3, false, one);
    CHECK(neighborhood_occupancy(iso, std::vector<QueueLength>{0, 0, 2}, 2, 3) == OccupancyVector{1, 1, 1, 0});
}

TEST_CASE("pure death process empties the system")
{
    const Graph g = generate({GraphFamily::Clique, 200}, 0);
    SimConfig cfg;
    cfg.lambda = 0.0;
    cfg.horizon = 60.0;
    cfg.sample_dt = 1.0;
    cfg.seed = 8;
    cfg.q_init = OccupancyVector{1.0, 0.5, 0.25};
    cfg.jmax = 5;
    const Trajectory t = run_sim(g, cfg);
    CHECK(t.arrivals == 0);
    CHECK(t.occupancy_series.back() == OccupancyVector::empty(5));
    CHECK(t.grid_times.size() == 61);
    CHECK(t.occupancy_series.size() == 61);
    for (std::size_t k = 1; k < t.occupancy_series.size(); ++k)
        CHECK(t.occupancy_series[k].mass() <= t.occupancy_series[k - 1].mass());
}

TEST_CASE("run_sim is deterministic")
{
    GraphSpec spec{GraphFamily::Errg, 150};
    spec.p = 0.1;
    const Graph g = generate(spec, 1);
    SimConfig cfg;
    cfg.lambda = 0.95;
    cfg.d = 3;
    cfg.horizon = 5.0;
    cfg.seed = 77;
    cfg.tagged = {0, 5, 149};
    cfg.q_init = OccupancyVector{1.0, 0.3};
    cfg.fallback = FallbackPolicy::ClosedNeighborhoodJSQ;
    CHECK(dump(run_sim(g, cfg)) == dump(run_sim(g, cfg)));
    SimConfig other = cfg;
    other.seed = 78;
    CHECK(dump(run_sim(g, cfg)) != dump(run_sim(g, other)));
}

TEST_CASE("occupancy mass equals mean queue length at every grid time")
{
    const std::size_t n = 60;
    GraphSpec spec{GraphFamily::Circulant, n};
    spec.k = 4;
    const Graph g = generate(spec, 0);
    SimConfig cfg;
    cfg.lambda = 1.1;
    cfg.horizon = 8.0;
    cfg.sample_dt = 0.25;
    cfg.seed = 5;
    cfg.jmax = 200;
    cfg.tagged.resize(n);
    std::iota(cfg.tagged.begin(), cfg.tagged.end(), 0);
    const Trajectory t = run_sim(g, cfg);
    for (std::size_t k = 0; k < t.grid_times.size(); ++k)
    {
        double total = 0.0;
        for (const auto& path : t.tagged_paths)
            total += path_value(path, t.grid_times[k]);
        CHECK(t.occupancy_series[k].is_valid());
        CHECK(t.occupancy_series[k].mass() == doctest::Approx(total / n).epsilon(1e-12));
    }
    double final_total = 0.0;
    for (auto x : t.final_state.queues)
        final_total += x;
    CHECK(t.occupancy_series.back().mass() == doctest::Approx(final_total / n).epsilon(1e-12));
}

TEST_CASE("event counts match the integrated total rate")
{
    const std::size_t n = 200;
    const Graph g = generate({GraphFamily::Clique, n}, 0);
    for (std::uint64_t seed = 0; seed < 10; ++seed)
    {
        SimConfig cfg;
        cfg.lambda = 0.9;
        cfg.horizon = 10.0;
        cfg.sample_dt = 0.005;
        cfg.seed = seed;
        const Trajectory t = run_sim(g, cfg);
        double compensator = n * cfg.lambda * cfg.horizon;
        for (std::size_t k = 0; k + 1 < t.grid_times.size(); ++k)
            compensator += n * t.occupancy_series[k][1] * cfg.sample_dt;
        CHECK(std::abs(static_cast<double>(t.event_count) - compensator) <= 5.0 * std::sqrt(compensator));
        CHECK(t.event_count == t.arrivals + t.departures);
    }
}

TEST_CASE("long run settles near the fixed point and conserves work")
{
    const std::size_t n = 500;
    const Graph g = generate({GraphFamily::Clique, n}, 0);
    SimConfig cfg;
    cfg.lambda = 0.9;
    cfg.horizon = 200.0;
    cfg.sample_dt = 0.5;
    cfg.seed = 2718;
    const Trajectory t = run_sim(g, cfg);
    RunningStats q1;
    for (std::size_t k = 0; k < t.grid_times.size(); ++k)
        if (t.grid_times[k] >= 20.0)
            q1.add(t.occupancy_series[k][1]);
    CHECK(q1.mean() == doctest::Approx(0.9).epsilon(0.01));

    double final_total = 0.0;
    for (auto x : t.final_state.queues)
        final_total += x;
    CHECK(static_cast<double>(t.arrivals) - static_cast<double>(t.departures) == final_total);
    const double departure_rate = static_cast<double>(t.departures) / (n * cfg.horizon);
    CHECK(std::abs(departure_rate - cfg.lambda) <= 0.02);
}

TEST_CASE("tagged statistics are label-invariant on a vertex-transitive graph")
{
    GraphSpec spec{GraphFamily::Circulant, 30};
    spec.k = 3;
    const Graph g = generate(spec, 0);
    RunningStats a, b;
    for (std::uint64_t seed = 0; seed < 400; ++seed)
    {
        SimConfig cfg;
        cfg.lambda = 0.9;
        cfg.horizon = 5.0;
        cfg.sample_dt = 5.0;
        cfg.seed = seed;
        cfg.tagged = {0, 15};
        const Trajectory t = run_sim(g, cfg);
        a.add(t.final_state.queues[0]);
        b.add(t.final_state.queues[15]);
    }
    const double combined = std::sqrt(a.std_error() * a.std_error() + b.std_error() * b.std_error());
    CHECK(std::abs(a.mean() - b.mean()) <= 4.0 * combined);
}

TEST_CASE("simulation config validation")
{
    const Graph g = generate({GraphFamily::Clique, 5}, 0);
    SimConfig cfg;
    cfg.d = 1;
    CHECK_THROWS_AS(run_sim(g, cfg), ConfigError);
    cfg.d = 2;
    cfg.tagged = {7};
    CHECK_THROWS_AS(run_sim(g, cfg), ConfigError);
    cfg.tagged.clear();
    cfg.lambda = 5.0;
    cfg.horizon = 100.0;
    cfg.event_budget = 100;
    CHECK_THROWS_AS(run_sim(g, cfg), ModelError);
}
