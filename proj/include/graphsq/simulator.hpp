#pragma once

#include "graphsq/graph.hpp"
#include "graphsq/occupancy.hpp"
#include "graphsq/rng.hpp"
#include "graphsq/routing.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace graphsq
{
    struct SimConfig
    {
        double lambda = 0.9;  ///< arrival rate per server
        std::size_t d = 2;
        double horizon = 10.0;
        double sample_dt = 0.1;
        std::uint64_t seed = 0;
        FallbackPolicy fallback = FallbackPolicy::SelfOnly;
        OccupancyVector q_init = OccupancyVector::empty(1);
        std::vector<Vertex> tagged;
        std::size_t jmax = 40;
        std::uint64_t event_budget = 500'000'000;

        /// Throws ConfigError on out-of-domain parameters.
        void validate(std::size_t n) const;
    };

    /// Piecewise-constant path: initial value at t=0, then (event time, new length).
    using TaggedPath = std::vector<std::pair<double, QueueLength>>;

    struct Trajectory
    {
        std::vector<double> grid_times;
        std::vector<OccupancyVector> occupancy_series;
        std::vector<Vertex> tagged;
        std::vector<TaggedPath> tagged_paths;
        SystemState final_state;
        std::uint64_t event_count = 0;
        std::uint64_t arrivals = 0;
        std::uint64_t departures = 0;
    };

    /// iid queue lengths with P(X >= j) = q_init[j], by inverse-tail sampling
    /// (X = max{j : U < q_j}). Throws ConfigError for an invalid tail vector.
    SystemState sample_initial(std::size_t n, const OccupancyVector& q_init, Rng& rng);

    /// Event-driven exact simulation of JSQ(d) on g.
    ///
    /// Aggregate-rate scheme: total rate n*lambda + (#busy servers); the next
    /// event is an arrival with probability n*lambda/total (origin uniform,
    /// routed by Router) and otherwise a departure from a uniformly chosen busy
    /// server. Per event the stream is consumed as: holding time, event type,
    /// origin or busy slot, then routing draws. Initial state comes from
    /// sample_initial on the same stream. Occupancy at a grid time is the state
    /// after the last event at or before that time. Throws ModelError when the
    /// event budget is exceeded.
    Trajectory run_sim(const Graph& g, const SimConfig& cfg);

    /// CSV `t,j,q_j`, one row per grid time and level j = 0..B.
    void write_occupancy_csv(std::ostream& out, std::span<const double> times,
                             std::span<const OccupancyVector> series);

    /// CSV `server,t,x`.
    void write_tagged_csv(std::ostream& out, const Trajectory& trajectory);
} // namespace graphsq
