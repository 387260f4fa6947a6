#pragma once

#include "graphsq/graph.hpp"
#include "graphsq/occupancy.hpp"
#include "graphsq/rng.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace graphsq
{
    /// Assignment rule for arrivals at a server with fewer than d-1 neighbors.
    enum class FallbackPolicy
    {
        SelfOnly,               ///< the task joins the arrival server's own queue
        ClosedNeighborhoodJSQ,  ///< shortest queue over the server and all its neighbors
    };

    FallbackPolicy parse_fallback(const std::string& name);
    std::string fallback_name(FallbackPolicy policy);

    struct RoutingSample
    {
        Vertex origin = 0;
        std::vector<Vertex> targets;  ///< d-1 distinct sampled neighbors; empty under fallback
        Vertex destination = 0;
        bool fallback = false;
    };

    /// Probability that the first entry of x wins: 1/k if x[0] is a minimum
    /// attained by exactly k entries, else 0. Throws ConfigError on empty input.
    double tie_break_b(std::span<const QueueLength> x);

    /// Stateful router that reuses its scratch buffers across calls.
    ///
    /// RNG consumption order per arrival: d-1 neighbor draws (uniform index,
    /// redrawn on repeats), then one tie-break draw only when two or more
    /// contenders share the minimum. Contenders are ordered origin first,
    /// then targets in sampling order (fallback: origin, then sorted neighbors).
    class Router
    {
    public:
        Vertex route(const Graph& g, std::span<const QueueLength> queues, Vertex origin, std::size_t d, Rng& rng,
                     FallbackPolicy fallback);

        /// Targets sampled by the most recent route() call.
        std::span<const Vertex> last_targets() const noexcept { return targets_; }
        bool last_was_fallback() const noexcept { return fallback_; }

    private:
        std::vector<Vertex> targets_;
        std::vector<Vertex> contenders_;
        bool fallback_ = false;
    };

    RoutingSample route_arrival(const Graph& g, std::span<const QueueLength> queues, Vertex origin, std::size_t d,
                                Rng& rng, FallbackPolicy fallback);

    /// Probability that a contender at level x wins when m contenders are
    /// drawn without replacement from a pool of `pool` queues, `lower` of them
    /// strictly shorter and `equal` of them tied at x, with `fixed_ties` more
    /// contenders always present and tied at x. Ties are broken uniformly.
    double win_probability(std::size_t pool, std::size_t lower, std::size_t equal, std::size_t m,
                           std::size_t fixed_ties);

    /// Total acceptance weight C_i of server i (its arrival rate is lambda*C_i),
    /// in closed form via hypergeometric tie counts.
    double arrival_intensity_exact(const Graph& g, std::span<const QueueLength> queues, Vertex i, std::size_t d,
                                   FallbackPolicy fallback);

    /// Literal evaluation over ordered tuples with distinct entries, weighted
    /// by the inverse falling factorial of the origin's degree. Throws
    /// ConfigError when the tuple count exceeds `tuple_budget`.
    double arrival_intensity_bruteforce(const Graph& g, std::span<const QueueLength> queues, Vertex i,
                                        std::size_t d, FallbackPolicy fallback,
                                        std::size_t tuple_budget = 10'000'000);

    /// Per-vertex histograms of (out-)neighbor queue levels, kept current
    /// under single-queue updates, so C_i costs O(in-degree) instead of the
    /// sum of neighbor degrees. Agrees with arrival_intensity_exact.
    class NeighborLevelIndex
    {
    public:
        NeighborLevelIndex(const Graph& g, std::span<const QueueLength> queues);

        /// Record that vertex k moved from level `from` to level `to`.
        void move(Vertex k, QueueLength from, QueueLength to);

        double intensity(Vertex i, std::span<const QueueLength> queues, std::size_t d,
                         FallbackPolicy fallback) const;

    private:
        std::size_t count(Vertex v, QueueLength level) const noexcept
        {
            return level < stride_ ? counts_[static_cast<std::size_t>(v) * stride_ + level] : 0;
        }
        std::size_t count_below(Vertex v, QueueLength level) const noexcept;
        void grow(std::size_t min_stride);

        const Graph* graph_;
        std::size_t stride_ = 0;
        std::vector<std::uint32_t> counts_;
    };
} // namespace graphsq
