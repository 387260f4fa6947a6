#pragma once

#include "graphsq/graph.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace graphsq
{
    using QueueLength = std::uint32_t;

    /// Queue lengths X_i at a time point.
    struct SystemState
    {
        double time = 0.0;
        std::vector<QueueLength> queues;

        friend bool operator==(const SystemState&, const SystemState&) = default;
    };

    /// Truncated tail vector (q_0, ..., q_B): q_j is the fraction (or
    /// probability) of queues holding at least j tasks; q_j = 0 beyond B.
    class OccupancyVector
    {
    public:
        OccupancyVector() : tail_{1.0} {}
        explicit OccupancyVector(std::vector<double> tail);
        OccupancyVector(std::initializer_list<double> tail) : OccupancyVector(std::vector<double>(tail)) {}

        /// The empty system (1, 0, ..., 0) with truncation level B.
        static OccupancyVector empty(std::size_t truncation);

        std::size_t truncation() const noexcept { return tail_.size() - 1; }
        double operator[](std::size_t j) const noexcept { return j < tail_.size() ? tail_[j] : 0.0; }
        std::span<const double> values() const noexcept { return tail_; }

        /// Same tail re-truncated at level B (padding with zeros or dropping levels).
        OccupancyVector truncated(std::size_t truncation) const;

        /// True when q_0 = 1 and 0 <= q_{j+1} <= q_j <= 1, all within tol.
        bool is_valid(double tol = 0.0) const noexcept;

        /// Throws ConfigError describing the first violated property.
        void validate(double tol = 0.0) const;

        /// Sum_{j>=1} q_j, the mean queue length for a distribution tail.
        double mass() const noexcept;

        friend bool operator==(const OccupancyVector&, const OccupancyVector&) = default;

    private:
        std::vector<double> tail_;
    };

    /// Sum_{j>=1} |a_j - b_j|, comparing on the union of supports.
    double l1_distance(const OccupancyVector& a, const OccupancyVector& b);

    /// q_j = #{i : X_i >= j} / n for j = 0..jmax.
    OccupancyVector occupancy(std::span<const QueueLength> queues, std::size_t jmax);

    /// Tail of (1/(D_i+1)) (delta_{X_i} + sum_{j in nbrs(i)} delta_{X_j}).
    OccupancyVector neighborhood_occupancy(const Graph& g, std::span<const QueueLength> queues, Vertex i,
                                           std::size_t jmax);
} // namespace graphsq
