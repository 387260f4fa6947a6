#pragma once

#include "graphsq/occupancy.hpp"
#include "graphsq/rng.hpp"
#include "graphsq/simulator.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace graphsq
{
    /// dq_i/dt = lambda (q_{i-1}^d - q_i^d) - (q_i - q_{i+1}) for i = 1..B with
    /// q_{B+1} = 0. Entry 0 of the result is always 0.
    std::vector<double> ode_rhs(const OccupancyVector& q, double lambda, std::size_t d);

    struct OdeSolution
    {
        std::vector<double> times;
        std::vector<OccupancyVector> states;
        double lambda = 0.0;
        std::size_t d = 2;
        std::size_t truncation = 0;
        double step = 0.0;
        double tail_mass_max = 0.0;   ///< max_t q_B(t)
        bool truncation_warning = false;

        /// State at the last grid point <= t (clamped to the ends).
        const OccupancyVector& at(double t) const;
    };

    struct OdeOptions
    {
        double monotonicity_tol = 1e-9;
        double tail_threshold = 1e-6;  ///< q_B above this sets truncation_warning
    };

    /// Classical RK4 with a fixed step: ceil(T/h) steps of size T/steps.
    /// Every state must stay in the tail-vector space within monotonicity_tol;
    /// violations throw ModelError rather than being clipped.
    OdeSolution integrate(const OccupancyVector& q0, double lambda, std::size_t d, double horizon, double h,
                          std::size_t truncation, const OdeOptions& options = {});

    /// q*_j = lambda^{(d^j - 1)/(d - 1)}, j = 0..B. Requires 0 <= lambda < 1.
    OccupancyVector fixed_point(double lambda, std::size_t d, std::size_t truncation);

    /// Smallest j with q*_j < 1e-14, at least 20. For lambda >= 1 (no fixed
    /// point) returns 60.
    std::size_t default_truncation(double lambda, std::size_t d);

    /// Limit acceptance weight d * E[b(x, Y_2, ..., Y_d)] with Y iid of tail q:
    /// (q_x^d - q_{x+1}^d)/(q_x - q_{x+1}), or d q_x^{d-1} when the gap is
    /// below 1e-12. Throws ConfigError unless x <= B-1.
    double arrival_intensity_limit(std::size_t x, const OccupancyVector& q, std::size_t d);

    /// Same formula without the range check; levels beyond B read as 0.
    double limit_intensity(std::size_t x, const OccupancyVector& q, std::size_t d) noexcept;

    /// Tagged-queue path of the limiting birth-death process: deaths at rate
    /// 1{x>0}, births at rate lambda * limit_intensity(x, q(t-), d), by
    /// thinning at rate lambda*d + 1. Stream order: one uniform for X(0), then
    /// per candidate an exponential gap, a type uniform, and (for arrival
    /// candidates) a mark uniform on [0, d].
    TaggedPath simulate_mkv_path(const OdeSolution& sol, double lambda, std::size_t d, double horizon,
                                 const OccupancyVector& initial_law, Rng& rng);

    /// Value of a piecewise-constant path at time t.
    QueueLength path_value(const TaggedPath& path, double t);

    /// max over recorded grid times of l1(series[k], q(times[k])).
    double sup_grid_l1(std::span<const double> times, std::span<const OccupancyVector> series,
                       const OdeSolution& sol);

    void write_fixed_point_csv(std::ostream& out, const OccupancyVector& q_star);
} // namespace graphsq
