#include "doctest.h"

#include "graphsq/errors.hpp"
#include "graphsq/mean_field.hpp"
#include "graphsq/routing.hpp"

#include <cmath>
#include <vector>

using namespace graphsq;

namespace
{
    OccupancyVector random_tail(Rng& rng, std::size_t support)
    {
        // Random pmf on {0..support}, converted to a tail vector.
        std::vector<double> pmf(support + 1);
        double total = 0.0;
        for (auto& w : pmf)
        {
            w = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
            total += w;
        }
        if (total == 0.0)
        {
            pmf[0] = 1.0;
            total = 1.0;
        }
        std::vector<double> tail(support + 2, 0.0);
        for (std::size_t j = support + 1; j-- > 0;)
            tail[j] = tail[j + 1] + pmf[j] / total;
        tail[0] = 1.0;
        for (std::size_t j = 1; j < tail.size(); ++j)
            tail[j] = std::min(tail[j], tail[j - 1]);
        return OccupancyVector(tail);
    }

    // E[b(x, Y_2, ..., Y_d)] for Y iid with tail q, by enumerating {0..top}^{d-1}.
    double expected_b(QueueLength x, const OccupancyVector& q, std::size_t d, std::size_t top)
    {
        std::vector<QueueLength> y(d - 1, 0);
        double total = 0.0;
        while (true)
        {
            double weight = 1.0;
            std::vector<QueueLength> tuple{x};
            for (auto v : y)
            {
                weight *= q[v] - q[v + 1];
                tuple.push_back(v);
            }
            if (weight > 0.0)
                total += weight * tie_break_b(tuple);
            std::size_t pos = y.size();
            while (pos > 0 && ++y[pos - 1] > top)
                y[--pos] = 0;
            if (pos == 0)
                break;
        }
        return total;
    }

    double ipow(double b, std::size_t e)
    {
        double r = 1.0;
        while (e--)
            r *= b;
        return r;
    }
} // namespace

TEST_CASE("ode right-hand side")
{
    const auto empty = ode_rhs(OccupancyVector::empty(5), 0.7, 2);
    CHECK(empty[1] == doctest::Approx(0.7));
    for (std::size_t j = 2; j <= 5; ++j)
        CHECK(empty[j] == 0.0);

    const OccupancyVector q{1.0, 0.8, 0.5, 0.1};
    const auto relax = ode_rhs(q, 0.0, 3);
    CHECK(relax[1] == doctest::Approx(-(0.8 - 0.5)));
    CHECK(relax[2] == doctest::Approx(-(0.5 - 0.1)));
    CHECK(relax[3] == doctest::Approx(-0.1));
}

TEST_CASE("fixed point values and residual")
{
    const auto q = fixed_point(0.9, 2, 30);
    CHECK(q[1] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(q[2] == doctest::Approx(0.729).epsilon(1e-14));
    CHECK(std::abs(q[3] - 0.4782969) <= 1e-12);
    for (double lambda : {0.5, 0.7, 0.9})
        for (std::size_t d : {2, 3})
        {
            const auto r = ode_rhs(fixed_point(lambda, d, 30), lambda, d);
            double l1 = 0.0;
            for (std::size_t i = 1; i <= 29; ++i)
                l1 += std::abs(r[i]);
            CHECK(l1 <= 1e-10);
        }
    CHECK(fixed_point(0.0, 2, 5) == OccupancyVector::empty(5));
    CHECK_THROWS_AS(fixed_point(1.0, 2, 10), ConfigError);
    CHECK_THROWS_AS(fixed_point(1.2, 2, 10), ConfigError);
    CHECK(default_truncation(0.9, 2) == 20);
    CHECK(default_truncation(0.99, 2) >= 20);
    CHECK(fixed_point(0.99, 2, default_truncation(0.99, 2))[default_truncation(0.99, 2)] < 1e-14);
}

TEST_CASE("linear relaxation matches exp(-t)")
{
    const auto sol = integrate(OccupancyVector{1.0, 1.0, 0.0}, 0.0, 2, 1.0, 1e-3, 20);
    CHECK(sol.times.size() == 1001);
    CHECK(std::abs(sol.states.back()[1] - std::exp(-1.0)) <= 1e-8);
    for (const auto& s : sol.states)
        CHECK(s[2] == 0.0);
}

TEST_CASE("fixed point is invariant under the flow")
{
    const auto q_star = fixed_point(0.9, 2, 30);
    const auto sol = integrate(q_star, 0.9, 2, 10.0, 1e-3, 30);
    double drift = 0.0;
    for (const auto& s : sol.states)
        drift = std::max(drift, l1_distance(s, q_star));
    CHECK(drift <= 1e-8);
    CHECK_FALSE(sol.truncation_warning);
}

TEST_CASE("integrated states stay in the tail space")
{
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto q0 = random_tail(rng, 8);
        const double lambda = 0.3 + 1.2 * rng.uniform();
        const auto sol = integrate(q0, lambda, 2 + trial % 3, 3.0, 1e-2, 40);
        for (const auto& s : sol.states)
            REQUIRE(s.is_valid(1e-9));
    }
}

TEST_CASE("RK4 step halving shows fourth order")
{
    const OccupancyVector q0{1.0, 0.9};
    std::vector<double> hs{0.2, 0.1, 0.05, 0.025};
    std::vector<OccupancyVector> ends;
    for (double h : hs)
        ends.push_back(integrate(q0, 0.9, 2, 2.0, h, 30).states.back());
    std::vector<double> log_h, log_e;
    for (std::size_t k = 0; k + 1 < ends.size(); ++k)
    {
        log_h.push_back(std::log(hs[k]));
        log_e.push_back(std::log(l1_distance(ends[k], ends[k + 1])));
    }
    const double mh = (log_h[0] + log_h[1] + log_h[2]) / 3.0, me = (log_e[0] + log_e[1] + log_e[2]) / 3.0;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < 3; ++k)
    {
        num += (log_h[k] - mh) * (log_e[k] - me);
        den += (log_h[k] - mh) * (log_h[k] - mh);
    }
    CHECK(num / den >= 3.5);
}

TEST_CASE("distance to the fixed point does not increase (regression)")
{
    const double lambda = 0.9;
    const auto q_star = fixed_point(lambda, 2, 30);
    const auto sol = integrate(OccupancyVector{1.0, lambda}, lambda, 2, 30.0, 1e-2, 30);
    double prev = l1_distance(sol.states.front(), q_star);
    for (std::size_t k = 50; k < sol.states.size(); k += 50)
    {
        const double cur = l1_distance(sol.states[k], q_star);
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("integrate error paths")
{
    OccupancyVector ones(std::vector<double>(6, 1.0));
    const auto sol = integrate(ones, 0.5, 2, 0.5, 1e-2, 5);
    CHECK(sol.truncation_warning);
    CHECK(sol.tail_mass_max == doctest::Approx(1.0));
    CHECK_THROWS_AS(integrate(ones, 0.0, 2, 20.0, 3.0, 5), ModelError);
    CHECK_THROWS_AS(integrate(ones, 0.5, 2, 1.0, 0.0, 5), ConfigError);
    CHECK_THROWS_AS(integrate(ones, 0.5, 2, 1.0, 0.1, 1), ConfigError);
}

TEST_CASE("limit intensity closed form")
{
    CHECK(arrival_intensity_limit(0, OccupancyVector{1.0, 0.0}, 2) == 1.0);
    CHECK(arrival_intensity_limit(0, OccupancyVector{1.0, 1.0}, 3) == 3.0);
    CHECK(arrival_intensity_limit(1, OccupancyVector{1.0, 1.0, 1.0}, 4) == 4.0);
    CHECK_THROWS_AS(arrival_intensity_limit(3, OccupancyVector{1.0, 0.5, 0.2}, 2), ConfigError);

    Rng rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto q = random_tail(rng, 6);
        for (std::size_t d : {2, 3})
            for (QueueLength x = 0; x <= 6; ++x)
            {
                const double c = arrival_intensity_limit(x, q, d);
                CHECK(c >= 0.0);
                CHECK(c <= static_cast<double>(d) + 1e-12);
                if (q[x] - q[x + 1] >= 1e-12)
                    worst = std::max(worst, std::abs(c - d * expected_b(x, q, d, 6)));
            }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("b-aggregation identity")
{
    Rng rng(1234);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial)
    {
        const auto q = random_tail(rng, 6);
        for (std::size_t d : {2, 3})
            for (QueueLength j = 1; j <= 7; ++j)
            {
                const double lhs = d * (q[j - 1] - q[j]) * expected_b(j - 1, q, d, 6);
                const double rhs = ipow(q[j - 1], d) - ipow(q[j], d);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("limit process sampler")
{
    const auto sol0 = integrate(OccupancyVector{1.0, 1.0, 1.0, 0.5}, 0.0, 2, 30.0, 1e-2, 20);
    Rng rng(9);
    const auto path = simulate_mkv_path(sol0, 0.0, 2, 30.0, OccupancyVector{1.0, 1.0, 1.0, 1.0}, rng);
    CHECK(path.front().second == 3);
    for (std::size_t k = 1; k < path.size(); ++k)
        CHECK(path[k].second + 1 == path[k - 1].second);
    CHECK(path.back().second == 0);

    const auto q_star = fixed_point(0.9, 2, 20);
    const auto sol = integrate(q_star, 0.9, 2, 10.0, 1e-2, 20);
    Rng a(42), b(42);
    CHECK(simulate_mkv_path(sol, 0.9, 2, 10.0, q_star, a) == simulate_mkv_path(sol, 0.9, 2, 10.0, q_star, b));

    const std::size_t reps = 10000;
    std::size_t busy = 0;
    for (std::size_t r = 0; r < reps; ++r)
    {
        Rng rr(derive_seed(100, r));
        busy += path_value(simulate_mkv_path(sol, 0.9, 2, 10.0, q_star, rr), 10.0) >= 1;
    }
    const double sd = std::sqrt(0.9 * 0.1 / reps);
    CHECK(std::abs(static_cast<double>(busy) / reps - 0.9) <= 4.0 * sd);
}

TEST_CASE("l1 distance")
{
    const OccupancyVector a{1.0, 0.5, 0.0};
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, OccupancyVector{1.0, 0.4, 0.1}) == doctest::Approx(0.2));
    CHECK(l1_distance(OccupancyVector{1.0, 0.5}, OccupancyVector{1.0, 0.5, 0.25}) == doctest::Approx(0.25));
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial)
    {
        const auto x = random_tail(rng, 5), y = random_tail(rng, 7), z = random_tail(rng, 4);
        CHECK(l1_distance(x, z) <= l1_distance(x, y) + l1_distance(y, z) + 1e-15);
        CHECK(l1_distance(x, y) == l1_distance(y, x));
    }
}
