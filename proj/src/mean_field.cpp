#include "graphsq/mean_field.hpp"

#include "graphsq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace graphsq
{
    namespace
    {
        double ipow(double base, std::size_t exp) noexcept
        {
            double r = 1.0;
            for (std::size_t k = 0; k < exp; ++k)
                r *= base;
            return r;
        }

        void rhs_into(std::span<const double> q, double lambda, std::size_t d, std::span<double> out) noexcept
        {
            const std::size_t top = q.size() - 1;
            out[0] = 0.0;
            double prev_pow = ipow(q[0], d);
            for (std::size_t i = 1; i <= top; ++i)
            {
                const double cur_pow = ipow(q[i], d);
                const double next = i < top ? q[i + 1] : 0.0;
                out[i] = lambda * (prev_pow - cur_pow) - (q[i] - next);
                prev_pow = cur_pow;
            }
        }
    } // namespace

    std::vector<double> ode_rhs(const OccupancyVector& q, double lambda, std::size_t d)
    {
        std::vector<double> out(q.truncation() + 1);
        rhs_into(q.values(), lambda, d, out);
        return out;
    }

    const OccupancyVector& OdeSolution::at(double t) const
    {
        if (t <= 0.0 || step <= 0.0)
            return states.front();
        const auto k = static_cast<std::size_t>(std::floor(t / step + 1e-9));
        return states[std::min(k, states.size() - 1)];
    }

    OdeSolution integrate(const OccupancyVector& q0, double lambda, std::size_t d, double horizon, double h,
                          std::size_t truncation, const OdeOptions& options)
    {
        if (!(h > 0.0))
            throw ConfigError("integrate: step h must be > 0");
        if (truncation < 2)
            throw ConfigError("integrate: truncation B must be >= 2");
        if (d < 2)
            throw ConfigError("integrate: d must be >= 2");
        if (!(lambda >= 0.0) || !(horizon >= 0.0))
            throw ConfigError("integrate: lambda and T must be >= 0");
        const OccupancyVector start = q0.truncated(truncation);
        start.validate(options.monotonicity_tol);

        const auto steps = static_cast<std::size_t>(std::max(0.0, std::ceil(horizon / h - 1e-9)));
        const double dt = steps > 0 ? horizon / static_cast<double>(steps) : h;

        OdeSolution sol;
        sol.lambda = lambda;
        sol.d = d;
        sol.truncation = truncation;
        sol.step = dt;
        sol.times.reserve(steps + 1);
        sol.states.reserve(steps + 1);
        sol.times.push_back(0.0);
        sol.states.push_back(start);
        sol.tail_mass_max = start[truncation];

        const std::size_t size = truncation + 1;
        std::vector<double> q(start.values().begin(), start.values().end());
        std::vector<double> k1(size), k2(size), k3(size), k4(size), tmp(size);
        for (std::size_t s = 1; s <= steps; ++s)
        {
            rhs_into(q, lambda, d, k1);
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = q[i] + 0.5 * dt * k1[i];
            rhs_into(tmp, lambda, d, k2);
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = q[i] + 0.5 * dt * k2[i];
            rhs_into(tmp, lambda, d, k3);
            for (std::size_t i = 0; i < size; ++i)
                tmp[i] = q[i] + dt * k3[i];
            rhs_into(tmp, lambda, d, k4);
            for (std::size_t i = 1; i < size; ++i)
                q[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

            OccupancyVector state(q);
            if (!state.is_valid(options.monotonicity_tol))
            {
                std::ostringstream msg;
                msg << "integrate: state left the tail-vector space at t=" << static_cast<double>(s) * dt
                    << " (step too large or truncation too small)";
                throw ModelError(msg.str());
            }
            sol.tail_mass_max = std::max(sol.tail_mass_max, q[truncation]);
            sol.times.push_back(static_cast<double>(s) * dt);
            sol.states.push_back(std::move(state));
        }
        sol.truncation_warning = sol.tail_mass_max > options.tail_threshold;
        return sol;
    }

    OccupancyVector fixed_point(double lambda, std::size_t d, std::size_t truncation)
    {
        if (!(lambda >= 0.0) || lambda >= 1.0)
            throw ConfigError("fixed_point: requires 0 <= lambda < 1 (got " + std::to_string(lambda) + ")");
        if (d < 2)
            throw ConfigError("fixed_point: d must be >= 2");
        std::vector<double> q(truncation + 1, 0.0);
        q[0] = 1.0;
        // exponent_j = (d^j - 1)/(d - 1) = d * exponent_{j-1} + 1
        double exponent = 0.0;
        for (std::size_t j = 1; j <= truncation; ++j)
        {
            exponent = static_cast<double>(d) * exponent + 1.0;
            q[j] = std::pow(lambda, exponent);
        }
        return OccupancyVector(std::move(q));
    }

    std::size_t default_truncation(double lambda, std::size_t d)
    {
        if (lambda >= 1.0)
            return 60;
        if (lambda <= 0.0)
            return 20;
        const OccupancyVector q = fixed_point(lambda, d, 200);
        std::size_t j = 1;
        while (j < 200 && q[j] >= 1e-14)
            ++j;
        return std::max<std::size_t>(j, 20);
    }

    double limit_intensity(std::size_t x, const OccupancyVector& q, std::size_t d) noexcept
    {
        const double hi = q[x], lo = q[x + 1];
        const double gap = hi - lo;
        if (gap < 1e-12)
            return static_cast<double>(d) * ipow(hi, d - 1);
        return (ipow(hi, d) - ipow(lo, d)) / gap;
    }

    double arrival_intensity_limit(std::size_t x, const OccupancyVector& q, std::size_t d)
    {
        if (d < 2)
            throw ConfigError("arrival_intensity_limit: d must be >= 2");
        if (q.truncation() < 1 || x > q.truncation() - 1)
            throw ConfigError("arrival_intensity_limit: level " + std::to_string(x) +
                              " outside truncation range 0.." + std::to_string(q.truncation() - 1));
        return limit_intensity(x, q, d);
    }

    TaggedPath simulate_mkv_path(const OdeSolution& sol, double lambda, std::size_t d, double horizon,
                                 const OccupancyVector& initial_law, Rng& rng)
    {
        initial_law.validate();
        const double u0 = rng.uniform();
        QueueLength x = 0;
        while (x < initial_law.truncation() && u0 < initial_law[x + 1])
            ++x;

        TaggedPath path{{0.0, x}};
        const double dominating = lambda * static_cast<double>(d) + 1.0;
        double t = 0.0;
        while (true)
        {
            t += rng.exponential(dominating);
            if (t > horizon)
                break;
            if (rng.uniform() * dominating < 1.0)
            {
                if (x > 0)
                    path.emplace_back(t, --x);
                continue;
            }
            const double mark = rng.uniform() * static_cast<double>(d);
            if (mark <= limit_intensity(x, sol.at(t), d))
                path.emplace_back(t, ++x);
        }
        return path;
    }

    QueueLength path_value(const TaggedPath& path, double t)
    {
        auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double value, const auto& point) { return value < point.first; });
        return it == path.begin() ? path.front().second : std::prev(it)->second;
    }

    double sup_grid_l1(std::span<const double> times, std::span<const OccupancyVector> series,
                       const OdeSolution& sol)
    {
        double worst = 0.0;
        for (std::size_t k = 0; k < times.size() && k < series.size(); ++k)
            worst = std::max(worst, l1_distance(series[k], sol.at(times[k])));
        return worst;
    }

    void write_fixed_point_csv(std::ostream& out, const OccupancyVector& q_star)
    {
        out << "j,q_star\n";
        const auto old_precision = out.precision(17);
        for (std::size_t j = 0; j <= q_star.truncation(); ++j)
            out << j << ',' << q_star[j] << '\n';
        out.precision(old_precision);
    }
} // namespace graphsq
