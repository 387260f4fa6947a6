#include "graphsq/occupancy.hpp"

#include "graphsq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace graphsq
{
    namespace
    {
        OccupancyVector tail_from_counts(std::span<const std::size_t> at_level, std::size_t total, std::size_t jmax)
        {
            // at_level[j] counts entries equal to j (clamped at jmax).
            std::vector<double> tail(jmax + 1, 0.0);
            std::size_t at_least = 0;
            for (std::size_t j = jmax + 1; j-- > 0;)
            {
                at_least += at_level[j];
                tail[j] = static_cast<double>(at_least) / static_cast<double>(total);
            }
            tail[0] = 1.0;
            return OccupancyVector(std::move(tail));
        }
    } // namespace

    OccupancyVector::OccupancyVector(std::vector<double> tail) : tail_(std::move(tail))
    {
        if (tail_.empty())
            throw ConfigError("occupancy vector needs at least q_0");
    }

    OccupancyVector OccupancyVector::empty(std::size_t truncation)
    {
        std::vector<double> tail(truncation + 1, 0.0);
        tail[0] = 1.0;
        return OccupancyVector(std::move(tail));
    }

    OccupancyVector OccupancyVector::truncated(std::size_t truncation) const
    {
        std::vector<double> tail(truncation + 1, 0.0);
        std::copy_n(tail_.begin(), std::min(tail.size(), tail_.size()), tail.begin());
        return OccupancyVector(std::move(tail));
    }

    bool OccupancyVector::is_valid(double tol) const noexcept
    {
        if (std::abs(tail_[0] - 1.0) > tol)
            return false;
        for (std::size_t j = 0; j < tail_.size(); ++j)
        {
            if (!(tail_[j] >= -tol && tail_[j] <= 1.0 + tol))
                return false;
            if (j > 0 && tail_[j] > tail_[j - 1] + tol)
                return false;
        }
        return true;
    }

    void OccupancyVector::validate(double tol) const
    {
        if (std::abs(tail_[0] - 1.0) > tol)
            throw ConfigError("occupancy vector must have q_0 = 1");
        for (std::size_t j = 0; j < tail_.size(); ++j)
        {
            if (!(tail_[j] >= -tol && tail_[j] <= 1.0 + tol))
            {
                std::ostringstream msg;
                msg << "occupancy vector entry q_" << j << " = " << tail_[j] << " outside [0, 1]";
                throw ConfigError(msg.str());
            }
            if (j > 0 && tail_[j] > tail_[j - 1] + tol)
            {
                std::ostringstream msg;
                msg << "occupancy vector not non-increasing at j=" << j << " (" << tail_[j - 1] << " < "
                    << tail_[j] << ")";
                throw ConfigError(msg.str());
            }
        }
    }

    double OccupancyVector::mass() const noexcept
    {
        double sum = 0.0;
        for (std::size_t j = 1; j < tail_.size(); ++j)
            sum += tail_[j];
        return sum;
    }

    double l1_distance(const OccupancyVector& a, const OccupancyVector& b)
    {
        const std::size_t top = std::max(a.truncation(), b.truncation());
        double sum = 0.0;
        for (std::size_t j = 1; j <= top; ++j)
            sum += std::abs(a[j] - b[j]);
        return sum;
    }

    OccupancyVector occupancy(std::span<const QueueLength> queues, std::size_t jmax)
    {
        if (jmax < 1)
            throw ConfigError("occupancy needs jmax >= 1");
        if (queues.empty())
            throw ConfigError("occupancy of an empty system");
        std::vector<std::size_t> at_level(jmax + 1, 0);
        for (QueueLength x : queues)
            ++at_level[std::min<std::size_t>(x, jmax)];
        return tail_from_counts(at_level, queues.size(), jmax);
    }

    OccupancyVector neighborhood_occupancy(const Graph& g, std::span<const QueueLength> queues, Vertex i,
                                           std::size_t jmax)
    {
        if (jmax < 1)
            throw ConfigError("occupancy needs jmax >= 1");
        if (i >= g.size() || queues.size() != g.size())
            throw ConfigError("neighborhood_occupancy: vertex or state size mismatch");
        std::vector<std::size_t> at_level(jmax + 1, 0);
        ++at_level[std::min<std::size_t>(queues[i], jmax)];
        for (Vertex j : g.neighbors(i))
            ++at_level[std::min<std::size_t>(queues[j], jmax)];
        return tail_from_counts(at_level, g.degree(i) + 1, jmax);
    }
} // namespace graphsq
