#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace graphsq
{
    /// Count, sum and sum of squares, accumulated in insertion order.
    struct RunningStats
    {
        std::size_t count = 0;
        double sum = 0.0;
        double sum_sq = 0.0;

        void add(double x) noexcept
        {
            ++count;
            sum += x;
            sum_sq += x * x;
        }

        double mean() const noexcept { return count ? sum / static_cast<double>(count) : 0.0; }

        /// Unbiased sample variance (0 for fewer than two samples).
        double variance() const noexcept
        {
            if (count < 2)
                return 0.0;
            const double n = static_cast<double>(count);
            const double v = (sum_sq - sum * sum / n) / (n - 1.0);
            return v > 0.0 ? v : 0.0;
        }

        double std_error() const noexcept
        {
            return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
        }
    };

    /// Batch counterpart of RunningStats; bit-identical for the same sequence.
    RunningStats summarize(std::span<const double> values) noexcept;

    struct CovarianceSummary
    {
        double cov = 0.0;
        double std_error = 0.0;
        std::size_t count = 0;
    };

    /// Sample covariance sum_r (f_r - mean f)(g_r - mean g) / (R - 1) with the
    /// standard error of the mean of the centered products.
    CovarianceSummary sample_covariance(std::span<const double> f, std::span<const double> g);
} // namespace graphsq
