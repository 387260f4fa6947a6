#include "graphsq/stats.hpp"

#include "graphsq/errors.hpp"

#include <vector>

namespace graphsq
{
    RunningStats summarize(std::span<const double> values) noexcept
    {
        RunningStats s;
        for (double v : values)
        {
            ++s.count;
            s.sum += v;
            s.sum_sq += v * v;
        }
        return s;
    }

    CovarianceSummary sample_covariance(std::span<const double> f, std::span<const double> g)
    {
        if (f.size() != g.size())
            throw ConfigError("sample_covariance: length mismatch");
        CovarianceSummary out;
        out.count = f.size();
        if (f.size() < 2)
            return out;
        const double mf = summarize(f).mean();
        const double mg = summarize(g).mean();
        std::vector<double> products(f.size());
        for (std::size_t r = 0; r < f.size(); ++r)
            products[r] = (f[r] - mf) * (g[r] - mg);
        const RunningStats p = summarize(products);
        const double n = static_cast<double>(f.size());
        out.cov = p.sum / (n - 1.0);
        out.std_error = p.std_error();
        return out;
    }
} // namespace graphsq
