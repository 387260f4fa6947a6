#include "graphsq/routing.hpp"

#include "graphsq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace graphsq
{
    namespace
    {
        struct LevelCounts
        {
            std::size_t lower = 0;
            std::size_t equal = 0;
        };

        // Weight with which an arrival at the server itself is kept there.
        double own_term(std::size_t degree, LevelCounts c, std::size_t d, FallbackPolicy fallback)
        {
            const std::size_t m = d - 1;
            if (degree >= m)
                return win_probability(degree, c.lower, c.equal, m, 0);
            if (fallback == FallbackPolicy::SelfOnly)
                return 1.0;
            return c.lower == 0 ? 1.0 / static_cast<double>(c.equal + 1) : 0.0;
        }

        // Weight with which an arrival at neighbor j is forwarded to the server
        // (level x). `others` counts j's neighbors other than the server.
        double forwarded_term(std::size_t degree_j, LevelCounts others, QueueLength xj, QueueLength x, std::size_t d,
                              FallbackPolicy fallback)
        {
            if (xj < x)
                return 0.0;
            const std::size_t m = d - 1;
            const std::size_t j_ties = xj == x ? 1 : 0;
            if (degree_j >= m)
            {
                const double sampled = static_cast<double>(m) / static_cast<double>(degree_j);
                return sampled * win_probability(degree_j - 1, others.lower, others.equal, m - 1, j_ties);
            }
            if (fallback == FallbackPolicy::SelfOnly)
                return 0.0;
            return others.lower == 0 ? 1.0 / static_cast<double>(others.equal + 1 + j_ties) : 0.0;
        }

        LevelCounts scan_levels(const Graph& g, std::span<const QueueLength> queues, Vertex v, QueueLength x,
                                Vertex skip)
        {
            LevelCounts c;
            for (Vertex k : g.neighbors(v))
            {
                if (k == skip)
                    continue;
                if (queues[k] < x)
                    ++c.lower;
                else if (queues[k] == x)
                    ++c.equal;
            }
            return c;
        }

        void check_inputs(const Graph& g, std::span<const QueueLength> queues, Vertex i, std::size_t d)
        {
            if (d < 2)
                throw ConfigError("number of choices d must be >= 2");
            if (queues.size() != g.size())
                throw ConfigError("state size does not match graph size");
            if (i >= g.size())
                throw ConfigError("vertex index out of range");
        }

        double falling_factorial(std::size_t n, std::size_t k)
        {
            double v = 1.0;
            for (std::size_t t = 0; t < k; ++t)
                v *= static_cast<double>(n) - static_cast<double>(t);
            return v;
        }

        // Calls visit(tuple) for every tuple in [n]^r, lexicographically.
        template <class Visit>
        void for_each_tuple(std::size_t n, std::size_t r, std::vector<Vertex>& tuple, Visit&& visit)
        {
            tuple.assign(r, 0);
            if (r > 0 && n == 0)
                return;
            while (true)
            {
                visit(tuple);
                std::size_t pos = r;
                while (pos > 0)
                {
                    --pos;
                    if (++tuple[pos] < n)
                        break;
                    tuple[pos] = 0;
                    if (pos == 0)
                        return;
                }
                if (r == 0)
                    return;
            }
        }
    } // namespace

    FallbackPolicy parse_fallback(const std::string& name)
    {
        if (name == "self" || name == "self-only" || name == "SelfOnly")
            return FallbackPolicy::SelfOnly;
        if (name == "closed-jsq" || name == "closed-neighborhood-jsq" || name == "ClosedNeighborhoodJSQ")
            return FallbackPolicy::ClosedNeighborhoodJSQ;
        throw ConfigError("unknown fallback policy '" + name + "'");
    }

    std::string fallback_name(FallbackPolicy policy)
    {
        return policy == FallbackPolicy::SelfOnly ? "self-only" : "closed-jsq";
    }

    double tie_break_b(std::span<const QueueLength> x)
    {
        if (x.empty())
            throw ConfigError("tie_break_b: empty tuple");
        const QueueLength first = x[0];
        std::size_t ties = 0;
        for (QueueLength v : x)
        {
            if (v < first)
                return 0.0;
            if (v == first)
                ++ties;
        }
        return 1.0 / static_cast<double>(ties);
    }

    Vertex Router::route(const Graph& g, std::span<const QueueLength> queues, Vertex origin, std::size_t d, Rng& rng,
                         FallbackPolicy fallback)
    {
        const auto nbrs = g.neighbors(origin);
        const std::size_t m = d - 1;
        targets_.clear();
        contenders_.clear();
        contenders_.push_back(origin);
        fallback_ = nbrs.size() < m;
        if (!fallback_)
        {
            while (targets_.size() < m)
            {
                const Vertex candidate = nbrs[rng.below(nbrs.size())];
                if (std::find(targets_.begin(), targets_.end(), candidate) == targets_.end())
                    targets_.push_back(candidate);
            }
            contenders_.insert(contenders_.end(), targets_.begin(), targets_.end());
        }
        else if (fallback == FallbackPolicy::SelfOnly)
        {
            return origin;
        }
        else
        {
            contenders_.insert(contenders_.end(), nbrs.begin(), nbrs.end());
        }

        QueueLength best = queues[contenders_[0]];
        std::size_t ties = 0;
        for (Vertex c : contenders_)
        {
            if (queues[c] < best)
            {
                best = queues[c];
                ties = 1;
            }
            else if (queues[c] == best)
            {
                ++ties;
            }
        }
        std::size_t pick = ties > 1 ? rng.below(ties) : 0;
        for (Vertex c : contenders_)
            if (queues[c] == best && pick-- == 0)
                return c;
        return origin;  // unreachable
    }

    RoutingSample route_arrival(const Graph& g, std::span<const QueueLength> queues, Vertex origin, std::size_t d,
                                Rng& rng, FallbackPolicy fallback)
    {
        check_inputs(g, queues, origin, d);
        Router router;
        RoutingSample sample;
        sample.origin = origin;
        sample.destination = router.route(g, queues, origin, d, rng, fallback);
        sample.targets.assign(router.last_targets().begin(), router.last_targets().end());
        sample.fallback = router.last_was_fallback();
        return sample;
    }

    double win_probability(std::size_t pool, std::size_t lower, std::size_t equal, std::size_t m,
                           std::size_t fixed_ties)
    {
        if (lower + equal > pool || m > pool)
            throw ConfigError("win_probability: inconsistent counts");
        const std::size_t greater = pool - lower - equal;
        const std::size_t k_lo = m > greater ? m - greater : 0;
        const std::size_t k_hi = std::min(m, equal);
        double total = 0.0;
        double binom = 1.0;  // C(m, k), advanced incrementally
        for (std::size_t k = 0; k <= k_hi; ++k)
        {
            if (k > 0)
                binom = binom * static_cast<double>(m - k + 1) / static_cast<double>(k);
            if (k < k_lo)
                continue;
            // C(E,k) C(G,m-k) / C(pool,m) as a product of ratios <= 1.
            double h = binom;
            for (std::size_t t = 0; t < k; ++t)
                h *= static_cast<double>(equal - t) / static_cast<double>(pool - t);
            for (std::size_t t = 0; t < m - k; ++t)
                h *= static_cast<double>(greater - t) / static_cast<double>(pool - k - t);
            total += h / static_cast<double>(k + 1 + fixed_ties);
        }
        return total;
    }

    double arrival_intensity_exact(const Graph& g, std::span<const QueueLength> queues, Vertex i, std::size_t d,
                                   FallbackPolicy fallback)
    {
        check_inputs(g, queues, i, d);
        const QueueLength x = queues[i];
        double c = own_term(g.degree(i), scan_levels(g, queues, i, x, i), d, fallback);
        for (Vertex j : g.in_neighbors(i))
            c += forwarded_term(g.degree(j), scan_levels(g, queues, j, x, i), queues[j], x, d, fallback);
        return c;
    }

    double arrival_intensity_bruteforce(const Graph& g, std::span<const QueueLength> queues, Vertex i,
                                        std::size_t d, FallbackPolicy fallback, std::size_t tuple_budget)
    {
        check_inputs(g, queues, i, d);
        const std::size_t n = g.size();
        const std::size_t m = d - 1;
        const double tuples = 2.0 * std::pow(static_cast<double>(n), static_cast<double>(m));
        if (tuples > static_cast<double>(tuple_budget))
            throw ConfigError("arrival_intensity_bruteforce: " + std::to_string(static_cast<long long>(tuples)) +
                              " tuples exceed budget " + std::to_string(tuple_budget));

        auto xi = [&](Vertex a, Vertex b) { return g.has_edge(a, b) ? 1.0 : 0.0; };
        auto distinct = [](std::span<const Vertex> v) {
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = a + 1; b < v.size(); ++b)
                    if (v[a] == v[b])
                        return false;
            return true;
        };

        std::vector<Vertex> tuple, full;
        std::vector<QueueLength> levels;
        auto b_of = [&](std::span<const Vertex> who) {
            levels.clear();
            for (Vertex v : who)
                levels.push_back(queues[v]);
            return tie_break_b(levels);
        };

        double c = 0.0;
        const std::size_t di = g.degree(i);
        if (di >= m)
        {
            const double denom = falling_factorial(di, m);
            for_each_tuple(n, m, tuple, [&](const std::vector<Vertex>& t) {
                full.assign(1, i);
                full.insert(full.end(), t.begin(), t.end());
                if (!distinct(full))
                    return;
                double alpha = 1.0 / denom;
                for (Vertex j : t)
                    alpha *= xi(i, j);
                if (alpha > 0.0)
                    c += alpha * b_of(full);
            });
        }
        else if (fallback == FallbackPolicy::SelfOnly)
        {
            c += 1.0;
        }
        else
        {
            full.assign(1, i);
            for (Vertex j : g.neighbors(i))
                full.push_back(j);
            c += b_of(full);
        }

        for (Vertex j2 = 0; j2 < n; ++j2)
        {
            if (j2 == i)
                continue;
            const std::size_t dj = g.degree(j2);
            if (dj >= m)
            {
                const double denom = falling_factorial(dj, m);
                for_each_tuple(n, m - 1, tuple, [&](const std::vector<Vertex>& t) {
                    full.assign({i, j2});
                    full.insert(full.end(), t.begin(), t.end());
                    if (!distinct(full))
                        return;
                    double alpha = xi(j2, i) / denom;
                    for (Vertex j : t)
                        alpha *= xi(j2, j);
                    if (alpha > 0.0)
                        c += static_cast<double>(m) * alpha * b_of(full);
                });
            }
            else if (xi(j2, i) > 0.0 && fallback == FallbackPolicy::ClosedNeighborhoodJSQ)
            {
                full.assign({i, j2});
                for (Vertex k : g.neighbors(j2))
                    if (k != i)
                        full.push_back(k);
                c += b_of(full);
            }
        }
        return c;
    }

    NeighborLevelIndex::NeighborLevelIndex(const Graph& g, std::span<const QueueLength> queues) : graph_(&g)
    {
        if (queues.size() != g.size())
            throw ConfigError("state size does not match graph size");
        QueueLength top = 0;
        for (QueueLength x : queues)
            top = std::max(top, x);
        stride_ = static_cast<std::size_t>(top) + 8;
        counts_.assign(g.size() * stride_, 0);
        for (Vertex v = 0; v < g.size(); ++v)
            for (Vertex k : g.neighbors(v))
                ++counts_[static_cast<std::size_t>(v) * stride_ + queues[k]];
    }

    void NeighborLevelIndex::grow(std::size_t min_stride)
    {
        const std::size_t stride = std::max(min_stride, 2 * stride_);
        std::vector<std::uint32_t> counts(graph_->size() * stride, 0);
        for (std::size_t v = 0; v < graph_->size(); ++v)
            std::copy_n(counts_.begin() + static_cast<std::ptrdiff_t>(v * stride_), stride_,
                        counts.begin() + static_cast<std::ptrdiff_t>(v * stride));
        counts_ = std::move(counts);
        stride_ = stride;
    }

    void NeighborLevelIndex::move(Vertex k, QueueLength from, QueueLength to)
    {
        if (to >= stride_)
            grow(static_cast<std::size_t>(to) + 1);
        for (Vertex v : graph_->in_neighbors(k))
        {
            const std::size_t base = static_cast<std::size_t>(v) * stride_;
            --counts_[base + from];
            ++counts_[base + to];
        }
    }

    std::size_t NeighborLevelIndex::count_below(Vertex v, QueueLength level) const noexcept
    {
        const std::size_t base = static_cast<std::size_t>(v) * stride_;
        const std::size_t top = std::min<std::size_t>(level, stride_);
        std::size_t sum = 0;
        for (std::size_t l = 0; l < top; ++l)
            sum += counts_[base + l];
        return sum;
    }

    double NeighborLevelIndex::intensity(Vertex i, std::span<const QueueLength> queues, std::size_t d,
                                         FallbackPolicy fallback) const
    {
        const Graph& g = *graph_;
        const QueueLength x = queues[i];
        double c = own_term(g.degree(i), {count_below(i, x), count(i, x)}, d, fallback);
        for (Vertex j : g.in_neighbors(i))
        {
            if (queues[j] < x)
                continue;
            // i sits at level x in j's histogram; exclude it from the tie count.
            const LevelCounts others{count_below(j, x), count(j, x) - 1};
            c += forwarded_term(g.degree(j), others, queues[j], x, d, fallback);
        }
        return c;
    }
} // namespace graphsq
