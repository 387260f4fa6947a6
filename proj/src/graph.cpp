#include "graphsq/graph.hpp"

#include "graphsq/errors.hpp"
#include "graphsq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace graphsq
{
    namespace
    {
        void build_csr(std::size_t n, std::vector<Edge>& arcs, std::vector<std::size_t>& offsets,
                       std::vector<Vertex>& targets)
        {
            std::sort(arcs.begin(), arcs.end());
            offsets.assign(n + 1, 0);
            targets.resize(arcs.size());
            for (std::size_t e = 0; e < arcs.size(); ++e)
            {
                if (e > 0 && arcs[e] == arcs[e - 1])
                    throw ConfigError("duplicate edge (" + std::to_string(arcs[e].first) + ", " +
                                      std::to_string(arcs[e].second) + ")");
                ++offsets[arcs[e].first + 1];
                targets[e] = arcs[e].second;
            }
            for (std::size_t i = 0; i < n; ++i)
                offsets[i + 1] += offsets[i];
        }

        std::vector<Edge> canonical_unique(std::vector<Edge> edges)
        {
            for (auto& [a, b] : edges)
                if (a > b)
                    std::swap(a, b);
            std::sort(edges.begin(), edges.end());
            edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            return edges;
        }

        std::vector<Edge> clique_edges(std::size_t n)
        {
            std::vector<Edge> edges;
            edges.reserve(n * (n - 1) / 2);
            for (Vertex i = 0; i < n; ++i)
                for (Vertex j = i + 1; j < n; ++j)
                    edges.emplace_back(i, j);
            return edges;
        }

        std::vector<Edge> circulant_edges(std::size_t n, std::size_t k)
        {
            std::vector<Edge> edges;
            edges.reserve(n * k);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t s = 1; s <= k; ++s)
                {
                    const std::size_t j = (i + s) % n;
                    if (j != i)
                        edges.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
                }
            return canonical_unique(std::move(edges));
        }

        // Pairing model; the whole matching is redrawn on any self-loop or multi-edge.
        std::vector<Edge> random_regular_edges(std::size_t n, std::size_t k, std::size_t budget, Rng& rng)
        {
            std::vector<Vertex> stubs(n * k);
            for (std::size_t s = 0; s < stubs.size(); ++s)
                stubs[s] = static_cast<Vertex>(s / k);
            std::vector<Edge> edges(stubs.size() / 2);
            for (std::size_t attempt = 0; attempt < budget; ++attempt)
            {
                for (std::size_t s = stubs.size(); s > 1; --s)
                    std::swap(stubs[s - 1], stubs[rng.below(s)]);
                bool simple = true;
                for (std::size_t e = 0; e < edges.size() && simple; ++e)
                {
                    auto a = stubs[2 * e], b = stubs[2 * e + 1];
                    simple = a != b;
                    edges[e] = {std::min(a, b), std::max(a, b)};
                }
                if (!simple)
                    continue;
                std::vector<Edge> sorted = edges;
                std::sort(sorted.begin(), sorted.end());
                if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end())
                    return sorted;
            }
            throw ModelError("random_regular: pairing model exhausted retry budget of " + std::to_string(budget) +
                             " restarts (n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
        }

        // Number of failures before the next success of a Bernoulli(p) sequence.
        std::uint64_t geometric_skip(Rng& rng, double log_q)
        {
            const double skip = std::floor(std::log1p(-rng.uniform()) / log_q);
            return skip > 9.0e18 ? std::uint64_t{9'000'000'000'000'000'000ULL} : static_cast<std::uint64_t>(skip);
        }

        std::vector<Edge> errg_edges(std::size_t n, double p, Rng& rng)
        {
            std::vector<Edge> edges;
            if (p <= 0.0)
                return edges;
            if (p >= 1.0)
                return clique_edges(n);
            const double log_q = std::log1p(-p);
            const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
            edges.reserve(static_cast<std::size_t>(static_cast<double>(total) * p * 1.1) + 16);
            // Pairs (v, w), w < v, enumerated row by row: index v*(v-1)/2 + w.
            std::uint64_t v = 1, row_start = 0;
            std::uint64_t idx = geometric_skip(rng, log_q);
            while (idx < total)
            {
                while (idx >= row_start + v)
                {
                    row_start += v;
                    ++v;
                }
                edges.emplace_back(static_cast<Vertex>(idx - row_start), static_cast<Vertex>(v));
                const std::uint64_t skip = geometric_skip(rng, log_q);
                if (skip >= total - idx)
                    break;
                idx += 1 + skip;
            }
            std::sort(edges.begin(), edges.end());
            return edges;
        }

        std::vector<Edge> directed_errg_arcs(std::size_t n, double p, Rng& rng)
        {
            std::vector<Edge> arcs;
            if (p <= 0.0)
                return arcs;
            const std::uint64_t row = n - 1;
            const std::uint64_t total = static_cast<std::uint64_t>(n) * row;
            auto arc_at = [row](std::uint64_t t) {
                const auto i = t / row, r = t % row;
                return Edge{static_cast<Vertex>(i), static_cast<Vertex>(r < i ? r : r + 1)};
            };
            if (p >= 1.0)
            {
                for (std::uint64_t t = 0; t < total; ++t)
                    arcs.push_back(arc_at(t));
                return arcs;
            }
            const double log_q = std::log1p(-p);
            std::uint64_t t = geometric_skip(rng, log_q);
            while (t < total)
            {
                arcs.push_back(arc_at(t));
                const std::uint64_t skip = geometric_skip(rng, log_q);
                if (skip >= total - t)
                    break;
                t += 1 + skip;
            }
            return arcs;
        }
    } // namespace

    Graph Graph::from_edges(std::size_t n, bool directed, std::span<const Edge> edges)
    {
        std::vector<Edge> out;
        out.reserve(directed ? edges.size() : 2 * edges.size());
        for (auto [a, b] : edges)
        {
            if (a >= n || b >= n)
                throw ConfigError("edge endpoint out of range: (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") with n=" + std::to_string(n));
            if (a == b)
                throw ConfigError("self-loop at vertex " + std::to_string(a));
            out.emplace_back(a, b);
            if (!directed)
                out.emplace_back(b, a);
        }
        Graph g;
        g.directed_ = directed;
        if (directed)
        {
            std::vector<Edge> in;
            in.reserve(out.size());
            for (auto [a, b] : out)
                in.emplace_back(b, a);
            build_csr(n, in, g.in_offsets_, g.in_sources_);
        }
        build_csr(n, out, g.out_offsets_, g.out_targets_);
        return g;
    }

    std::size_t Graph::edge_count() const noexcept
    {
        return directed_ ? out_targets_.size() : out_targets_.size() / 2;
    }

    bool Graph::has_edge(Vertex i, Vertex j) const noexcept
    {
        auto nb = neighbors(i);
        return std::binary_search(nb.begin(), nb.end(), j);
    }

    std::vector<Edge> Graph::edges() const
    {
        std::vector<Edge> result;
        result.reserve(edge_count());
        for (Vertex i = 0; i < size(); ++i)
            for (Vertex j : neighbors(i))
                if (directed_ || i < j)
                    result.emplace_back(i, j);
        return result;
    }

    GraphFamily parse_family(const std::string& name)
    {
        if (name == "clique")
            return GraphFamily::Clique;
        if (name == "cycle")
            return GraphFamily::Cycle;
        if (name == "circulant")
            return GraphFamily::Circulant;
        if (name == "random-regular" || name == "random_regular")
            return GraphFamily::RandomRegular;
        if (name == "errg")
            return GraphFamily::Errg;
        if (name == "directed-errg" || name == "directed_errg")
            return GraphFamily::DirectedErrg;
        throw ConfigError("unknown graph family '" + name + "'");
    }

    std::string family_name(GraphFamily family)
    {
        switch (family)
        {
        case GraphFamily::Clique: return "clique";
        case GraphFamily::Cycle: return "cycle";
        case GraphFamily::Circulant: return "circulant";
        case GraphFamily::RandomRegular: return "random-regular";
        case GraphFamily::Errg: return "errg";
        case GraphFamily::DirectedErrg: return "directed-errg";
        }
        return "unknown";
    }

    bool family_is_random(GraphFamily family)
    {
        return family == GraphFamily::RandomRegular || family == GraphFamily::Errg ||
               family == GraphFamily::DirectedErrg;
    }

    Graph generate(const GraphSpec& spec, std::uint64_t seed)
    {
        const std::size_t n = spec.n;
        if (n < 2)
            throw ConfigError("graph needs n >= 2, got " + std::to_string(n));
        if (n > std::size_t{1} << 31)
            throw ConfigError("graph too large");
        const bool needs_k = spec.family == GraphFamily::Circulant || spec.family == GraphFamily::RandomRegular;
        if (needs_k && (spec.k < 1 || spec.k > n - 1))
            throw ConfigError("k must satisfy 1 <= k <= n-1, got k=" + std::to_string(spec.k));
        if ((spec.family == GraphFamily::Errg || spec.family == GraphFamily::DirectedErrg) &&
            !(spec.p >= 0.0 && spec.p <= 1.0))
            throw ConfigError("p must lie in [0, 1]");

        Rng rng(seed);
        switch (spec.family)
        {
        case GraphFamily::Clique: {
            auto e = clique_edges(n);
            return Graph::from_edges(n, false, e);
        }
        case GraphFamily::Cycle: {
            auto e = circulant_edges(n, 1);
            return Graph::from_edges(n, false, e);
        }
        case GraphFamily::Circulant: {
            auto e = circulant_edges(n, spec.k);
            return Graph::from_edges(n, false, e);
        }
        case GraphFamily::RandomRegular: {
            if ((n * spec.k) % 2 != 0)
                throw ConfigError("random-regular requires n*k even, got n=" + std::to_string(n) +
                                  ", k=" + std::to_string(spec.k));
            auto e = random_regular_edges(n, spec.k, spec.retry_budget, rng);
            return Graph::from_edges(n, false, e);
        }
        case GraphFamily::Errg: {
            auto e = errg_edges(n, spec.p, rng);
            return Graph::from_edges(n, false, e);
        }
        case GraphFamily::DirectedErrg: {
            auto e = directed_errg_arcs(n, spec.p, rng);
            return Graph::from_edges(n, true, e);
        }
        }
        throw ConfigError("unhandled graph family");
    }

    RegularityReport regularity_report(const Graph& g, std::size_t d)
    {
        RegularityReport r;
        const std::size_t n = g.size();
        r.rho.assign(n, 0.0);
        if (n == 0)
            return r;
        r.d_min = g.degree(0);
        r.d_max = g.degree(0);
        for (Vertex i = 0; i < n; ++i)
        {
            const std::size_t out = g.degree(i), in = g.in_degree(i);
            r.d_min = std::min({r.d_min, out, in});
            r.d_max = std::max({r.d_max, out, in});
            if (out == 0)
                ++r.isolated_count;
            if (out + 1 < d)
                ++r.below_d_count;
            double rho = 0.0;
            for (Vertex j : g.in_neighbors(i))
                if (const std::size_t dj = g.degree(j); dj > 0)
                    rho += 1.0 / static_cast<double>(dj);
            r.rho[i] = rho;
            r.epsilon = std::max(r.epsilon, std::abs(rho - 1.0));
        }
        return r;
    }

    ConditionCheck check_condition1(const RegularityReport& report, std::size_t n, std::size_t d,
                                    double epsilon_max)
    {
        const auto log_n = static_cast<std::size_t>(std::ceil(std::log(static_cast<double>(std::max<std::size_t>(n, 1)))));
        const std::size_t degree_floor = std::max(d, log_n);
        std::ostringstream reason;
        if (report.d_min < degree_floor)
            reason << "d_min=" << report.d_min;
        if (report.epsilon > epsilon_max)
        {
            if (reason.tellp() > 0)
                reason << "; ";
            reason << "epsilon=" << report.epsilon;
        }
        if (reason.tellp() == 0)
            return {true, "PASS"};
        return {false, "FAIL (" + reason.str() + ")"};
    }

    void write_edgelist(std::ostream& out, const Graph& g)
    {
        out << "graphsq-edgelist v1 " << g.size() << ' ' << (g.directed() ? 1 : 0) << '\n';
        for (auto [i, j] : g.edges())
            out << i << ' ' << j << '\n';
    }

    Graph read_edgelist(std::istream& in)
    {
        std::string line;
        if (!std::getline(in, line))
            throw ConfigError("edge list: missing header");
        std::istringstream header(line);
        std::string magic, version;
        std::size_t n = 0;
        int directed = -1;
        if (!(header >> magic >> version >> n >> directed) || magic != "graphsq-edgelist" || version != "v1" ||
            (directed != 0 && directed != 1))
            throw ConfigError("edge list: malformed header '" + line + "'");
        std::vector<Edge> edges;
        std::size_t line_no = 1;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos)
                continue;
            std::istringstream row(line);
            long long a = -1, b = -1;
            if (!(row >> a >> b) || a < 0 || b < 0)
                throw ConfigError("edge list: malformed line " + std::to_string(line_no));
            if (!directed && a >= b)
                throw ConfigError("edge list: undirected pair must satisfy i < j on line " + std::to_string(line_no));
            edges.emplace_back(static_cast<Vertex>(a), static_cast<Vertex>(b));
        }
        return Graph::from_edges(n, directed == 1, edges);
    }
} // namespace graphsq
