#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphsq
{
    using Vertex = std::uint32_t;
    using Edge = std::pair<Vertex, Vertex>;

    /// Simple graph on vertices 0..n-1 stored as sorted adjacency arrays.
    ///
    /// For undirected graphs out- and in-neighbor lists coincide. For directed
    /// graphs an arc (i, j) means i may forward work to j: j is an out-neighbor
    /// of i and i is an in-neighbor of j. Immutable after construction.
    class Graph
    {
    public:
        Graph() = default;

        /// Builds from an edge list. Throws ConfigError on self-loops,
        /// duplicates, or out-of-range endpoints. Undirected edges may be given
        /// in either orientation but each unordered pair at most once.
        static Graph from_edges(std::size_t n, bool directed, std::span<const Edge> edges);

        std::size_t size() const noexcept { return out_offsets_.empty() ? 0 : out_offsets_.size() - 1; }
        bool directed() const noexcept { return directed_; }

        std::span<const Vertex> neighbors(Vertex i) const noexcept
        {
            return {out_targets_.data() + out_offsets_[i], out_targets_.data() + out_offsets_[i + 1]};
        }
        std::span<const Vertex> in_neighbors(Vertex i) const noexcept
        {
            if (!directed_)
                return neighbors(i);
            return {in_sources_.data() + in_offsets_[i], in_sources_.data() + in_offsets_[i + 1]};
        }

        std::size_t degree(Vertex i) const noexcept { return out_offsets_[i + 1] - out_offsets_[i]; }
        std::size_t in_degree(Vertex i) const noexcept
        {
            return directed_ ? in_offsets_[i + 1] - in_offsets_[i] : degree(i);
        }

        /// Undirected: number of unordered pairs. Directed: number of arcs.
        std::size_t edge_count() const noexcept;

        bool has_edge(Vertex i, Vertex j) const noexcept;

        /// Canonical edge list: undirected pairs with i < j, lexicographic order.
        std::vector<Edge> edges() const;

        friend bool operator==(const Graph&, const Graph&) = default;

    private:
        bool directed_ = false;
        std::vector<std::size_t> out_offsets_;
        std::vector<Vertex> out_targets_;
        std::vector<std::size_t> in_offsets_;
        std::vector<Vertex> in_sources_;
    };

    enum class GraphFamily
    {
        Clique,
        Cycle,
        Circulant,
        RandomRegular,
        Errg,
        DirectedErrg,
    };

    struct GraphSpec
    {
        GraphFamily family = GraphFamily::Clique;
        std::size_t n = 0;
        std::size_t k = 0;   // circulant half-width / random-regular degree
        double p = 0.0;      // edge probability for the ERRG families
        std::size_t retry_budget = 1000;
    };

    GraphFamily parse_family(const std::string& name);
    std::string family_name(GraphFamily family);
    bool family_is_random(GraphFamily family);

    /// Generates a graph. Random families are a deterministic function of
    /// (spec, seed). Throws ConfigError for invalid parameters and ModelError
    /// when the random-regular pairing exhausts its restart budget.
    Graph generate(const GraphSpec& spec, std::uint64_t seed);

    struct RegularityReport
    {
        std::size_t d_min = 0;
        std::size_t d_max = 0;
        std::vector<double> rho;
        double epsilon = 0.0;
        std::size_t isolated_count = 0;
        std::size_t below_d_count = 0;
    };

    /// Degree-regularity statistics. rho_i sums 1/D_j over (in-)neighbors j of
    /// i, where D_j is the (out-)degree; vertices with D_j = 0 are skipped. For
    /// directed graphs d_min/d_max range over both in- and out-degrees.
    /// below_d_count counts vertices with fewer than d-1 (out-)neighbors.
    RegularityReport regularity_report(const Graph& g, std::size_t d = 2);

    /// Finite-size proxy for the degree-regularity condition: minimum degree
    /// at least max(d, ceil(ln n)) and epsilon at most epsilon_max.
    struct ConditionCheck
    {
        bool pass = false;
        std::string label;  // "PASS" or "FAIL (<reason>)"
    };
    ConditionCheck check_condition1(const RegularityReport& report, std::size_t n, std::size_t d,
                                    double epsilon_max = 0.5);

    /// Edge-list text format: header `graphsq-edgelist v1 <n> <directed:0|1>`,
    /// then one `i j` pair per line, 0-based, i < j for undirected graphs.
    void write_edgelist(std::ostream& out, const Graph& g);
    Graph read_edgelist(std::istream& in);
} // namespace graphsq
