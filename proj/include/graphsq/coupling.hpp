#pragma once

#include "graphsq/graph.hpp"
#include "graphsq/mean_field.hpp"
#include "graphsq/occupancy.hpp"
#include "graphsq/rng.hpp"
#include "graphsq/simulator.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphsq
{
    /// Shared Poisson drivers for a set of active servers.
    ///
    /// Server i owns two substreams derived from the master seed:
    /// derive_seed(seed, i, 1) for its rate-1 service clock and
    /// derive_seed(seed, i, 2) for its arrival candidates (s, y), which form a
    /// Poisson process of rate lambda*ymax_i with marks y uniform on
    /// [0, ymax_i]. Each arrival candidate consumes an exponential gap, then a
    /// uniform mark. Servers never share streams, so activating more servers
    /// leaves every other server's drivers unchanged.
    class DriverStreams
    {
    public:
        struct Event
        {
            double time = 0.0;
            Vertex server = 0;
            bool service = false;
            double mark = 0.0;  ///< y for arrival candidates
        };

        DriverStreams(std::uint64_t seed, double lambda, std::vector<double> ymax, std::span<const Vertex> active);

        /// Next event in time order, or nullopt once past the horizon.
        std::optional<Event> next(double horizon);

        double ymax(Vertex i) const noexcept { return ymax_[i]; }

    private:
        struct Pending
        {
            double time;
            Vertex server;
            bool service;
            bool operator>(const Pending& o) const noexcept
            {
                if (time != o.time)
                    return time > o.time;
                if (server != o.server)
                    return server > o.server;
                return service < o.service;
            }
        };
        struct Streams
        {
            Rng service;
            Rng arrival;
        };

        double lambda_;
        std::vector<double> ymax_;
        std::vector<std::optional<Streams>> streams_;
        std::priority_queue<Pending, std::vector<Pending>, std::greater<>> heap_;
    };

    /// X_i(0) for every server from its own substream derive_seed(seed, i, 0).
    std::vector<QueueLength> shared_initial_state(std::size_t n, const OccupancyVector& q_init, std::uint64_t seed);

    /// Dominating mark bound max(d, 1 + (d-1) rho_i) plus a 1e-9 rounding margin.
    std::vector<double> dominating_bounds(const Graph& g, std::size_t d);

    /// What the tagged limit processes are compared against.
    enum class ReferenceDynamics
    {
        Network,    ///< the N-server JSQ(d) system (thresholds C_i^N)
        MeanField,  ///< a second copy of the limit process (control experiment)
    };

    struct CouplingResult
    {
        std::vector<Vertex> tagged;
        std::vector<QueueLength> sup_discrepancy;  ///< sup_{t<=T} |X_i^N(t) - X_i(t)|
        std::vector<double> sup_sq;
        double mean_sup_sq = 0.0;                  ///< average over tagged servers
        std::vector<QueueLength> final_network;    ///< network state at T (Network reference only)
        std::uint64_t events = 0;
        std::uint64_t candidates = 0;
        std::uint64_t accepted_network = 0;
        std::uint64_t accepted_limit = 0;
        double max_threshold_ratio = 0.0;          ///< max over candidates of threshold / ymax
    };

    /// Drives the network (or a second limit copy) and the tagged limit
    /// processes X_i with the same service clocks and arrival candidates. A
    /// candidate (s, y) at i is accepted by the network when y <= C_i^N(s-)
    /// and by the limit process when y <= limit_intensity(X_i(s-), q(s), d).
    ///
    /// Throws ConfigError when a vertex has fewer than d-1 neighbors (Network
    /// reference) and ModelError when a threshold exceeds its dominating bound
    /// or the event budget is exhausted.
    CouplingResult run_coupled(const Graph& g, const SimConfig& cfg, const OdeSolution& sol,
                               std::span<const Vertex> tagged, std::uint64_t seed,
                               ReferenceDynamics reference = ReferenceDynamics::Network);

    /// Edge-probability schedule p(n) for ERRG sweeps: "n^-1/2", "n^-<a>",
    /// "log2n/n" (ln(n)^2/n), "logn/n", or "const:<p>".
    class EdgeProbabilityRule
    {
    public:
        explicit EdgeProbabilityRule(std::string rule);
        double operator()(std::size_t n) const;
        const std::string& text() const noexcept { return rule_; }

    private:
        std::string rule_;
        enum class Kind { Power, LogSquared, Log, Constant } kind_ = Kind::Power;
        double value_ = -0.5;
    };

    struct RateSweepConfig
    {
        GraphFamily family = GraphFamily::Errg;  ///< Errg or Clique
        std::string p_rule = "n^-1/2";
        std::vector<std::size_t> n_list;
        SimConfig sim;               ///< lambda, d, horizon, q_init, event budget
        std::size_t replications = 50;
        std::uint64_t seed = 0;
        bool freeze_graph = false;   ///< one graph per n shared by all replications
        std::size_t max_redraws = 100;
        double ode_step = 1e-3;
        std::vector<Vertex> tagged;  ///< empty: tag every server
        std::size_t jobs = 1;
    };

    struct RateSweepRow
    {
        std::size_t n = 0;
        double p = 0.0;
        double mean_sup2 = 0.0;
        double std_error = 0.0;
        double product = 0.0;  ///< sqrt(n p) * mean_sup2
        std::size_t replications = 0;
        std::size_t redraws = 0;
        std::vector<double> per_replication;
    };

    /// Annealed estimate of E sup_{t<=T} |X_i^N - X_i|^2 per n. Each
    /// replication draws a fresh graph (unless freeze_graph), redrawing graphs
    /// that have a vertex with fewer than d-1 neighbors; its statistic is the
    /// mean of sup^2 over the tagged servers. Seeds: graph
    /// derive_seed(seed, n, 2r) (attempt a: derive_seed(that, a)), drivers
    /// derive_seed(seed, n, 2r+1).
    std::vector<RateSweepRow> rate_sweep(const RateSweepConfig& cfg);

    /// CSV `n,p,mean_sup2,stderr,product`.
    void write_rate_sweep_csv(std::ostream& out, std::span<const RateSweepRow> rows);

    /// Indicator functional 1{x >= threshold}; "busy" is threshold 1.
    struct Functional
    {
        QueueLength threshold = 1;
        double operator()(QueueLength x) const noexcept { return x >= threshold ? 1.0 : 0.0; }
        static Functional parse(const std::string& tag);
    };

    struct CovarianceEstimate
    {
        Vertex i = 0;
        Vertex j = 0;
        double cov = 0.0;
        double std_error = 0.0;
        std::size_t replications = 0;
    };

    /// Cov(f(X_i(T)), f(X_j(T))) across independent network replications
    /// (run_sim with seed derive_seed(seed, r)). T is cfg.horizon.
    std::vector<CovarianceEstimate> chaos_covariance(const Graph& g, const SimConfig& cfg,
                                                     std::span<const std::pair<Vertex, Vertex>> pairs,
                                                     const Functional& f, std::size_t replications,
                                                     std::uint64_t seed, std::size_t jobs = 1);

    /// Same estimator applied to pairs of independent limit-process paths.
    CovarianceEstimate mkv_covariance_control(const OdeSolution& sol, const SimConfig& cfg, const Functional& f,
                                              std::size_t replications, std::uint64_t seed);

    /// CSV `i,j,cov,stderr,reps`.
    void write_covariance_csv(std::ostream& out, std::span<const CovarianceEstimate> rows);
} // namespace graphsq
