#include "graphsq/coupling.hpp"

#include "graphsq/errors.hpp"
#include "graphsq/parallel.hpp"
#include "graphsq/routing.hpp"
#include "graphsq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>

namespace graphsq
{
    DriverStreams::DriverStreams(std::uint64_t seed, double lambda, std::vector<double> ymax,
                                 std::span<const Vertex> active)
        : lambda_(lambda), ymax_(std::move(ymax)), streams_(ymax_.size())
    {
        for (Vertex i : active)
        {
            if (streams_[i])
                continue;
            auto& s = streams_[i].emplace(Streams{Rng(derive_seed(seed, i, 1)), Rng(derive_seed(seed, i, 2))});
            heap_.push({s.service.exponential(1.0), i, true});
            const double rate = lambda_ * ymax_[i];
            if (rate > 0.0)
                heap_.push({s.arrival.exponential(rate), i, false});
        }
    }

    std::optional<DriverStreams::Event> DriverStreams::next(double horizon)
    {
        if (heap_.empty() || heap_.top().time > horizon)
            return std::nullopt;
        const Pending top = heap_.top();
        heap_.pop();
        auto& s = *streams_[top.server];
        Event ev{top.time, top.server, top.service, 0.0};
        if (top.service)
        {
            heap_.push({top.time + s.service.exponential(1.0), top.server, true});
        }
        else
        {
            ev.mark = s.arrival.uniform() * ymax_[top.server];
            heap_.push({top.time + s.arrival.exponential(lambda_ * ymax_[top.server]), top.server, false});
        }
        return ev;
    }

    std::vector<QueueLength> shared_initial_state(std::size_t n, const OccupancyVector& q_init, std::uint64_t seed)
    {
        q_init.validate();
        std::vector<QueueLength> x(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            Rng rng(derive_seed(seed, i, 0));
            const double u = rng.uniform();
            QueueLength level = 0;
            while (level < q_init.truncation() && u < q_init[level + 1])
                ++level;
            x[i] = level;
        }
        return x;
    }

    std::vector<double> dominating_bounds(const Graph& g, std::size_t d)
    {
        const RegularityReport report = regularity_report(g, d);
        std::vector<double> ymax(g.size());
        const double dd = static_cast<double>(d);
        for (std::size_t i = 0; i < g.size(); ++i)
            ymax[i] = std::max(dd, 1.0 + (dd - 1.0) * report.rho[i]) + 1e-9;
        return ymax;
    }

    CouplingResult run_coupled(const Graph& g, const SimConfig& cfg, const OdeSolution& sol,
                               std::span<const Vertex> tagged, std::uint64_t seed, ReferenceDynamics reference)
    {
        const std::size_t n = g.size();
        cfg.validate(n);
        const std::size_t d = cfg.d;
        const bool network = reference == ReferenceDynamics::Network;
        if (sol.states.empty() || sol.times.back() + 1e-9 < cfg.horizon)
            throw ConfigError("run_coupled: ODE solution does not cover [0, T]");
        if (sol.d != d)
            throw ConfigError("run_coupled: ODE solution was computed for a different d");

        std::vector<std::ptrdiff_t> slot_of(n, -1);
        for (std::size_t s = 0; s < tagged.size(); ++s)
        {
            if (tagged[s] >= n)
                throw ConfigError("run_coupled: tagged vertex out of range");
            if (slot_of[tagged[s]] >= 0)
                throw ConfigError("run_coupled: tagged vertices must be distinct");
            slot_of[tagged[s]] = static_cast<std::ptrdiff_t>(s);
        }
        if (network)
            for (Vertex v = 0; v < n; ++v)
                if (g.degree(v) + 1 < d)
                    throw ConfigError("run_coupled: vertex " + std::to_string(v) + " has fewer than d-1 neighbors");

        const std::vector<QueueLength> initial = shared_initial_state(n, cfg.q_init, seed);
        std::vector<Vertex> active;
        if (network)
        {
            active.resize(n);
            for (Vertex v = 0; v < n; ++v)
                active[v] = v;
        }
        else
        {
            active.assign(tagged.begin(), tagged.end());
        }
        DriverStreams drivers(seed, cfg.lambda, dominating_bounds(g, d), active);

        std::vector<QueueLength> net = network ? initial : std::vector<QueueLength>{};
        std::optional<NeighborLevelIndex> index;
        if (network)
            index.emplace(g, net);
        std::vector<QueueLength> limit(tagged.size()), mirror(tagged.size());
        for (std::size_t s = 0; s < tagged.size(); ++s)
            limit[s] = mirror[s] = initial[tagged[s]];

        CouplingResult result;
        result.tagged.assign(tagged.begin(), tagged.end());
        result.sup_discrepancy.assign(tagged.size(), 0);

        auto check_bound = [&](double threshold, Vertex i, double t, const char* side) {
            const double ratio = threshold / drivers.ymax(i);
            result.max_threshold_ratio = std::max(result.max_threshold_ratio, ratio);
            if (ratio > 1.0)
            {
                std::ostringstream msg;
                msg << "run_coupled: " << side << " threshold " << threshold << " exceeds dominating bound "
                    << drivers.ymax(i) << " at server " << i << ", t=" << t;
                throw ModelError(msg.str());
            }
        };

        while (auto ev = drivers.next(cfg.horizon))
        {
            if (++result.events > cfg.event_budget)
                throw ModelError("run_coupled: event budget of " + std::to_string(cfg.event_budget) + " exceeded");
            const Vertex i = ev->server;
            const std::ptrdiff_t slot = slot_of[i];
            if (ev->service)
            {
                if (network && net[i] > 0)
                {
                    index->move(i, net[i], net[i] - 1);
                    --net[i];
                }
                if (slot >= 0)
                {
                    auto s = static_cast<std::size_t>(slot);
                    if (limit[s] > 0)
                        --limit[s];
                    if (!network && mirror[s] > 0)
                        --mirror[s];
                }
            }
            else
            {
                ++result.candidates;
                if (network)
                {
                    const double c = index->intensity(i, net, d, cfg.fallback);
                    check_bound(c, i, ev->time, "network");
                    if (ev->mark <= c)
                    {
                        index->move(i, net[i], net[i] + 1);
                        ++net[i];
                        ++result.accepted_network;
                    }
                }
                if (slot >= 0)
                {
                    auto s = static_cast<std::size_t>(slot);
                    const OccupancyVector& q = sol.at(ev->time);
                    const double c = limit_intensity(limit[s], q, d);
                    check_bound(c, i, ev->time, "limit");
                    if (ev->mark <= c)
                    {
                        ++limit[s];
                        ++result.accepted_limit;
                    }
                    if (!network && ev->mark <= limit_intensity(mirror[s], q, d))
                        ++mirror[s];
                }
            }
            if (slot >= 0)
            {
                auto s = static_cast<std::size_t>(slot);
                const QueueLength other = network ? net[i] : mirror[s];
                const QueueLength gap = other > limit[s] ? other - limit[s] : limit[s] - other;
                result.sup_discrepancy[s] = std::max(result.sup_discrepancy[s], gap);
            }
        }

        result.sup_sq.resize(tagged.size());
        double total = 0.0;
        for (std::size_t s = 0; s < tagged.size(); ++s)
        {
            const auto v = static_cast<double>(result.sup_discrepancy[s]);
            result.sup_sq[s] = v * v;
            total += v * v;
        }
        result.mean_sup_sq = tagged.empty() ? 0.0 : total / static_cast<double>(tagged.size());
        if (network)
            result.final_network = std::move(net);
        return result;
    }

    EdgeProbabilityRule::EdgeProbabilityRule(std::string rule) : rule_(std::move(rule))
    {
        auto parse_number = [this](const std::string& text) {
            std::size_t slash = text.find('/');
            try
            {
                if (slash == std::string::npos)
                    return std::stod(text);
                return std::stod(text.substr(0, slash)) / std::stod(text.substr(slash + 1));
            }
            catch (const std::exception&)
            {
                throw ConfigError("bad edge-probability rule '" + rule_ + "'");
            }
        };
        if (rule_ == "log2n/n")
            kind_ = Kind::LogSquared;
        else if (rule_ == "logn/n")
            kind_ = Kind::Log;
        else if (rule_.rfind("const:", 0) == 0)
        {
            kind_ = Kind::Constant;
            value_ = parse_number(rule_.substr(6));
        }
        else if (rule_.rfind("n^", 0) == 0)
        {
            kind_ = Kind::Power;
            value_ = parse_number(rule_.substr(2));
        }
        else
            throw ConfigError("unknown edge-probability rule '" + rule_ + "'");
    }

    double EdgeProbabilityRule::operator()(std::size_t n) const
    {
        const double nn = static_cast<double>(n);
        double p = 0.0;
        switch (kind_)
        {
        case Kind::Power: p = std::pow(nn, value_); break;
        case Kind::LogSquared: p = std::log(nn) * std::log(nn) / nn; break;
        case Kind::Log: p = std::log(nn) / nn; break;
        case Kind::Constant: p = value_; break;
        }
        return std::clamp(p, 0.0, 1.0);
    }

    namespace
    {
        bool meets_degree_floor(const Graph& g, std::size_t d)
        {
            for (Vertex v = 0; v < g.size(); ++v)
                if (g.degree(v) + 1 < d)
                    return false;
            return true;
        }

        Graph draw_sweep_graph(const RateSweepConfig& cfg, std::size_t n, double p, std::uint64_t graph_seed,
                               std::size_t& redraws)
        {
            GraphSpec spec;
            spec.n = n;
            if (cfg.family == GraphFamily::Clique)
            {
                spec.family = GraphFamily::Clique;
                return generate(spec, graph_seed);
            }
            spec.family = GraphFamily::Errg;
            spec.p = p;
            for (std::size_t attempt = 0; attempt <= cfg.max_redraws; ++attempt)
            {
                Graph g = generate(spec, derive_seed(graph_seed, attempt));
                if (meets_degree_floor(g, cfg.sim.d))
                    return g;
                ++redraws;
            }
            std::ostringstream msg;
            msg << "rate_sweep: " << cfg.max_redraws << " re-draws at n=" << n << ", p=" << p
                << " without every vertex having d-1 neighbors";
            throw ModelError(msg.str());
        }
    } // namespace

    std::vector<RateSweepRow> rate_sweep(const RateSweepConfig& cfg)
    {
        if (cfg.family != GraphFamily::Errg && cfg.family != GraphFamily::Clique)
            throw ConfigError("rate_sweep supports the errg and clique families");
        if (cfg.replications == 0)
            throw ConfigError("rate_sweep needs at least one replication");
        const EdgeProbabilityRule rule(cfg.p_rule);
        const SimConfig& sim = cfg.sim;
        const std::size_t truncation = std::max(default_truncation(sim.lambda, sim.d), sim.q_init.truncation() + 1);
        const OdeSolution sol = integrate(sim.q_init, sim.lambda, sim.d, sim.horizon, cfg.ode_step, truncation);

        std::vector<RateSweepRow> rows;
        for (std::size_t n : cfg.n_list)
        {
            const double p = cfg.family == GraphFamily::Clique ? 1.0 : rule(n);
            RateSweepRow row;
            row.n = n;
            row.p = p;
            row.replications = cfg.replications;

            std::optional<Graph> frozen;
            std::size_t frozen_redraws = 0;
            if (cfg.freeze_graph)
                frozen = draw_sweep_graph(cfg, n, p, derive_seed(cfg.seed, n, ~std::uint64_t{0}), frozen_redraws);

            std::vector<double> stat(cfg.replications, 0.0);
            std::vector<std::size_t> redraws(cfg.replications, 0);
            parallel_for(cfg.replications, cfg.jobs, [&](std::size_t r) {
                std::optional<Graph> fresh;
                if (!frozen)
                    fresh = draw_sweep_graph(cfg, n, p, derive_seed(cfg.seed, n, 2 * r), redraws[r]);
                const Graph& g = frozen ? *frozen : *fresh;
                std::vector<Vertex> tagged = cfg.tagged;
                if (tagged.empty())
                {
                    tagged.resize(n);
                    for (Vertex v = 0; v < n; ++v)
                        tagged[v] = v;
                }
                stat[r] = run_coupled(g, sim, sol, tagged, derive_seed(cfg.seed, n, 2 * r + 1)).mean_sup_sq;
            });

            const RunningStats s = summarize(stat);
            row.mean_sup2 = s.mean();
            row.std_error = s.std_error();
            row.product = std::sqrt(static_cast<double>(n) * p) * row.mean_sup2;
            row.redraws = frozen_redraws;
            for (std::size_t c : redraws)
                row.redraws += c;
            row.per_replication = std::move(stat);
            rows.push_back(std::move(row));
        }
        return rows;
    }

    void write_rate_sweep_csv(std::ostream& out, std::span<const RateSweepRow> rows)
    {
        out << "n,p,mean_sup2,stderr,product\n";
        const auto old_precision = out.precision(17);
        for (const auto& r : rows)
            out << r.n << ',' << r.p << ',' << r.mean_sup2 << ',' << r.std_error << ',' << r.product << '\n';
        out.precision(old_precision);
    }

    Functional Functional::parse(const std::string& tag)
    {
        if (tag == "busy")
            return Functional{1};
        if (tag.rfind("geq:", 0) == 0)
        {
            try
            {
                const long v = std::stol(tag.substr(4));
                if (v >= 0)
                    return Functional{static_cast<QueueLength>(v)};
            }
            catch (const std::exception&)
            {
            }
        }
        throw ConfigError("unknown functional '" + tag + "' (use busy or geq:<k>)");
    }

    std::vector<CovarianceEstimate> chaos_covariance(const Graph& g, const SimConfig& cfg,
                                                     std::span<const std::pair<Vertex, Vertex>> pairs,
                                                     const Functional& f, std::size_t replications,
                                                     std::uint64_t seed, std::size_t jobs)
    {
        cfg.validate(g.size());
        for (auto [i, j] : pairs)
            if (i >= g.size() || j >= g.size())
                throw ConfigError("chaos_covariance: server index out of range");
        std::vector<std::vector<double>> fi(pairs.size(), std::vector<double>(replications));
        std::vector<std::vector<double>> fj = fi;
        parallel_for(replications, jobs, [&](std::size_t r) {
            SimConfig run = cfg;
            run.seed = derive_seed(seed, r);
            run.sample_dt = cfg.horizon > 0.0 ? cfg.horizon : 1.0;
            run.tagged.clear();
            const Trajectory traj = run_sim(g, run);
            const auto& x = traj.final_state.queues;
            for (std::size_t k = 0; k < pairs.size(); ++k)
            {
                fi[k][r] = f(x[pairs[k].first]);
                fj[k][r] = f(x[pairs[k].second]);
            }
        });
        std::vector<CovarianceEstimate> out;
        for (std::size_t k = 0; k < pairs.size(); ++k)
        {
            const CovarianceSummary c = sample_covariance(fi[k], fj[k]);
            out.push_back({pairs[k].first, pairs[k].second, c.cov, c.std_error, replications});
        }
        return out;
    }

    CovarianceEstimate mkv_covariance_control(const OdeSolution& sol, const SimConfig& cfg, const Functional& f,
                                              std::size_t replications, std::uint64_t seed)
    {
        std::vector<double> a(replications), b(replications);
        for (std::size_t r = 0; r < replications; ++r)
        {
            Rng first(derive_seed(seed, r, 1));
            Rng second(derive_seed(seed, r, 2));
            a[r] = f(path_value(simulate_mkv_path(sol, cfg.lambda, cfg.d, cfg.horizon, cfg.q_init, first), cfg.horizon));
            b[r] = f(path_value(simulate_mkv_path(sol, cfg.lambda, cfg.d, cfg.horizon, cfg.q_init, second), cfg.horizon));
        }
        const CovarianceSummary c = sample_covariance(a, b);
        return {0, 1, c.cov, c.std_error, replications};
    }

    void write_covariance_csv(std::ostream& out, std::span<const CovarianceEstimate> rows)
    {
        out << "i,j,cov,stderr,reps\n";
        const auto old_precision = out.precision(17);
        for (const auto& r : rows)
            out << r.i << ',' << r.j << ',' << r.cov << ',' << r.std_error << ',' << r.replications << '\n';
        out.precision(old_precision);
    }
} // namespace graphsq
