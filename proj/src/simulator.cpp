#include "graphsq/simulator.hpp"

#include "graphsq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace graphsq
{
    namespace
    {
        constexpr std::size_t kNotBusy = std::numeric_limits<std::size_t>::max();

        // Dense busy-server set with swap-remove; slot order drives which server
        // a departure draw selects, so it is part of the reproducibility contract.
        class BusySet
        {
        public:
            explicit BusySet(std::size_t n) : slot_(n, kNotBusy) {}

            void insert(Vertex v)
            {
                slot_[v] = members_.size();
                members_.push_back(v);
            }
            void erase(Vertex v)
            {
                const std::size_t s = slot_[v];
                const Vertex last = members_.back();
                members_[s] = last;
                slot_[last] = s;
                members_.pop_back();
                slot_[v] = kNotBusy;
            }
            std::size_t size() const noexcept { return members_.size(); }
            Vertex at(std::size_t s) const noexcept { return members_[s]; }

        private:
            std::vector<std::size_t> slot_;
            std::vector<Vertex> members_;
        };

        class LevelHistogram
        {
        public:
            explicit LevelHistogram(std::span<const QueueLength> queues)
            {
                for (QueueLength x : queues)
                    add(x);
                total_ = queues.size();
            }
            void move(QueueLength from, QueueLength to)
            {
                --counts_[from];
                add(to);
            }
            OccupancyVector tail(std::size_t jmax) const
            {
                std::vector<double> q(jmax + 1, 0.0);
                std::size_t at_least = 0;
                for (std::size_t l = counts_.size(); l-- > 0;)
                {
                    at_least += counts_[l];
                    if (l <= jmax)
                        q[l] = static_cast<double>(at_least) / static_cast<double>(total_);
                }
                q[0] = 1.0;
                return OccupancyVector(std::move(q));
            }

        private:
            void add(QueueLength x)
            {
                if (x >= counts_.size())
                    counts_.resize(static_cast<std::size_t>(x) + 1, 0);
                ++counts_[x];
            }
            std::vector<std::size_t> counts_;
            std::size_t total_ = 0;
        };
    } // namespace

    void SimConfig::validate(std::size_t n) const
    {
        if (n == 0)
            throw ConfigError("simulation needs at least one server");
        if (!(lambda >= 0.0) || !std::isfinite(lambda))
            throw ConfigError("lambda must be finite and >= 0");
        if (d < 2)
            throw ConfigError("d must be >= 2");
        if (!(horizon >= 0.0) || !std::isfinite(horizon))
            throw ConfigError("horizon T must be finite and >= 0");
        if (!(sample_dt > 0.0))
            throw ConfigError("sample_dt must be > 0");
        if (jmax < 1)
            throw ConfigError("jmax must be >= 1");
        q_init.validate();
        for (Vertex v : tagged)
            if (v >= n)
                throw ConfigError("tagged vertex " + std::to_string(v) + " out of range");
    }

    SystemState sample_initial(std::size_t n, const OccupancyVector& q_init, Rng& rng)
    {
        q_init.validate();
        SystemState state;
        state.queues.resize(n);
        const std::size_t top = q_init.truncation();
        for (auto& x : state.queues)
        {
            const double u = rng.uniform();
            QueueLength j = 0;
            while (j < top && u < q_init[j + 1])
                ++j;
            x = j;
        }
        return state;
    }

    Trajectory run_sim(const Graph& g, const SimConfig& cfg)
    {
        const std::size_t n = g.size();
        cfg.validate(n);

        Rng rng(cfg.seed);
        Trajectory out;
        SystemState state = sample_initial(n, cfg.q_init, rng);
        auto& queues = state.queues;

        BusySet busy(n);
        for (Vertex v = 0; v < n; ++v)
            if (queues[v] > 0)
                busy.insert(v);
        LevelHistogram histogram(queues);

        std::vector<std::ptrdiff_t> tag_slot(n, -1);
        out.tagged = cfg.tagged;
        out.tagged_paths.resize(cfg.tagged.size());
        for (std::size_t s = 0; s < cfg.tagged.size(); ++s)
        {
            tag_slot[cfg.tagged[s]] = static_cast<std::ptrdiff_t>(s);
            out.tagged_paths[s].emplace_back(0.0, queues[cfg.tagged[s]]);
        }

        const auto grid_count = static_cast<std::size_t>(std::floor(cfg.horizon / cfg.sample_dt + 1e-9)) + 1;
        out.grid_times.reserve(grid_count);
        for (std::size_t k = 0; k < grid_count; ++k)
            out.grid_times.push_back(static_cast<double>(k) * cfg.sample_dt);
        out.occupancy_series.reserve(grid_count);

        auto record_until = [&](double t_next) {
            while (out.occupancy_series.size() < grid_count && out.grid_times[out.occupancy_series.size()] < t_next)
                out.occupancy_series.push_back(histogram.tail(cfg.jmax));
        };
        auto set_queue = [&](Vertex v, QueueLength x, double t) {
            histogram.move(queues[v], x);
            if (queues[v] == 0 && x > 0)
                busy.insert(v);
            else if (queues[v] > 0 && x == 0)
                busy.erase(v);
            queues[v] = x;
            if (tag_slot[v] >= 0)
                out.tagged_paths[static_cast<std::size_t>(tag_slot[v])].emplace_back(t, x);
        };

        Router router;
        const double arrival_rate = static_cast<double>(n) * cfg.lambda;
        double t = 0.0;
        while (true)
        {
            const double total = arrival_rate + static_cast<double>(busy.size());
            if (total <= 0.0)
            {
                record_until(std::numeric_limits<double>::infinity());
                break;
            }
            const double t_next = t + rng.exponential(total);
            record_until(t_next);
            if (t_next > cfg.horizon)
                break;
            t = t_next;
            if (++out.event_count > cfg.event_budget)
                throw ModelError("run_sim: event budget of " + std::to_string(cfg.event_budget) + " exceeded");

            if (rng.uniform() * total < arrival_rate)
            {
                const auto origin = static_cast<Vertex>(rng.below(n));
                const Vertex dest = router.route(g, queues, origin, cfg.d, rng, cfg.fallback);
                set_queue(dest, queues[dest] + 1, t);
                ++out.arrivals;
            }
            else
            {
                const Vertex v = busy.at(rng.below(busy.size()));
                set_queue(v, queues[v] - 1, t);
                ++out.departures;
            }
        }
        state.time = cfg.horizon;
        out.final_state = std::move(state);
        return out;
    }

    void write_occupancy_csv(std::ostream& out, std::span<const double> times, std::span<const OccupancyVector> series)
    {
        out << "t,j,q_j\n";
        const auto old_precision = out.precision(17);
        for (std::size_t k = 0; k < series.size(); ++k)
            for (std::size_t j = 0; j <= series[k].truncation(); ++j)
                out << times[k] << ',' << j << ',' << series[k][j] << '\n';
        out.precision(old_precision);
    }

    void write_tagged_csv(std::ostream& out, const Trajectory& trajectory)
    {
        out << "server,t,x\n";
        const auto old_precision = out.precision(17);
        for (std::size_t s = 0; s < trajectory.tagged.size(); ++s)
            for (auto [t, x] : trajectory.tagged_paths[s])
                out << trajectory.tagged[s] << ',' << t << ',' << x << '\n';
        out.precision(old_precision);
    }
} // namespace graphsq
