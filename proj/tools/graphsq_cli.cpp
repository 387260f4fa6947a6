// graphsq: experiment harness for JSQ(d) load balancing on graphs.
//
// Every subcommand accepts --config <file> (key=value lines, flags win) and
// writes its outputs plus one manifest line into --out (default $GRAPHSQ_OUT,
// else ./graphsq_out). Exit codes: 0 ok, 2 usage/config error, 3 model error.

#include "graphsq/coupling.hpp"
#include "graphsq/errors.hpp"
#include "graphsq/graph.hpp"
#include "graphsq/mean_field.hpp"
#include "graphsq/parallel.hpp"
#include "graphsq/simulator.hpp"
#include "graphsq/stats.hpp"
#include "graphsq/version.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace graphsq;

namespace
{
    // Stream tag mixed into run seeds when a random graph is drawn per run.
    constexpr std::uint64_t graph_stream = 0x6772617068ULL;

    std::vector<std::string> split(const std::string& text, char sep)
    {
        std::vector<std::string> parts;
        std::string item;
        std::istringstream in(text);
        while (std::getline(in, item, sep))
            if (!item.empty())
                parts.push_back(item);
        return parts;
    }

    std::uint64_t parse_u64(const std::string& s)
    {
        std::size_t used = 0;
        unsigned long long v = 0;
        try
        {
            v = std::stoull(s, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used != s.size() || s.empty() || s[0] == '-')
            throw ConfigError("not a non-negative integer: '" + s + "'");
        return v;
    }

    double parse_double(const std::string& s)
    {
        std::size_t used = 0;
        double v = 0.0;
        try
        {
            v = std::stod(s, &used);
        }
        catch (const std::exception&)
        {
            used = 0;
        }
        if (used != s.size() || s.empty())
            throw ConfigError("not a number: '" + s + "'");
        return v;
    }

    // "7", "0:19" (inclusive) or comma-separated mixtures of both.
    std::vector<std::uint64_t> parse_seeds(const std::string& text)
    {
        std::vector<std::uint64_t> seeds;
        for (const auto& part : split(text, ','))
        {
            const auto colon = part.find(':');
            if (colon == std::string::npos)
            {
                seeds.push_back(parse_u64(part));
                continue;
            }
            const auto a = parse_u64(part.substr(0, colon)), b = parse_u64(part.substr(colon + 1));
            if (b < a)
                throw ConfigError("empty seed range '" + part + "'");
            for (auto s = a; s <= b; ++s)
                seeds.push_back(s);
        }
        if (seeds.empty())
            throw ConfigError("no seeds given");
        return seeds;
    }

    std::vector<std::size_t> parse_sizes(const std::string& text)
    {
        std::vector<std::size_t> out;
        for (const auto& part : split(text, ','))
            out.push_back(parse_u64(part));
        if (out.empty())
            throw ConfigError("empty size list");
        return out;
    }

    OccupancyVector parse_tail(const std::string& text)
    {
        std::vector<double> values;
        for (const auto& part : split(text, ','))
            values.push_back(parse_double(part));
        OccupancyVector q(values);
        q.validate();
        return q;
    }

    std::vector<Vertex> parse_tagged(const std::string& text, std::size_t n)
    {
        std::vector<Vertex> tagged;
        if (text == "all")
        {
            tagged.resize(n);
            std::iota(tagged.begin(), tagged.end(), 0);
            return tagged;
        }
        for (const auto& part : split(text, ','))
            tagged.push_back(static_cast<Vertex>(parse_u64(part)));
        return tagged;
    }

    std::vector<std::pair<Vertex, Vertex>> parse_pairs(const std::string& text)
    {
        std::vector<std::pair<Vertex, Vertex>> pairs;
        for (const auto& part : split(text, ','))
        {
            const auto dash = part.find('-');
            if (dash == std::string::npos)
                throw ConfigError("pair must look like i-j: '" + part + "'");
            pairs.emplace_back(static_cast<Vertex>(parse_u64(part.substr(0, dash))),
                               static_cast<Vertex>(parse_u64(part.substr(dash + 1))));
        }
        return pairs;
    }

    std::string fmt(double x)
    {
        std::ostringstream os;
        os << std::setprecision(6) << x;
        return os.str();
    }

    struct Output
    {
        fs::path dir;

        fs::path file(const std::string& name) const { return dir / name; }

        template <class Writer>
        std::string write(const std::string& name, Writer&& writer) const
        {
            std::ofstream out(file(name), std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error("cannot open " + file(name).string());
            writer(out);
            if (!out)
                throw std::runtime_error("write failed: " + file(name).string());
            return name;
        }

        void manifest(const json& entry) const
        {
            std::ofstream out(file("manifest.jsonl"), std::ios::app);
            if (!out)
                throw std::runtime_error("cannot append to manifest");
            out << entry.dump() << '\n';
        }
    };

    struct GraphOptions
    {
        std::string family = "clique";
        std::size_t n = 100;
        std::size_t k = 0;
        double p = 0.1;
        std::string file;
        std::string graph_seed;
        std::size_t retry_budget = 1000;

        void attach(CLI::App* sub)
        {
            sub->add_option("--family", family, "clique|cycle|circulant|random-regular|errg|directed-errg");
            sub->add_option("--n", n, "number of servers");
            sub->add_option("--k", k, "circulant offsets / regular degree (circulant: 0 means ceil(sqrt(n)))");
            sub->add_option("--p", p, "edge probability for errg families");
            sub->add_option("--graph", file, "read the graph from an edge-list file instead");
            sub->add_option("--graph-seed", graph_seed, "fixed seed for a random graph (default: derived per run)");
            sub->add_option("--retry-budget", retry_budget, "random-regular restart budget");
        }

        GraphSpec spec(std::size_t n_override = 0) const
        {
            GraphSpec s{parse_family(family), n_override ? n_override : n};
            s.k = k;
            if (s.family == GraphFamily::Circulant && k == 0)
                s.k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(s.n))));
            s.p = p;
            s.retry_budget = retry_budget;
            return s;
        }

        bool from_file() const { return !file.empty(); }

        std::uint64_t seed_for(std::uint64_t run_seed, std::size_t n_value) const
        {
            return graph_seed.empty() ? derive_seed(run_seed, n_value, graph_stream) : parse_u64(graph_seed);
        }

        Graph build(std::uint64_t run_seed, std::size_t n_override = 0) const
        {
            if (from_file())
            {
                std::ifstream in(file);
                if (!in)
                    throw ConfigError("cannot read graph file " + file);
                return read_edgelist(in);
            }
            const auto s = spec(n_override);
            return generate(s, family_is_random(s.family) ? seed_for(run_seed, s.n) : 0);
        }
    };

    struct ModelOptions
    {
        double lambda = 0.9;
        std::size_t d = 2;
        double horizon = 10.0;
        double sample_dt = 0.1;
        std::string fallback = "self-only";
        std::string q_init = "1";
        std::size_t jmax = 40;
        std::uint64_t event_budget = 500'000'000;

        void attach(CLI::App* sub, bool with_sampling = true)
        {
            sub->add_option("--lambda", lambda, "arrival rate per server");
            sub->add_option("--d", d, "choices per arrival");
            sub->add_option("--T", horizon, "time horizon");
            if (with_sampling)
                sub->add_option("--sample-dt", sample_dt, "occupancy recording interval");
            sub->add_option("--fallback", fallback, "self-only|closed-jsq");
            sub->add_option("--q-init", q_init, "initial tail vector, e.g. 1,0.5,0.1 (default empty system)");
            sub->add_option("--jmax", jmax, "recorded occupancy levels");
            sub->add_option("--event-budget", event_budget, "abort after this many events");
        }

        SimConfig sim() const
        {
            SimConfig cfg;
            cfg.lambda = lambda;
            cfg.d = d;
            cfg.horizon = horizon;
            cfg.sample_dt = sample_dt;
            cfg.fallback = parse_fallback(fallback);
            cfg.q_init = parse_tail(q_init);
            cfg.jmax = jmax;
            cfg.event_budget = event_budget;
            return cfg;
        }
    };

    // Effective configuration: every option's value after config file and flags.
    json echo_config(const CLI::App* sub)
    {
        json cfg = json::object();
        for (const auto* opt : sub->get_options())
        {
            if (opt->get_lnames().empty())
                continue;
            const auto& name = opt->get_lnames().front();
            if (name == "help" || name == "config")
                continue;
            if (opt->count() > 0)
            {
                const auto& r = opt->results();
                std::string joined;
                for (std::size_t i = 0; i < r.size(); ++i)
                    joined += (i ? "," : "") + r[i];
                cfg[name] = joined;
            }
            else
            {
                cfg[name] = opt->get_default_str();
            }
        }
        return cfg;
    }

    std::string loaded_config;

    // Expands `--config <file>` into flags for every key the command line does
    // not already set, so explicit flags always win.
    std::vector<std::string> merge_config(CLI::App& app, std::vector<std::string> args, std::string& config_file)
    {
        CLI::App* sub = nullptr;
        std::vector<std::string> kept;
        for (std::size_t k = 0; k < args.size(); ++k)
        {
            if (!sub)
                for (auto* candidate : app.get_subcommands({}))
                    if (candidate->get_name() == args[k])
                        sub = candidate;
            if (args[k] == "--config" && k + 1 < args.size())
                config_file = args[++k];
            else if (args[k].rfind("--config=", 0) == 0)
                config_file = args[k].substr(9);
            else
                kept.push_back(args[k]);
        }
        if (config_file.empty() || !sub)
            return kept;
        std::ifstream in(config_file);
        if (!in)
            throw CLI::ValidationError("--config", "cannot read " + config_file);
        loaded_config = config_file;

        auto option_of = [&](const std::string& arg) -> const CLI::Option* {
            if (arg.rfind("--", 0) != 0)
                return nullptr;
            return sub->get_option_no_throw(arg.substr(0, arg.find('=')));
        };
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            const auto eq = line.find('=');
            auto trim = [](std::string t) {
                const auto a = t.find_first_not_of(" \t\r");
                const auto b = t.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string() : t.substr(a, b - a + 1);
            };
            if (trim(line).empty())
                continue;
            if (eq == std::string::npos)
                throw CLI::ValidationError("--config", config_file + ":" + std::to_string(line_no) +
                                                           ": expected key=value");
            const std::string key = "--" + trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            const CLI::Option* opt = sub->get_option_no_throw(key);
            if (!opt || key == "--config")
                throw CLI::ValidationError("--config", config_file + ": unknown key '" + key.substr(2) + "'");
            bool given = false;
            for (const auto& a : kept)
                given = given || option_of(a) == opt;
            if (given)
                continue;
            if (opt->get_expected_min() == 0)
            {
                if (value == "true" || value == "1" || value == "yes")
                    kept.push_back(key);
                else if (value != "false" && value != "0" && value != "no")
                    throw CLI::ValidationError("--config", "flag '" + key.substr(2) + "' needs true or false");
                continue;
            }
            kept.push_back(key);
            kept.push_back(value);
        }
        return kept;
    }

    json base_manifest(const std::string& command, const CLI::App* sub)
    {
        json m;
        m["command"] = command;
        m["version"] = version;
        if (!loaded_config.empty())
            m["config_file"] = loaded_config;
        m["config"] = echo_config(sub);
        return m;
    }

    void print_report(std::ostream& out, const Graph& g, std::size_t d)
    {
        const auto r = regularity_report(g, d);
        const double eps = r.epsilon < 1e-12 ? 0.0 : r.epsilon;
        out << "n=" << g.size() << " directed=" << (g.directed() ? 1 : 0) << " edges=" << g.edge_count() << '\n'
            << "d_min=" << r.d_min << " d_max=" << r.d_max << " epsilon=" << fmt(eps)
            << " isolated_count=" << r.isolated_count << " below_d_count=" << r.below_d_count << '\n'
            << "condition1: " << check_condition1(r, g.size(), d).label << '\n';
    }

    json report_json(const Graph& g, std::size_t d)
    {
        const auto r = regularity_report(g, d);
        return json{{"n", g.size()},
                    {"edges", g.edge_count()},
                    {"d_min", r.d_min},
                    {"d_max", r.d_max},
                    {"epsilon", r.epsilon},
                    {"isolated_count", r.isolated_count},
                    {"below_d_count", r.below_d_count},
                    {"condition1", check_condition1(r, g.size(), d).label}};
    }

    double seconds_since(std::chrono::steady_clock::time_point start)
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    // ---- subcommands ----------------------------------------------------

    struct GraphgenCmd
    {
        GraphOptions graph;
        std::string seed;
        std::size_t d = 2;
        std::string output;

        void attach(CLI::App* sub)
        {
            graph.attach(sub);
            sub->add_option("--seed", seed, "generator seed (required for random families)");
            sub->add_option("--d", d, "d used by the regularity report");
            sub->add_option("--output", output, "edge-list file name inside --out");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            const auto spec = graph.spec();
            std::uint64_t s = 0;
            if (family_is_random(spec.family))
            {
                if (seed.empty())
                    throw ConfigError("--seed is required for random graph families");
                s = parse_u64(seed);
            }
            const Graph g = generate(spec, s);
            const std::string name = output.empty()
                                         ? family_name(spec.family) + "_n" + std::to_string(spec.n) +
                                               (family_is_random(spec.family) ? "_s" + std::to_string(s) : "") +
                                               ".edgelist"
                                         : output;
            out.write(name, [&](std::ostream& os) { write_edgelist(os, g); });
            print_report(std::cout, g, d);
            std::cout << "wrote " << out.file(name).string() << '\n';
            auto m = base_manifest("graphgen", sub);
            m["seed"] = s;
            m["report"] = report_json(g, d);
            m["outputs"] = {name};
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct CheckGraphCmd
    {
        std::string file;
        std::size_t d = 2;

        void attach(CLI::App* sub)
        {
            sub->add_option("--graph", file, "edge-list file")->required();
            sub->add_option("--d", d, "d used by the regularity report");
        }

        int run()
        {
            std::ifstream in(file);
            if (!in)
                throw ConfigError("cannot read graph file " + file);
            print_report(std::cout, read_edgelist(in), d);
            return 0;
        }
    };

    struct SimulateCmd
    {
        GraphOptions graph;
        ModelOptions model;
        std::string seeds;
        std::string tagged;
        std::size_t jobs = 1;

        void attach(CLI::App* sub)
        {
            graph.attach(sub);
            model.attach(sub);
            sub->add_option("--seeds,--seed", seeds, "seed, range a:b, or list")->required();
            sub->add_option("--tagged", tagged, "servers whose paths are recorded (list or 'all')");
            sub->add_option("--jobs", jobs, "concurrent runs");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            const auto seed_list = parse_seeds(seeds);
            const SimConfig base = model.sim();
            std::vector<json> runs(seed_list.size());
            parallel_for(seed_list.size(), jobs, [&](std::size_t r) {
                const auto seed = seed_list[r];
                const Graph g = graph.build(seed);
                SimConfig cfg = base;
                cfg.seed = seed;
                if (!tagged.empty())
                    cfg.tagged = parse_tagged(tagged, g.size());
                const Trajectory t = run_sim(g, cfg);
                json run{{"seed", seed}, {"events", t.event_count}, {"arrivals", t.arrivals},
                         {"departures", t.departures}};
                if (!graph.from_file() && family_is_random(graph.spec().family))
                    run["graph_seed"] = graph.seed_for(seed, g.size());
                std::vector<std::string> files{out.write("occupancy_s" + std::to_string(seed) + ".csv",
                                                         [&](std::ostream& os) {
                                                             write_occupancy_csv(os, t.grid_times,
                                                                                 t.occupancy_series);
                                                         })};
                if (!cfg.tagged.empty())
                    files.push_back(out.write("tagged_s" + std::to_string(seed) + ".csv",
                                              [&](std::ostream& os) { write_tagged_csv(os, t); }));
                run["outputs"] = files;
                run["final_q1"] = t.occupancy_series.back()[1];
                runs[r] = std::move(run);
            });
            for (const auto& run : runs)
                std::cout << "seed=" << run["seed"] << " events=" << run["events"]
                          << " final_q1=" << fmt(run["final_q1"].get<double>()) << '\n';
            auto m = base_manifest("simulate", sub);
            m["runs"] = runs;
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct OdeCmd
    {
        ModelOptions model;
        double h = 1e-3;
        std::size_t truncation = 0;
        bool from_fixed_point = false;
        bool write_fixed = false;

        void attach(CLI::App* sub)
        {
            model.attach(sub);
            sub->add_option("--step", h, "RK4 step");
            sub->add_option("--B", truncation, "truncation level (0: automatic)");
            sub->add_flag("--from-fixed-point", from_fixed_point, "start from q* instead of --q-init");
            sub->add_flag("--fixed-point", write_fixed, "also write fixed_point.csv (requires lambda < 1)");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            const std::size_t B = truncation ? truncation : default_truncation(model.lambda, model.d);
            const auto q0 = from_fixed_point ? fixed_point(model.lambda, model.d, B) : parse_tail(model.q_init);
            if (write_fixed)
                fixed_point(model.lambda, model.d, B);  // validates lambda before any work
            if (!(model.sample_dt > 0.0))
                throw ConfigError("--sample-dt must be > 0");
            const auto sol = integrate(q0, model.lambda, model.d, model.horizon, h, B);

            std::vector<double> times;
            std::vector<OccupancyVector> states;
            const auto samples = static_cast<std::size_t>(std::floor(model.horizon / model.sample_dt + 1e-9));
            for (std::size_t k = 0; k <= samples; ++k)
            {
                times.push_back(static_cast<double>(k) * model.sample_dt);
                states.push_back(sol.at(times.back()));
            }
            double drift = 0.0;
            for (const auto& s : sol.states)
                drift = std::max(drift, l1_distance(s, q0));

            std::vector<std::string> files{
                out.write("ode.csv", [&](std::ostream& os) { write_occupancy_csv(os, times, states); })};
            if (write_fixed)
                files.push_back(out.write("fixed_point.csv", [&](std::ostream& os) {
                    write_fixed_point_csv(os, fixed_point(model.lambda, model.d, B));
                }));
            std::cout << "B=" << B << " steps=" << sol.times.size() - 1 << " sup_l1_drift=" << fmt(drift)
                      << " tail_mass_max=" << fmt(sol.tail_mass_max) << '\n';
            if (sol.truncation_warning)
                std::cerr << "warning: q_B reached " << fmt(sol.tail_mass_max)
                          << "; raise --B for a trustworthy solution\n";
            auto m = base_manifest("ode", sub);
            m["truncation"] = B;
            m["sup_l1_drift"] = drift;
            m["tail_mass_max"] = sol.tail_mass_max;
            m["truncation_warning"] = sol.truncation_warning;
            m["outputs"] = files;
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct CompareCmd
    {
        GraphOptions graph;
        ModelOptions model;
        std::string families = "clique";
        std::string sizes = "100,1000";
        std::string seeds;
        double h = 1e-3;
        std::size_t jobs = 1;

        void attach(CLI::App* sub)
        {
            graph.attach(sub);
            model.attach(sub);
            sub->add_option("--families", families, "comma-separated families to compare");
            sub->add_option("--sizes", sizes, "comma-separated n values");
            sub->add_option("--seeds,--seed", seeds, "seed, range a:b, or list")->required();
            sub->add_option("--step", h, "RK4 step for the reference ODE");
            sub->add_option("--jobs", jobs, "concurrent (cell, seed) runs");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            const auto seed_list = parse_seeds(seeds);
            const auto family_list = split(families, ',');
            const auto n_list = parse_sizes(sizes);
            SimConfig base = model.sim();
            const std::size_t B = default_truncation(base.lambda, base.d);
            const auto sol = integrate(base.q_init, base.lambda, base.d, base.horizon, h, B);

            struct Cell
            {
                std::string family;
                std::size_t n;
            };
            std::vector<Cell> cells;
            for (const auto& f : family_list)
            {
                parse_family(f);
                for (auto n : n_list)
                    cells.push_back({f, n});
            }
            const std::size_t per_cell = seed_list.size();
            std::vector<double> errors(cells.size() * per_cell);
            std::vector<std::uint64_t> events(errors.size());
            std::vector<std::string> labels(errors.size());
            std::vector<std::size_t> dmins(errors.size());
            parallel_for(errors.size(), jobs, [&](std::size_t k) {
                const auto& cell = cells[k / per_cell];
                const auto seed = seed_list[k % per_cell];
                GraphOptions go = graph;
                go.family = cell.family;
                go.file.clear();
                const Graph g = go.build(seed, cell.n);
                SimConfig cfg = base;
                cfg.seed = seed;
                cfg.tagged.clear();
                const auto t = run_sim(g, cfg);
                errors[k] = sup_grid_l1(t.grid_times, t.occupancy_series, sol);
                events[k] = t.event_count;
                const auto r = regularity_report(g, cfg.d);
                labels[k] = check_condition1(r, g.size(), cfg.d).label;
                dmins[k] = r.d_min;
            });

            json rows = json::array();
            std::ostringstream table;
            table << "family,n,seeds,mean_sup_l1,stderr,d_min,condition1\n";
            table << std::setprecision(17);
            for (std::size_t c = 0; c < cells.size(); ++c)
            {
                const auto stats = summarize(std::span<const double>(errors).subspan(c * per_cell, per_cell));
                const auto& label = labels[c * per_cell];
                table << cells[c].family << ',' << cells[c].n << ',' << per_cell << ',' << stats.mean() << ','
                      << stats.std_error() << ',' << dmins[c * per_cell] << ',' << label << '\n';
                std::cout << std::left << std::setw(16) << cells[c].family << " n=" << std::setw(6) << cells[c].n
                          << " mean_sup_l1=" << fmt(stats.mean()) << " stderr=" << fmt(stats.std_error())
                          << "  condition1: " << label << '\n';
                json row{{"family", cells[c].family}, {"n", cells[c].n}, {"mean_sup_l1", stats.mean()},
                         {"stderr", stats.std_error()}, {"condition1", label}};
                row["events"] = std::vector<std::uint64_t>(events.begin() + c * per_cell,
                                                           events.begin() + (c + 1) * per_cell);
                rows.push_back(row);
            }
            const auto file = out.write("compare.csv", [&](std::ostream& os) { os << table.str(); });
            auto m = base_manifest("compare", sub);
            m["seeds"] = seed_list;
            m["truncation"] = B;
            m["tail_mass_max"] = sol.tail_mass_max;
            m["rows"] = rows;
            m["outputs"] = {file};
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct CoupleCmd
    {
        ModelOptions model;
        std::string family = "errg";
        std::string p_rule = "n^-1/2";
        std::string sizes = "256,1024";
        std::size_t replications = 50;
        std::string seed;
        bool freeze = false;
        std::string tagged;
        double h = 1e-3;
        std::size_t max_redraws = 100;
        std::size_t jobs = 1;

        void attach(CLI::App* sub)
        {
            model.attach(sub, false);
            sub->add_option("--family", family, "errg or clique");
            sub->add_option("--p-rule", p_rule, "n^-1/2, n^<a>, log2n/n, logn/n or const:<p>");
            sub->add_option("--sizes", sizes, "comma-separated n values");
            sub->add_option("--replications,--reps", replications, "replications per n");
            sub->add_option("--seed", seed, "master seed")->required();
            sub->add_flag("--freeze-graph", freeze, "one graph per n for all replications");
            sub->add_option("--tagged", tagged, "tagged servers (default all)");
            sub->add_option("--step", h, "RK4 step for q(t)");
            sub->add_option("--max-redraws", max_redraws, "graph redraw limit per replication");
            sub->add_option("--jobs", jobs, "concurrent replications");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            RateSweepConfig cfg;
            cfg.family = parse_family(family);
            cfg.p_rule = p_rule;
            cfg.n_list = parse_sizes(sizes);
            cfg.sim = model.sim();
            cfg.replications = replications;
            cfg.seed = parse_u64(seed);
            cfg.freeze_graph = freeze;
            cfg.ode_step = h;
            cfg.max_redraws = max_redraws;
            cfg.jobs = jobs;
            if (!tagged.empty() && tagged != "all")
                cfg.tagged = parse_tagged(tagged, 0);
            const auto rows = rate_sweep(cfg);

            std::vector<std::string> files{
                out.write("rate_sweep.csv", [&](std::ostream& os) { write_rate_sweep_csv(os, rows); }),
                out.write("rate_sweep_replications.csv", [&](std::ostream& os) {
                    os << "n,replication,sup2\n" << std::setprecision(17);
                    for (const auto& row : rows)
                        for (std::size_t r = 0; r < row.per_replication.size(); ++r)
                            os << row.n << ',' << r << ',' << row.per_replication[r] << '\n';
                })};
            json table = json::array();
            for (const auto& row : rows)
            {
                std::cout << "n=" << std::setw(6) << std::left << row.n << " p=" << fmt(row.p)
                          << " mean_sup2=" << fmt(row.mean_sup2) << " stderr=" << fmt(row.std_error)
                          << " product=" << fmt(row.product) << " redraws=" << row.redraws << '\n';
                table.push_back({{"n", row.n}, {"p", row.p}, {"mean_sup2", row.mean_sup2},
                                 {"stderr", row.std_error}, {"redraws", row.redraws}});
            }
            auto m = base_manifest("couple", sub);
            m["freeze_graph"] = freeze;
            m["rows"] = table;
            m["outputs"] = files;
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct ChaosCmd
    {
        GraphOptions graph;
        ModelOptions model;
        std::string pairs = "0-1";
        std::string functional = "busy";
        std::size_t replications = 2000;
        std::string seed;
        bool control = false;
        double h = 1e-3;
        std::size_t jobs = 1;

        void attach(CLI::App* sub)
        {
            graph.attach(sub);
            model.attach(sub, false);
            sub->add_option("--pairs", pairs, "server pairs i-j, comma-separated");
            sub->add_option("--functional", functional, "busy or geq:<k>");
            sub->add_option("--replications,--reps", replications, "independent replications");
            sub->add_option("--seed", seed, "master seed")->required();
            sub->add_flag("--mkv-control", control, "also estimate the covariance of independent limit paths");
            sub->add_option("--step", h, "RK4 step for the control");
            sub->add_option("--jobs", jobs, "concurrent replications");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            const auto start = std::chrono::steady_clock::now();
            const auto s = parse_u64(seed);
            const Graph g = graph.build(s);
            SimConfig cfg = model.sim();
            const auto f = Functional::parse(functional);
            const auto pair_list = parse_pairs(pairs);
            const auto est = chaos_covariance(g, cfg, pair_list, f, replications, s, jobs);
            std::vector<std::string> files{
                out.write("covariance.csv", [&](std::ostream& os) { write_covariance_csv(os, est); })};
            for (const auto& e : est)
                std::cout << "pair " << e.i << '-' << e.j << " cov=" << fmt(e.cov) << " stderr=" << fmt(e.std_error)
                          << '\n';
            auto m = base_manifest("chaos", sub);
            if (control)
            {
                const std::size_t B = default_truncation(cfg.lambda, cfg.d);
                const auto sol = integrate(cfg.q_init, cfg.lambda, cfg.d, cfg.horizon, h, B);
                const std::vector<CovarianceEstimate> c{
                    mkv_covariance_control(sol, cfg, f, replications, derive_seed(s, graph_stream))};
                files.push_back(
                    out.write("covariance_mkv_control.csv", [&](std::ostream& os) { write_covariance_csv(os, c); }));
                std::cout << "mkv control cov=" << fmt(c[0].cov) << " stderr=" << fmt(c[0].std_error) << '\n';
                m["tail_mass_max"] = sol.tail_mass_max;
            }
            m["graph"] = report_json(g, cfg.d);
            m["outputs"] = files;
            m["wall_clock_s"] = seconds_since(start);
            out.manifest(m);
            return 0;
        }
    };

    struct SummarizeCmd
    {
        std::vector<std::string> inputs;
        std::size_t keys = 0;
        std::string output = "summary.csv";

        void attach(CLI::App* sub)
        {
            sub->add_option("--inputs", inputs, "CSV files sharing a header")->required();
            sub->add_option("--keys", keys, "leading key columns (0: all but the last)");
            sub->add_option("--output", output, "summary file name inside --out");
        }

        int run(const CLI::App* sub, const Output& out)
        {
            std::string header;
            std::vector<std::string> order;
            std::map<std::string, RunningStats> groups;
            std::size_t key_cols = keys;
            for (const auto& path : inputs)
            {
                std::ifstream in(path);
                if (!in)
                    throw ConfigError("cannot read " + path);
                std::string line;
                if (!std::getline(in, line))
                    throw ConfigError(path + " is empty");
                if (header.empty())
                {
                    header = line;
                    const auto cols = std::count(line.begin(), line.end(), ',') + 1;
                    if (key_cols == 0)
                        key_cols = static_cast<std::size_t>(cols - 1);
                    if (key_cols + 1 > static_cast<std::size_t>(cols))
                        throw ConfigError("--keys leaves no value column");
                }
                else if (line != header)
                    throw ConfigError(path + " has a different header");
                while (std::getline(in, line))
                {
                    if (line.empty())
                        continue;
                    std::size_t pos = 0;
                    for (std::size_t c = 0; c < key_cols; ++c)
                        pos = line.find(',', pos) + 1;
                    const auto end = line.find(',', pos);
                    const std::string key = line.substr(0, pos ? pos - 1 : 0);
                    const double value = parse_double(line.substr(pos, end - pos));
                    auto [it, fresh] = groups.try_emplace(key);
                    if (fresh)
                        order.push_back(key);
                    it->second.add(value);
                }
            }
            std::string key_header;
            {
                std::size_t pos = 0;
                for (std::size_t c = 0; c < key_cols; ++c)
                    pos = header.find(',', pos) + 1;
                key_header = header.substr(0, pos ? pos - 1 : 0);
            }
            const auto file = out.write(output, [&](std::ostream& os) {
                os << (key_header.empty() ? "" : key_header + ",") << "mean,stderr,count\n" << std::setprecision(17);
                for (const auto& key : order)
                {
                    const auto& s = groups.at(key);
                    os << (key.empty() ? "" : key + ",") << s.mean() << ',' << s.std_error() << ',' << s.count << '\n';
                }
            });
            std::cout << "summarized " << order.size() << " groups from " << inputs.size() << " files\n";
            auto m = base_manifest("summarize", sub);
            m["outputs"] = {file};
            out.manifest(m);
            return 0;
        }
    };
} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"graphsq: JSQ(d) load balancing on graphs"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    std::string config_file;
    const char* env_out = std::getenv("GRAPHSQ_OUT");
    std::string out_dir = env_out && *env_out ? env_out : "graphsq_out";
    app.add_option("--out", out_dir, "output directory (default $GRAPHSQ_OUT or ./graphsq_out)");
    app.set_version_flag("--version", std::string("graphsq ") + version);

    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_file, "key=value configuration file; flags take precedence");
        sub->add_option("--out", out_dir, "output directory");
        return sub;
    };

    GraphgenCmd graphgen;
    CheckGraphCmd check;
    SimulateCmd simulate;
    OdeCmd ode;
    CompareCmd compare;
    CoupleCmd couple;
    ChaosCmd chaos;
    SummarizeCmd summarize_cmd;
    auto* s_graphgen = add("graphgen", "generate a graph and report its degree regularity");
    auto* s_check = add("check-graph", "regularity report for an edge-list file");
    auto* s_simulate = add("simulate", "exact event simulation of JSQ(d) on a graph");
    auto* s_ode = add("ode", "integrate the mean-field ODE");
    auto* s_compare = add("compare", "sup-grid l1 distance between simulated occupancy and the ODE");
    auto* s_couple = add("couple", "coupling-error rate sweep");
    auto* s_chaos = add("chaos", "pairwise covariance of tagged queues");
    auto* s_summarize = add("summarize", "mean and stderr over CSV outputs");
    graphgen.attach(s_graphgen);
    check.attach(s_check);
    simulate.attach(s_simulate);
    ode.attach(s_ode);
    compare.attach(s_compare);
    couple.attach(s_couple);
    chaos.attach(s_chaos);
    summarize_cmd.attach(s_summarize);

    try
    {
        auto args = merge_config(app, std::vector<std::string>(argv + 1, argv + argc), config_file);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        Output out{out_dir};
        if (!s_check->parsed())
            fs::create_directories(out.dir);
        if (s_graphgen->parsed())
            return graphgen.run(s_graphgen, out);
        if (s_check->parsed())
            return check.run();
        if (s_simulate->parsed())
            return simulate.run(s_simulate, out);
        if (s_ode->parsed())
            return ode.run(s_ode, out);
        if (s_compare->parsed())
            return compare.run(s_compare, out);
        if (s_couple->parsed())
            return couple.run(s_couple, out);
        if (s_chaos->parsed())
            return chaos.run(s_chaos, out);
        if (s_summarize->parsed())
            return summarize_cmd.run(s_summarize, out);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const ModelError& e)
    {
        std::cerr << "model error: " << e.what() << '\n';
        return 3;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
