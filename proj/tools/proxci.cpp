// proxci: simulate | discover | estimate | pipeline | benchmark

#include "proxci/benchmark.hpp"
#include "proxci/bridge.hpp"
#include "proxci/discovery.hpp"
#include "proxci/error.hpp"
#include "proxci/estimator.hpp"
#include "proxci/scm.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace proxci;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    out << text;
    require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path.string() + "' failed");
}

fs::path output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::Io, "cannot create output directory '" + dir + "'");
    return fs::path(dir);
}

// Flag values that were given on the command line, keyed like the config file.
struct Overrides {
    json values = json::object();
    std::vector<std::function<void()>> collectors;

    template <class T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        auto slot = std::make_shared<T>();
        auto* opt = app->add_option(flag, *slot, help);
        collectors.push_back([this, opt, slot, key] {
            if (opt->count() > 0) values[key] = *slot;
        });
        return opt;
    }

    void flag(CLI::App* app, const std::string& flag, const std::string& key, bool value, const std::string& help) {
        auto* opt = app->add_flag(flag, help);
        collectors.push_back([this, opt, key, value] {
            if (opt->count() > 0) values[key] = value;
        });
    }

    json merged(const std::string& config_path) {
        json doc = config_path.empty() ? json::object() : read_json_file(config_path);
        require(doc.is_object(), ErrorKind::Config, "config file must hold a JSON object");
        for (auto& c : collectors) c();
        for (const auto& [k, v] : values.items()) doc[k] = v;
        return doc;
    }
};

// Settings shared by simulate, discover, estimate and pipeline.
struct RunConfig {
    std::string data;
    std::string scenario;
    long n = 1000;
    std::uint64_t seed = 1;
    TestBins bins;
    double alpha = 0.05;
    ProxyRule proxy_rule = ProxyRule::SmallestIndex;
    std::string target;
    std::string proxy_mode = "auto";
    std::string z, w;
    std::optional<double> lambda_h, lambda_q;
    bool use_q = true;
    int grid_points = 10;
    double grid_lo = 0.0, grid_hi = 1.0;
    long truth_replicates = 10000;
};

RunConfig run_config_from_json(const json& doc, bool csv_default_bins) {
    RunConfig c;
    bool bins_given = false;
    try {
        for (const auto& [key, v] : doc.items()) {
            if (key == "data") c.data = v.get<std::string>();
            else if (key == "scenario") c.scenario = v.get<std::string>();
            else if (key == "n") c.n = v.get<long>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "bins") {
                const auto b = v.get<std::vector<int>>();
                require(b.size() == 3, ErrorKind::Config, "bins must be [M, N, L]");
                c.bins.M = b[0];
                c.bins.N = b[1];
                c.bins.L = b[2];
                bins_given = true;
            } else if (key == "bin_strategy") {
                const auto s = v.get<std::string>();
                require(s == "quantile" || s == "uniform", ErrorKind::Config, "bin_strategy must be quantile|uniform");
                c.bins.strategy = s == "quantile" ? BinStrategy::Quantile : BinStrategy::Uniform;
            } else if (key == "alpha") c.alpha = v.get<double>();
            else if (key == "proxy_rule") c.proxy_rule = proxy_rule_from_string(v.get<std::string>());
            else if (key == "target") c.target = v.get<std::string>();
            else if (key == "proxy_mode") c.proxy_mode = v.get<std::string>();
            else if (key == "z") c.z = v.get<std::string>();
            else if (key == "w") c.w = v.get<std::string>();
            else if (key == "lambda_h") c.lambda_h = v.get<double>();
            else if (key == "lambda_q") c.lambda_q = v.get<double>();
            else if (key == "use_q") c.use_q = v.get<bool>();
            else if (key == "grid_points") c.grid_points = v.get<int>();
            else if (key == "grid_lo") c.grid_lo = v.get<double>();
            else if (key == "grid_hi") c.grid_hi = v.get<double>();
            else if (key == "truth_replicates") c.truth_replicates = v.get<long>();
            else fail(ErrorKind::Config, "unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    require(c.data.empty() != c.scenario.empty(), ErrorKind::Config,
            "exactly one dataset source is required: data (CSV path) or scenario");
    require(c.n >= 1, ErrorKind::Usage, "n must be at least 1");
    require(c.proxy_mode == "auto" || c.proxy_mode == "oracle" || c.proxy_mode == "explicit", ErrorKind::Config,
            "proxy_mode must be auto|oracle|explicit");
    require(!(c.z.empty() != c.w.empty()), ErrorKind::Config, "give both z and w or neither");
    if (!c.z.empty()) c.proxy_mode = "explicit";
    if (!bins_given && csv_default_bins && !c.data.empty()) c.bins = {10, 6, 5, c.bins.strategy};
    return c;
}

struct Source {
    Dataset data;
    std::optional<ScmSpec> spec;
};

Source load(const RunConfig& c) {
    if (!c.data.empty()) return {read_csv_file(c.data), std::nullopt};
    ScmSpec spec = builtin_scenario(c.scenario);
    return {sample(spec, c.n, c.seed).without_latent(), spec};
}

std::vector<std::string> names_of(const Dataset& d, Role role) {
    std::vector<std::string> out;
    for (const auto& col : d.columns()) {
        if (col.role == role) out.push_back(col.name);
    }
    return out;
}

json echo(const RunConfig& c) {
    json doc = {{"bins", {c.bins.M, c.bins.N, c.bins.L}},
                {"bin_strategy", c.bins.strategy == BinStrategy::Quantile ? "quantile" : "uniform"},
                {"alpha", c.alpha},
                {"proxy_rule", to_string(c.proxy_rule)},
                {"seed", c.seed}};
    if (!c.data.empty()) doc["data"] = c.data;
    else {
        doc["scenario"] = c.scenario;
        doc["n"] = c.n;
    }
    return doc;
}

BipartiteGraph run_discovery(const Source& src, const RunConfig& c, unsigned jobs, const fs::path& out, json& summary) {
    const BipartiteGraph g = discover_graph(src.data, c.bins, c.alpha, c.proxy_rule, jobs);
    json doc = to_json(g);
    doc["treatments"] = names_of(src.data, Role::Treatment);
    doc["outcomes"] = names_of(src.data, Role::Outcome);
    doc["config"] = echo(c);
    if (src.spec) {
        const auto m = graph_metrics(g, BipartiteGraph::from_adjacency(src.spec->adjacency()));
        doc["metrics"] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
    }
    write_text(out / "graph.json", doc.dump(2) + "\n");
    write_text(out / "graph.dot", to_dot(g));
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << "\n";
    summary["graph"] = doc;
    return g;
}

void run_estimate(const Source& src, const RunConfig& c, const std::optional<BipartiteGraph>& discovered,
                  unsigned jobs, const fs::path& out, json& summary) {
    require(!c.target.empty(), ErrorKind::Config, "a target such as A_3->Y_1 is required");
    const auto treatments = names_of(src.data, Role::Treatment);
    const auto outcomes = names_of(src.data, Role::Outcome);
    const Target t = parse_target(c.target, treatments, outcomes);

    ProxyAssignment proxies;
    if (c.proxy_mode == "explicit") {
        proxies = {t.S, t.j, src.data.variable_named(c.z), src.data.variable_named(c.w), NullProxyCase::UserGiven};
    } else if (c.proxy_mode == "oracle") {
        require(src.spec.has_value(), ErrorKind::Config, "oracle proxies need a built-in scenario");
        auto fixed = tabulated_proxies(t);
        if (!fixed || src.spec->treatment_count() != 5 || src.spec->outcome_count() != 4) {
            fixed = select_proxies(BipartiteGraph::from_adjacency(src.spec->adjacency()), t.S, t.j);
        }
        proxies = *fixed;
    } else {
        BipartiteGraph g = discovered ? *discovered : discover_graph(src.data, c.bins, c.alpha, c.proxy_rule, jobs);
        proxies = select_proxies(g, t.S, t.j);
    }

    KernelConfig kc = default_kernel_config(t.S, t.j);
    if (c.lambda_h) kc.lambda_h = *c.lambda_h;
    if (c.lambda_q) kc.lambda_q = *c.lambda_q;
    const BridgeModel h = fit_outcome_bridge(src.data, proxies, kc);
    write_text(out / "bridge_h.json", to_json(h).dump() + "\n");
    BridgeModel q;
    BridgeFn qfn;
    json prop_doc = nullptr;
    if (c.use_q) {
        const auto prop = estimate_propensity(src.data, proxies.S, proxies.w);
        q = fit_treatment_bridge(src.data, proxies, kc, prop);
        qfn = as_function(q);
        write_text(out / "bridge_q.json", to_json(q).dump() + "\n");
        long floored = 0;
        for (bool f : prop.floored) floored += f;
        prop_doc = {{"bandwidth_a", prop.bandwidth_a}, {"bandwidth_w", prop.bandwidth_w}, {"floored", floored}};
    }
    std::vector<Eigen::VectorXd> grid;
    for (const auto& p : linear_grid(c.grid_lo, c.grid_hi, c.grid_points)) {
        grid.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(t.S.size()), p(0)));
    }
    const EffectCurve curve = effect_curve(src.data, proxies, as_function(h), qfn, grid, {}, jobs);
    std::optional<EffectCurve> truth;
    if (src.spec) truth = ground_truth_curve(*src.spec, t.j, t.S, grid, c.truth_replicates, truth_seed(c.seed), jobs);

    std::ostringstream csv;
    write_curve_csv(csv, curve);
    write_text(out / "curve.csv", csv.str());
    const std::string label = target_label(t, treatments, outcomes);
    write_text(out / "curve.svg", curve_svg(curve, truth ? &*truth : nullptr, label));

    std::vector<double> doses;
    for (const auto& g : grid) doses.push_back(g(0));
    json doc = {{"target", label},
                {"proxies", to_json(proxies)},
                {"lambda_h", kc.lambda_h},
                {"lambda_q", c.use_q ? json(kc.lambda_q) : json(nullptr)},
                {"use_q", c.use_q},
                {"propensity", prop_doc},
                {"bandwidth", curve.bandwidth},
                {"grid", doses},
                {"estimates", curve.estimates},
                {"std_errors", curve.std_errors},
                {"n", src.data.rows()}};
    if (truth) {
        doc["truth"] = truth->estimates;
        doc["cmae"] = cmae(curve, *truth);
    }
    doc["config"] = echo(c);
    write_text(out / "summary.json", doc.dump(2) + "\n");
    summary["estimate"] = doc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proximal causal inference with multiple treatments and outcomes"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", replay;
    unsigned jobs = 1;
    Overrides ov;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "flat JSON config; flags override its values");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--jobs", jobs, "worker threads");
        ov.add<std::uint64_t>(sub, "--seed", "seed", "master seed");
    };
    const auto source = [&](CLI::App* sub) {
        ov.add<std::string>(sub, "--data", "data", "CSV with name:a|y|x header");
        ov.add<std::string>(sub, "--scenario", "scenario", "built-in scenario id");
        ov.add<long>(sub, "--n", "n", "sample size for a built-in scenario");
    };
    const auto testing = [&](CLI::App* sub) {
        ov.add<std::vector<int>>(sub, "--bins", "bins", "M N L")->expected(3);
        ov.add<std::string>(sub, "--bin-strategy", "bin_strategy", "quantile|uniform");
        ov.add<double>(sub, "--alpha", "alpha", "test level");
        ov.add<std::string>(sub, "--proxy-rule", "proxy_rule", "smallest-index|majority-vote");
    };
    const auto estimating = [&](CLI::App* sub) {
        ov.add<std::string>(sub, "--target", "target", "e.g. A_3->Y_1 or A_1,A_3->Y_1");
        ov.add<std::string>(sub, "--proxy-mode", "proxy_mode", "auto|oracle|explicit");
        ov.add<std::string>(sub, "--z", "z", "treatment-inducing proxy column");
        ov.add<std::string>(sub, "--w", "w", "outcome-inducing proxy column");
        ov.add<double>(sub, "--lambda-h", "lambda_h", "outcome bridge regularizer");
        ov.add<double>(sub, "--lambda-q", "lambda_q", "treatment bridge regularizer");
        ov.flag(sub, "--no-q", "use_q", false, "drop the treatment bridge (outcome-bridge-only estimate)");
        ov.add<int>(sub, "--grid-points", "grid_points", "dose grid size");
        ov.add<double>(sub, "--grid-lo", "grid_lo", "lowest dose");
        ov.add<double>(sub, "--grid-hi", "grid_hi", "highest dose");
        ov.add<long>(sub, "--truth-replicates", "truth_replicates", "Monte Carlo replicates for the true curve");
    };

    auto* simulate = app.add_subcommand("simulate", "sample a built-in scenario to CSV");
    common(simulate);
    ov.add<std::string>(simulate, "--scenario", "scenario", "built-in scenario id");
    ov.add<long>(simulate, "--n", "n", "sample size");

    auto* discover = app.add_subcommand("discover", "test every treatment-outcome edge");
    common(discover);
    source(discover);
    testing(discover);

    auto* estimate = app.add_subcommand("estimate", "fit bridges and estimate a dose-response curve");
    common(estimate);
    source(estimate);
    testing(estimate);
    estimating(estimate);

    auto* pipeline = app.add_subcommand("pipeline", "discover, select proxies, then estimate");
    common(pipeline);
    source(pipeline);
    testing(pipeline);
    estimating(pipeline);

    auto* benchmark = app.add_subcommand("benchmark", "repeated simulate/discover/estimate against the truth");
    common(benchmark);
    benchmark->add_option("--replay", replay, "rerun the config embedded in a report");
    ov.add<std::string>(benchmark, "--scenario", "scenario", "built-in scenario id");
    ov.add<long>(benchmark, "--n", "n", "sample size per replicate");
    ov.add<int>(benchmark, "--reps", "reps", "replicates");
    ov.add<std::vector<std::string>>(benchmark, "--targets", "targets", "targets such as A_3->Y_1");
    ov.add<std::string>(benchmark, "--proxy-mode", "proxy_mode", "oracle|auto");
    testing(benchmark);
    ov.add<long>(benchmark, "--truth-replicates", "truth_replicates", "Monte Carlo replicates for the true curve");
    ov.flag(benchmark, "--no-q", "use_q", false, "drop the treatment bridge");
    ov.flag(benchmark, "--no-discovery", "discovery", false, "skip graph discovery metrics");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e);
        } catch (const CLI::ParseError& e) {
            fail(ErrorKind::Usage, e.what());
        }

        const fs::path out = output_dir(out_dir);
        if (benchmark->parsed()) {
            json doc = replay.empty() ? json::object() : read_json_file(replay).at("config");
            const json merged = ov.merged(config_path);
            for (const auto& [k, v] : merged.items()) doc[k] = v;
            const BenchmarkConfig bc = benchmark_config_from_json(doc);
            const json report = run_benchmark(bc, jobs);
            write_text(out / "report.json", report.dump(2) + "\n");
            for (const auto& t : report.at("cmae")) {
                std::cout << t.at("target").get<std::string>() << " cMAE " << t.at("mean").get<double>() << " +- "
                          << t.at("std").get<double>() << "\n";
            }
            if (report.contains("discovery")) {
                const auto& d = report.at("discovery");
                std::cout << "F1 " << d.at("f1").at("mean").get<double>() << " precision "
                          << d.at("precision").at("mean").get<double>() << " recall "
                          << d.at("recall").at("mean").get<double>() << "\n";
            }
            return 0;
        }

        json doc = ov.merged(config_path);
        if (simulate->parsed()) {
            const RunConfig c = run_config_from_json(doc, false);
            require(!c.scenario.empty(), ErrorKind::Usage, "simulate needs --scenario");
            const ScmSpec spec = builtin_scenario(c.scenario);
            const Dataset data = sample(spec, c.n, c.seed);
            write_csv_file((out / "data.csv").string(), data);
            const json sidecar = {{"scenario", c.scenario}, {"n", c.n}, {"seed", c.seed}, {"spec", to_json(spec)}};
            write_text(out / "data.json", sidecar.dump(2) + "\n");
            return 0;
        }

        const RunConfig c = run_config_from_json(doc, true);
        const Source src = load(c);
        json summary;
        if (discover->parsed()) {
            run_discovery(src, c, jobs, out, summary);
        } else if (estimate->parsed()) {
            run_estimate(src, c, std::nullopt, jobs, out, summary);
        } else {
            const BipartiteGraph g = run_discovery(src, c, jobs, out, summary);
            run_estimate(src, c, g, jobs, out, summary);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::Usage ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
