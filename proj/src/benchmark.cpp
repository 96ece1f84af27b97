#include "proxci/benchmark.hpp"

#include "proxci/error.hpp"
#include "proxci/estimator.hpp"
#include "proxci/parallel.hpp"
#include "proxci/rng.hpp"

#include <cmath>
#include <set>

namespace proxci {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && s[b] == ' ') ++b;
    while (e > b && s[e - 1] == ' ') --e;
    return s.substr(b, e - b);
}

int find_name(const std::vector<std::string>& names, const std::string& name, const char* what) {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return static_cast<int>(k);
    }
    fail(ErrorKind::UnknownVariable, std::string("unknown ") + what + " '" + name + "'");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

nlohmann::json summary(const std::vector<double>& v) {
    return {{"values", v}, {"mean", mean_of(v)}, {"std", std_of(v)}};
}

}  // namespace

Target parse_target(const std::string& text, const std::vector<std::string>& treatments,
                    const std::vector<std::string>& outcomes) {
    const auto arrow = text.find("->");
    require(arrow != std::string::npos, ErrorKind::Config, "target '" + text + "' is not of the form A->Y");
    Target t;
    t.j = find_name(outcomes, strip(text.substr(arrow + 2)), "outcome");
    std::string lhs = text.substr(0, arrow);
    if (!lhs.empty() && lhs.front() == '(' && lhs.back() == ')') lhs = lhs.substr(1, lhs.size() - 2);
    std::size_t start = 0;
    while (true) {
        const auto comma = lhs.find(',', start);
        t.S.push_back(find_name(treatments, strip(lhs.substr(start, comma - start)), "treatment"));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    require(std::set<int>(t.S.begin(), t.S.end()).size() == t.S.size(), ErrorKind::Config,
            "target '" + text + "' repeats a treatment");
    return t;
}

std::string target_label(const Target& t, const std::vector<std::string>& treatments,
                         const std::vector<std::string>& outcomes) {
    std::string out;
    for (std::size_t k = 0; k < t.S.size(); ++k) out += (k ? "," : "") + treatments.at(static_cast<std::size_t>(t.S[k]));
    return out + "->" + outcomes.at(static_cast<std::size_t>(t.j));
}

std::optional<ProxyAssignment> tabulated_proxies(const Target& t) {
    std::vector<int> s = t.S;
    std::sort(s.begin(), s.end());
    const auto make = [&](int z_outcome, int w_treatment) {
        return ProxyAssignment{t.S, t.j, VariableId::outcome(z_outcome), VariableId::treatment(w_treatment),
                               NullProxyCase::III};
    };
    if ((s == std::vector<int>{2} || s == std::vector<int>{0, 2}) && t.j == 0) return make(2, 4);
    if (s == std::vector<int>{1} && t.j == 1) return make(2, 4);
    if (s == std::vector<int>{0, 4} && t.j == 3) return make(1, 2);
    return std::nullopt;
}

nlohmann::json to_json(const BenchmarkConfig& c) {
    nlohmann::json doc = {{"scenario", c.scenario},
                          {"n", c.n},
                          {"reps", c.reps},
                          {"seed", c.seed},
                          {"targets", c.targets},
                          {"proxy_mode", c.proxy_mode},
                          {"bins", {c.bins.M, c.bins.N, c.bins.L}},
                          {"bin_strategy", c.bins.strategy == BinStrategy::Quantile ? "quantile" : "uniform"},
                          {"alpha", c.alpha},
                          {"proxy_rule", to_string(c.proxy_rule)},
                          {"discovery", c.discovery},
                          {"truth_replicates", c.truth_replicates},
                          {"grid_points", c.grid_points},
                          {"grid_lo", c.grid_lo},
                          {"grid_hi", c.grid_hi},
                          {"use_q", c.use_q}};
    doc["lambda_h"] = c.lambda_h ? nlohmann::json(*c.lambda_h) : nlohmann::json(nullptr);
    doc["lambda_q"] = c.lambda_q ? nlohmann::json(*c.lambda_q) : nlohmann::json(nullptr);
    return doc;
}

BenchmarkConfig benchmark_config_from_json(const nlohmann::json& doc) {
    require(doc.is_object(), ErrorKind::Config, "benchmark config must be a JSON object");
    BenchmarkConfig c;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key == "scenario") c.scenario = value.get<std::string>();
            else if (key == "n") c.n = value.get<long>();
            else if (key == "reps") c.reps = value.get<int>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "targets") c.targets = value.get<std::vector<std::string>>();
            else if (key == "proxy_mode") c.proxy_mode = value.get<std::string>();
            else if (key == "bins") {
                const auto b = value.get<std::vector<int>>();
                require(b.size() == 3, ErrorKind::Config, "bins must be [M, N, L]");
                c.bins.M = b[0];
                c.bins.N = b[1];
                c.bins.L = b[2];
            } else if (key == "bin_strategy") {
                const auto s = value.get<std::string>();
                require(s == "quantile" || s == "uniform", ErrorKind::Config, "bin_strategy must be quantile|uniform");
                c.bins.strategy = s == "quantile" ? BinStrategy::Quantile : BinStrategy::Uniform;
            } else if (key == "alpha") c.alpha = value.get<double>();
            else if (key == "proxy_rule") c.proxy_rule = proxy_rule_from_string(value.get<std::string>());
            else if (key == "discovery") c.discovery = value.get<bool>();
            else if (key == "truth_replicates") c.truth_replicates = value.get<long>();
            else if (key == "grid_points") c.grid_points = value.get<int>();
            else if (key == "grid_lo") c.grid_lo = value.get<double>();
            else if (key == "grid_hi") c.grid_hi = value.get<double>();
            else if (key == "use_q") c.use_q = value.get<bool>();
            else if (key == "lambda_h") c.lambda_h = value.is_null() ? std::nullopt : std::optional(value.get<double>());
            else if (key == "lambda_q") c.lambda_q = value.is_null() ? std::nullopt : std::optional(value.get<double>());
            else fail(ErrorKind::Config, "unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("bad config value: ") + e.what());
    }
    require(c.n >= 1, ErrorKind::Config, "n must be at least 1");
    require(c.reps >= 1, ErrorKind::Config, "reps must be at least 1");
    require(c.proxy_mode == "oracle" || c.proxy_mode == "auto", ErrorKind::Config, "proxy_mode must be oracle|auto");
    require(c.alpha >= 0.0 && c.alpha <= 1.0, ErrorKind::Config, "alpha must lie in [0, 1]");
    require(c.truth_replicates >= 1 && c.grid_points >= 1, ErrorKind::Config, "grid and replicates must be positive");
    return c;
}

std::uint64_t replicate_seed(std::uint64_t master, int rep) {
    return CounterRng(master).derive(static_cast<std::uint64_t>(rep));
}

std::uint64_t truth_seed(std::uint64_t master) { return CounterRng(master).derive(0xffffffffffffffffULL); }

nlohmann::json run_benchmark(const BenchmarkConfig& config, unsigned jobs) {
    const ScmSpec spec = builtin_scenario(config.scenario);
    std::vector<std::string> treatments, outcomes;
    for (int i = 0; i < spec.treatment_count(); ++i) treatments.push_back(spec.treatment_name(i));
    for (int j = 0; j < spec.outcome_count(); ++j) outcomes.push_back(spec.outcome_name(j));
    const BipartiteGraph truth_graph = BipartiteGraph::from_adjacency(spec.adjacency());

    std::vector<Target> targets;
    std::vector<std::optional<ProxyAssignment>> oracle;
    std::vector<EffectCurve> truths;
    for (const auto& text : config.targets) {
        const Target t = parse_target(text, treatments, outcomes);
        targets.push_back(t);
        auto fixed = tabulated_proxies(t);
        if (!fixed || spec.treatment_count() != 5 || spec.outcome_count() != 4) {
            fixed = select_proxies(truth_graph, t.S, t.j);
        }
        oracle.push_back(fixed);
        std::vector<Eigen::VectorXd> grid;
        for (const auto& p : linear_grid(config.grid_lo, config.grid_hi, config.grid_points)) {
            grid.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(t.S.size()), p(0)));
        }
        truths.push_back(ground_truth_curve(spec, t.j, t.S, grid, config.truth_replicates, truth_seed(config.seed), jobs));
    }

    struct RepResult {
        GraphMetrics metrics;
        std::vector<double> cmae;
        std::vector<std::string> proxies, errors;
    };
    std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
    parallel_for(results.size(), jobs, [&](std::size_t r) {
        RepResult& out = results[r];
        const Dataset data = sample(spec, config.n, replicate_seed(config.seed, static_cast<int>(r))).without_latent();
        std::optional<BipartiteGraph> graph;
        if (config.discovery || config.proxy_mode == "auto") {
            graph = discover_graph(data, config.bins, config.alpha, config.proxy_rule);
            out.metrics = graph_metrics(*graph, truth_graph);
        }
        for (std::size_t k = 0; k < targets.size(); ++k) {
            try {
                const ProxyAssignment proxies =
                    config.proxy_mode == "oracle" ? *oracle[k] : select_proxies(*graph, targets[k].S, targets[k].j);
                KernelConfig kc = default_kernel_config(targets[k].S, targets[k].j);
                if (config.lambda_h) kc.lambda_h = *config.lambda_h;
                if (config.lambda_q) kc.lambda_q = *config.lambda_q;
                const BridgeModel h = fit_outcome_bridge(data, proxies, kc);
                BridgeFn qfn;
                BridgeModel q;
                if (config.use_q) {
                    const auto prop = estimate_propensity(data, proxies.S, proxies.w);
                    q = fit_treatment_bridge(data, proxies, kc, prop);
                    qfn = as_function(q);
                }
                const EffectCurve est = effect_curve(data, proxies, as_function(h), qfn, truths[k].grid);
                out.cmae.push_back(cmae(est, truths[k]));
                out.proxies.push_back(to_string(proxies.z) + "/" + to_string(proxies.w));
                out.errors.emplace_back();
            } catch (const Error& e) {
                out.cmae.push_back(std::nan(""));
                out.proxies.emplace_back();
                out.errors.push_back(std::string(to_string(e.kind())) + ": " + e.what());
            }
        }
    });

    nlohmann::json report;
    report["config"] = to_json(config);
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < config.reps; ++r) seeds.push_back(replicate_seed(config.seed, r));
    report["rep_seeds"] = seeds;
    report["truth_seed"] = truth_seed(config.seed);
    nlohmann::json per_target = nlohmann::json::array();
    for (std::size_t k = 0; k < targets.size(); ++k) {
        std::vector<double> values;
        nlohmann::json proxies = nlohmann::json::array(), errors = nlohmann::json::array();
        int failures = 0;
        for (const auto& r : results) {
            if (std::isfinite(r.cmae[k])) values.push_back(r.cmae[k]);
            else ++failures;
            proxies.push_back(r.proxies[k]);
            errors.push_back(r.errors[k]);
        }
        auto entry = summary(values);
        entry["target"] = target_label(targets[k], treatments, outcomes);
        entry["failures"] = failures;
        entry["proxies"] = proxies;
        entry["errors"] = errors;
        entry["truth"] = truths[k].estimates;
        per_target.push_back(entry);
    }
    report["cmae"] = per_target;
    if (config.discovery || config.proxy_mode == "auto") {
        std::vector<double> f1, precision, recall;
        for (const auto& r : results) {
            f1.push_back(r.metrics.f1);
            precision.push_back(r.metrics.precision);
            recall.push_back(r.metrics.recall);
        }
        report["discovery"] = {{"f1", summary(f1)}, {"precision", summary(precision)}, {"recall", summary(recall)}};
    }
    return report;
}

}  // namespace proxci
