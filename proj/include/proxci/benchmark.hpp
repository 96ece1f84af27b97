#pragma once

#include "proxci/bridge.hpp"
#include "proxci/discovery.hpp"
#include "proxci/scm.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace proxci {

// A_S -> Y_j target in index form.
struct Target {
    std::vector<int> S;
    int j = 0;
};

// Parses "A_3->Y_1" or "A_1,A_3->Y_1" against the given variable names.
Target parse_target(const std::string& text, const std::vector<std::string>& treatments,
                    const std::vector<std::string>& outcomes);
std::string target_label(const Target& t, const std::vector<std::string>& treatments,
                         const std::vector<std::string>& outcomes);

// The (Z, W) pairs used for the tabulated benchmark targets of the
// five-treatment, four-outcome model, or nothing for other targets.
std::optional<ProxyAssignment> tabulated_proxies(const Target& t);

struct BenchmarkConfig {
    std::string scenario = "synthetic-main";
    long n = 600;
    int reps = 20;
    std::uint64_t seed = 1;
    std::vector<std::string> targets{"A_3->Y_1", "A_2->Y_2"};
    std::string proxy_mode = "oracle";  // oracle | auto
    TestBins bins;
    double alpha = 0.05;
    ProxyRule proxy_rule = ProxyRule::SmallestIndex;
    bool discovery = true;
    long truth_replicates = 10000;
    int grid_points = 10;
    double grid_lo = 0.0;
    double grid_hi = 1.0;
    bool use_q = true;
    std::optional<double> lambda_h, lambda_q;
};

nlohmann::json to_json(const BenchmarkConfig& config);
// Reads a flat JSON object; unknown keys are a config error.
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& doc);

// Seeds derived from the master seed: one per replicate, one for the truth.
std::uint64_t replicate_seed(std::uint64_t master, int rep);
std::uint64_t truth_seed(std::uint64_t master);

// Runs every replicate and returns the report. The report embeds the config
// and all derived seeds; rerunning its config yields identical JSON for any
// `jobs`.
nlohmann::json run_benchmark(const BenchmarkConfig& config, unsigned jobs = 1);

}  // namespace proxci
