#pragma once

#include "proxci/dataset.hpp"
#include "proxci/proxytest.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace proxci {

// Treatments x outcomes adjacency with per-edge p-values.
struct BipartiteGraph {
    int I = 0, J = 0;
    std::vector<std::vector<bool>> adjacency;
    std::vector<std::vector<double>> p_values;
    double alpha = 0.05;
    // Edges whose test aborted; they are kept as present.
    std::vector<std::pair<int, int>> aborted;
    std::vector<std::string> warnings;

    bool edge(int i, int j) const { return adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
    int edge_count() const;

    static BipartiteGraph from_adjacency(std::vector<std::vector<bool>> adjacency);
    static BipartiteGraph empty(int I, int J);
    static BipartiteGraph complete(int I, int J);
};

enum class ProxyRule {
    SmallestIndex,  // test A_i -> Y_j with the lowest-index other treatment as proxy
    MajorityVote,   // every other treatment; reject when a strict majority rejects
};

std::string to_string(ProxyRule rule);
ProxyRule proxy_rule_from_string(const std::string& s);

// Runs the proxy test on every (i, j). Under the majority rule the stored
// p-value is the order statistic that decides the vote, so adjacency is
// always p < alpha.
BipartiteGraph discover_graph(const Dataset& data, const TestBins& bins = {}, double alpha = 0.05,
                              ProxyRule rule = ProxyRule::SmallestIndex, unsigned jobs = 1);

// UserGiven marks proxies named on the command line, which are not certified.
enum class NullProxyCase { I, II, III, Remark, Violation, UserGiven };

std::string to_string(NullProxyCase c);

// First satisfied branch among:
//   (i)   J >= 3 and some A_S -> Y_{-j} edge is missing
//   (ii)  |A_{-S}| >= 2 and some A_{-S} -> Y_j edge is missing
//   (iii) some A_{-S} -> Y_{-j} edge is missing
NullProxyCase check_null_proxy(const BipartiteGraph& graph, const std::vector<int>& S, int j);

struct ProxyAssignment {
    std::vector<int> S;
    int j = 0;
    VariableId z;  // treatment-inducing proxy
    VariableId w;  // outcome-inducing proxy
    NullProxyCase branch = NullProxyCase::Violation;
};

// Graph-level check of the proxy independencies for a candidate pair:
// Z has no path into Y_j given (A_S, U), and W is independent of (A_S, Z).
bool certifies(const BipartiteGraph& graph, const std::vector<int>& S, int j, const VariableId& z,
               const VariableId& w);

// Deterministic proxy choice. Outcome/treatment pairs (Y_b, A_a) with no
// A_a -> Y_b edge are tried first, ranked by how many parents outside S the
// outcome Y_b shares with Y_j, then by b ascending and a descending.
ProxyAssignment select_proxies(const BipartiteGraph& graph, const std::vector<int>& S, int j);

struct GraphMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

GraphMetrics graph_metrics(const BipartiteGraph& estimated, const BipartiteGraph& truth);

nlohmann::json to_json(const BipartiteGraph& graph);
nlohmann::json to_json(const ProxyAssignment& assignment);
std::string to_dot(const BipartiteGraph& graph);

}  // namespace proxci
