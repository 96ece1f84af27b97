#include "proxci/discovery.hpp"

#include "proxci/error.hpp"
#include "proxci/parallel.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace proxci {

int BipartiteGraph::edge_count() const {
    int count = 0;
    for (const auto& row : adjacency) count += static_cast<int>(std::count(row.begin(), row.end(), true));
    return count;
}

BipartiteGraph BipartiteGraph::from_adjacency(std::vector<std::vector<bool>> adjacency) {
    BipartiteGraph g;
    g.I = static_cast<int>(adjacency.size());
    g.J = g.I ? static_cast<int>(adjacency.front().size()) : 0;
    for (const auto& row : adjacency) {
        require(static_cast<int>(row.size()) == g.J, ErrorKind::DimensionMismatch, "ragged adjacency matrix");
    }
    g.p_values.assign(static_cast<std::size_t>(g.I), std::vector<double>(static_cast<std::size_t>(g.J), 1.0));
    for (int i = 0; i < g.I; ++i) {
        for (int j = 0; j < g.J; ++j) {
            if (adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) {
                g.p_values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.0;
            }
        }
    }
    g.adjacency = std::move(adjacency);
    return g;
}

BipartiteGraph BipartiteGraph::empty(int I, int J) {
    return from_adjacency(std::vector<std::vector<bool>>(static_cast<std::size_t>(I),
                                                         std::vector<bool>(static_cast<std::size_t>(J), false)));
}

BipartiteGraph BipartiteGraph::complete(int I, int J) {
    return from_adjacency(std::vector<std::vector<bool>>(static_cast<std::size_t>(I),
                                                         std::vector<bool>(static_cast<std::size_t>(J), true)));
}

std::string to_string(ProxyRule rule) {
    return rule == ProxyRule::SmallestIndex ? "smallest-index" : "majority-vote";
}

ProxyRule proxy_rule_from_string(const std::string& s) {
    if (s == "smallest-index") return ProxyRule::SmallestIndex;
    if (s == "majority-vote") return ProxyRule::MajorityVote;
    fail(ErrorKind::Config, "unknown proxy rule '" + s + "' (expected smallest-index|majority-vote)");
}

BipartiteGraph discover_graph(const Dataset& data, const TestBins& bins, double alpha, ProxyRule rule,
                              unsigned jobs) {
    const int I = data.treatment_count();
    const int J = data.outcome_count();
    require(I >= 2, ErrorKind::Precondition, "discovery needs at least two treatments");
    require(J >= 1, ErrorKind::Precondition, "discovery needs at least one outcome");

    struct Job {
        int i, j, proxy;
    };
    std::vector<Job> work;
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
            for (int k = 0; k < I; ++k) {
                if (k == i) continue;
                work.push_back({i, j, k});
                if (rule == ProxyRule::SmallestIndex) break;
            }
        }
    }
    std::vector<double> p(work.size(), 0.0);
    std::vector<std::string> errors(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t k) {
        try {
            p[k] = test_edge(data, work[k].i, work[k].j, work[k].proxy, bins, alpha).p_value;
        } catch (const Error& e) {
            errors[k] = std::string(to_string(e.kind())) + ": " + e.what();
        }
    });

    BipartiteGraph g = BipartiteGraph::empty(I, J);
    g.alpha = alpha;
    std::size_t k = 0;
    for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
            std::vector<double> votes;
            bool aborted = false;
            const std::size_t per_edge = rule == ProxyRule::SmallestIndex ? 1 : static_cast<std::size_t>(I - 1);
            for (std::size_t v = 0; v < per_edge; ++v, ++k) {
                if (!errors[k].empty()) {
                    aborted = true;
                    g.warnings.push_back("test " + to_string(VariableId::treatment(i)) + " -> " +
                                         to_string(VariableId::outcome(j)) + " with proxy " +
                                         to_string(VariableId::treatment(work[k].proxy)) + " aborted (" +
                                         errors[k] + "); edge kept");
                }
                votes.push_back(p[k]);
            }
            double decisive = 0.0;
            if (!aborted) {
                // A strict majority rejects iff the (floor(c/2)+1)-th smallest p is below alpha.
                std::sort(votes.begin(), votes.end());
                decisive = votes[votes.size() / 2];
            } else {
                g.aborted.emplace_back(i, j);
            }
            g.p_values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = decisive;
            g.adjacency[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = aborted || decisive < alpha;
        }
    }
    return g;
}

std::string to_string(NullProxyCase c) {
    switch (c) {
        case NullProxyCase::I: return "i";
        case NullProxyCase::II: return "ii";
        case NullProxyCase::III: return "iii";
        case NullProxyCase::Remark: return "remark";
        case NullProxyCase::Violation: return "violation";
        case NullProxyCase::UserGiven: return "user";
    }
    return "violation";
}

namespace {

void check_target(const BipartiteGraph& g, const std::vector<int>& S, int j) {
    require(!S.empty(), ErrorKind::Precondition, "treated set is empty");
    require(j >= 0 && j < g.J, ErrorKind::UnknownVariable, "outcome index out of range");
    for (std::size_t a = 0; a < S.size(); ++a) {
        require(S[a] >= 0 && S[a] < g.I, ErrorKind::UnknownVariable, "treatment index out of range");
        for (std::size_t b = 0; b < a; ++b) {
            require(S[a] != S[b], ErrorKind::Precondition, "treated set has duplicates");
        }
    }
}

bool in_set(const std::vector<int>& S, int i) { return std::find(S.begin(), S.end(), i) != S.end(); }

std::vector<int> complement(const std::vector<int>& S, int count) {
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        if (!in_set(S, i)) out.push_back(i);
    }
    return out;
}

}  // namespace

NullProxyCase check_null_proxy(const BipartiteGraph& g, const std::vector<int>& S, int j) {
    check_target(g, S, j);
    const auto others = complement(S, g.I);
    if (g.J >= 3) {
        for (int s : S) {
            for (int b = 0; b < g.J; ++b) {
                if (b != j && !g.edge(s, b)) return NullProxyCase::I;
            }
        }
    }
    if (others.size() >= 2) {
        for (int a : others) {
            if (!g.edge(a, j)) return NullProxyCase::II;
        }
    }
    for (int a : others) {
        for (int b = 0; b < g.J; ++b) {
            if (b != j && !g.edge(a, b)) return NullProxyCase::III;
        }
    }
    return NullProxyCase::Violation;
}

bool certifies(const BipartiteGraph& g, const std::vector<int>& S, int j, const VariableId& z,
               const VariableId& w) {
    if (z == w) return false;
    for (const auto& v : {z, w}) {
        if (v.is_treatment() && (v.index < 0 || v.index >= g.I || in_set(S, v.index))) return false;
        if (v.is_outcome() && (v.index < 0 || v.index >= g.J || v.index == j)) return false;
    }
    // Z must not act on Y_j.
    if (z.is_treatment() && g.edge(z.index, j)) return false;
    if (w.is_treatment()) {
        if (z.is_outcome() && g.edge(w.index, z.index)) return false;
    } else {
        // W is an outcome: nothing in A_S (or a treatment Z) may act on it.
        for (int s : S) {
            if (g.edge(s, w.index)) return false;
        }
        if (z.is_treatment() && g.edge(z.index, w.index)) return false;
    }
    return true;
}

ProxyAssignment select_proxies(const BipartiteGraph& g, const std::vector<int>& S, int j) {
    check_target(g, S, j);
    ProxyAssignment out;
    out.S = S;
    out.j = j;
    const auto others = complement(S, g.I);
    const auto accept = [&](VariableId z, VariableId w, NullProxyCase c) {
        if (!certifies(g, S, j, z, w)) return false;
        out.z = z;
        out.w = w;
        out.branch = c;
        return true;
    };

    // (iii): rank (Y_b, A_a) pairs without an A_a -> Y_b edge.
    std::vector<std::tuple<int, int, int>> ranked;  // (shared parents, b, -a)
    for (int b = 0; b < g.J; ++b) {
        if (b == j) continue;
        int shared = 0;
        for (int a : others) shared += g.edge(a, b) && g.edge(a, j);
        for (int a : others) {
            if (!g.edge(a, b)) ranked.emplace_back(shared, b, -a);
        }
    }
    std::sort(ranked.begin(), ranked.end());
    for (const auto& [shared, b, neg_a] : ranked) {
        if (accept(VariableId::outcome(b), VariableId::treatment(-neg_a), NullProxyCase::III)) return out;
    }

    // (i): an outcome outside j that A_S does not reach serves as W.
    if (g.J >= 3) {
        for (int c = 0; c < g.J; ++c) {
            if (c == j) continue;
            for (int b = 0; b < g.J; ++b) {
                if (b == j || b == c) continue;
                if (accept(VariableId::outcome(b), VariableId::outcome(c), NullProxyCase::I)) return out;
            }
        }
    }

    // (ii): a treatment outside S that does not reach Y_j serves as Z.
    if (others.size() >= 2) {
        for (int a : others) {
            for (int c : others) {
                if (c == a) continue;
                if (accept(VariableId::treatment(a), VariableId::treatment(c), NullProxyCase::II)) return out;
            }
        }
    }

    std::vector<VariableId> pool;
    for (int a : others) pool.push_back(VariableId::treatment(a));
    for (int b = 0; b < g.J; ++b) {
        if (b != j) pool.push_back(VariableId::outcome(b));
    }
    for (const auto& z : pool) {
        for (const auto& w : pool) {
            if (accept(z, w, NullProxyCase::Remark)) return out;
        }
    }
    fail(ErrorKind::AssumptionViolation, "no admissible proxy pair for the requested target");
}

GraphMetrics graph_metrics(const BipartiteGraph& estimated, const BipartiteGraph& truth) {
    require(estimated.I == truth.I && estimated.J == truth.J, ErrorKind::DimensionMismatch,
            "graphs have different dimensions");
    int tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < truth.I; ++i) {
        for (int j = 0; j < truth.J; ++j) {
            const bool e = estimated.edge(i, j), t = truth.edge(i, j);
            tp += e && t;
            fp += e && !t;
            fn += !e && t;
        }
    }
    GraphMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

nlohmann::json to_json(const BipartiteGraph& g) {
    nlohmann::json aborted = nlohmann::json::array();
    for (const auto& [i, j] : g.aborted) aborted.push_back({i, j});
    return {{"I", g.I},       {"J", g.J},         {"alpha", g.alpha},      {"adjacency", g.adjacency},
            {"p_values", g.p_values}, {"aborted", aborted}, {"warnings", g.warnings}};
}

nlohmann::json to_json(const ProxyAssignment& a) {
    std::vector<std::string> treated;
    for (int s : a.S) treated.push_back(to_string(VariableId::treatment(s)));
    return {{"S", treated},
            {"j", to_string(VariableId::outcome(a.j))},
            {"z", to_string(a.z)},
            {"w", to_string(a.w)},
            {"case", to_string(a.branch)}};
}

std::string to_dot(const BipartiteGraph& g) {
    std::ostringstream out;
    out << "digraph causal {\n  rankdir=LR;\n";
    for (int i = 0; i < g.I; ++i) out << "  A_" << i + 1 << " [shape=box];\n";
    for (int j = 0; j < g.J; ++j) out << "  Y_" << j + 1 << " [shape=ellipse];\n";
    for (int i = 0; i < g.I; ++i) {
        for (int j = 0; j < g.J; ++j) {
            if (!g.edge(i, j)) continue;
            out << "  A_" << i + 1 << " -> Y_" << j + 1 << " [label=\""
                << format_double(g.p_values[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace proxci
