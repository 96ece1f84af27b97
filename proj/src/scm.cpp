#include "proxci/scm.hpp"

#include "proxci/error.hpp"
#include "proxci/parallel.hpp"
#include "proxci/rng.hpp"

#include <cmath>
#include <numbers>
#include <regex>

namespace proxci {

struct ScmSpec::Compiled {
    struct CFactor {
        int node;
        double scale;
        int power;
    };
    struct CTerm {
        double coefficient;
        LinkFn fn;
        std::vector<CFactor> args;
        double shift;
    };
    struct CNode {
        NodeRole role;
        Noise noise;
        double intercept;
        std::vector<CTerm> terms;
    };
    std::vector<CNode> nodes;
    // Confounders, then treatments, then outcomes; spec order within a role.
    std::vector<int> order;
    std::vector<int> treatments, outcomes;

    double noise(const CounterRng& rng, int k, std::uint64_t index) const {
        const Noise& nz = nodes[static_cast<std::size_t>(k)].noise;
        if (nz.kind == Noise::Kind::Uniform) {
            return nz.a + (nz.b - nz.a) * rng.uniform(static_cast<std::uint64_t>(k), index);
        }
        if (nz.b == 0.0) return nz.a;
        return nz.a + nz.b * rng.normal(static_cast<std::uint64_t>(k), index);
    }

    double structural(int k, const std::vector<double>& values) const {
        const CNode& node = nodes[static_cast<std::size_t>(k)];
        double total = node.intercept;
        for (const auto& term : node.terms) {
            double inner;
            if (term.fn == LinkFn::Product) {
                inner = 1.0;
                for (const auto& f : term.args) {
                    inner *= f.scale * std::pow(values[static_cast<std::size_t>(f.node)], f.power);
                }
            } else {
                inner = 0.0;
                for (const auto& f : term.args) {
                    const double x = values[static_cast<std::size_t>(f.node)];
                    inner += f.scale * (f.power == 1 ? x : std::pow(x, f.power));
                }
            }
            total += term.coefficient * apply_link(term.fn, inner + term.shift);
        }
        return total;
    }
};

double apply_link(LinkFn fn, double x) {
    switch (fn) {
        case LinkFn::Linear: return x;
        case LinkFn::Tanh: return std::tanh(x);
        case LinkFn::Sin: return std::sin(x);
        case LinkFn::Cos: return std::cos(x);
        case LinkFn::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case LinkFn::Square: return x * x;
        case LinkFn::Cube: return x * x * x;
        case LinkFn::ExpNeg: return std::exp(-x);
        case LinkFn::Product: return x;
    }
    return x;
}

std::string to_string(LinkFn fn) {
    switch (fn) {
        case LinkFn::Linear: return "linear";
        case LinkFn::Tanh: return "tanh";
        case LinkFn::Sin: return "sin";
        case LinkFn::Cos: return "cos";
        case LinkFn::Sigmoid: return "sigmoid";
        case LinkFn::Square: return "square";
        case LinkFn::Cube: return "cube";
        case LinkFn::ExpNeg: return "exp-neg";
        case LinkFn::Product: return "product";
    }
    return "linear";
}

LinkFn link_from_string(const std::string& s) {
    for (LinkFn fn : {LinkFn::Linear, LinkFn::Tanh, LinkFn::Sin, LinkFn::Cos, LinkFn::Sigmoid,
                      LinkFn::Square, LinkFn::Cube, LinkFn::ExpNeg, LinkFn::Product}) {
        if (to_string(fn) == s) return fn;
    }
    fail(ErrorKind::InvalidSpec, "unknown link function '" + s + "'");
}

namespace {

const char* role_name(NodeRole role) {
    switch (role) {
        case NodeRole::Confounder: return "confounder";
        case NodeRole::Treatment: return "treatment";
        case NodeRole::Outcome: return "outcome";
    }
    return "?";
}

NodeRole role_from_name(const std::string& s) {
    if (s == "confounder") return NodeRole::Confounder;
    if (s == "treatment") return NodeRole::Treatment;
    if (s == "outcome") return NodeRole::Outcome;
    fail(ErrorKind::InvalidSpec, "unknown node role '" + s + "'");
}

// Roles a node of role `child` may reference.
bool may_reference(NodeRole child, NodeRole parent) {
    switch (child) {
        case NodeRole::Confounder: return false;
        case NodeRole::Treatment: return parent == NodeRole::Confounder;
        case NodeRole::Outcome: return parent != NodeRole::Outcome;
    }
    return false;
}

}  // namespace

ScmSpec::ScmSpec(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
    auto compiled = std::make_shared<Compiled>();
    const auto find = [&](const std::string& name) -> int {
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            if (nodes_[k].name == name) return static_cast<int>(k);
        }
        fail(ErrorKind::InvalidSpec, "term references unknown node '" + name + "'");
    };
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const Node& node = nodes_[k];
        require(!node.name.empty(), ErrorKind::InvalidSpec, "node with empty name");
        for (std::size_t m = 0; m < k; ++m) {
            require(nodes_[m].name != node.name, ErrorKind::InvalidSpec, "duplicate node '" + node.name + "'");
        }
        if (node.noise.kind == Noise::Kind::Uniform) {
            require(node.noise.b > node.noise.a, ErrorKind::InvalidSpec,
                    "uniform noise of '" + node.name + "' needs lo < hi");
        } else {
            require(node.noise.b >= 0.0, ErrorKind::InvalidSpec,
                    "normal noise of '" + node.name + "' needs sd >= 0");
        }
        require(std::isfinite(node.intercept) && std::isfinite(node.noise.a) && std::isfinite(node.noise.b),
                ErrorKind::InvalidSpec, "non-finite parameter in '" + node.name + "'");
        switch (node.role) {
            case NodeRole::Confounder: confounders_.push_back(static_cast<int>(k)); break;
            case NodeRole::Treatment: treatments_.push_back(static_cast<int>(k)); break;
            case NodeRole::Outcome: outcomes_.push_back(static_cast<int>(k)); break;
        }
    }
    for (const Node& node : nodes_) {
        Compiled::CNode cnode{node.role, node.noise, node.intercept, {}};
        for (const Term& term : node.terms) {
            require(std::isfinite(term.coefficient) && std::isfinite(term.shift), ErrorKind::InvalidSpec,
                    "non-finite term parameter in '" + node.name + "'");
            require(!term.args.empty(), ErrorKind::InvalidSpec, "term without arguments in '" + node.name + "'");
            Compiled::CTerm cterm{term.coefficient, term.fn, {}, term.shift};
            for (const Factor& f : term.args) {
                const int parent = find(f.node);
                require(f.node != node.name, ErrorKind::InvalidSpec, "self reference in '" + node.name + "'");
                require(may_reference(node.role, nodes_[static_cast<std::size_t>(parent)].role),
                        ErrorKind::InvalidSpec,
                        std::string(role_name(node.role)) + " '" + node.name + "' may not reference " +
                            role_name(nodes_[static_cast<std::size_t>(parent)].role) + " '" + f.node + "'");
                require(f.power >= 1 && std::isfinite(f.scale), ErrorKind::InvalidSpec,
                        "bad factor in '" + node.name + "'");
                cterm.args.push_back({parent, f.scale, f.power});
            }
            cnode.terms.push_back(std::move(cterm));
        }
        compiled->nodes.push_back(std::move(cnode));
    }
    for (const auto* group : {&confounders_, &treatments_, &outcomes_}) {
        compiled->order.insert(compiled->order.end(), group->begin(), group->end());
    }
    compiled->treatments = treatments_;
    compiled->outcomes = outcomes_;
    compiled_ = std::move(compiled);
}

bool ScmSpec::has_edge(int i, int j) const {
    const auto& outcome = compiled_->nodes.at(static_cast<std::size_t>(outcomes_.at(static_cast<std::size_t>(j))));
    const int node = treatments_.at(static_cast<std::size_t>(i));
    for (const auto& term : outcome.terms) {
        if (term.coefficient == 0.0) continue;
        for (const auto& f : term.args) {
            if (f.node == node && f.scale != 0.0) return true;
        }
    }
    return false;
}

std::vector<std::vector<bool>> ScmSpec::adjacency() const {
    std::vector<std::vector<bool>> adj(treatments_.size(), std::vector<bool>(outcomes_.size(), false));
    for (int i = 0; i < treatment_count(); ++i) {
        for (int j = 0; j < outcome_count(); ++j) adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = has_edge(i, j);
    }
    return adj;
}

Dataset sample(const ScmSpec& spec, long n, std::uint64_t seed) {
    require(n >= 1, ErrorKind::Precondition, "sample size must be at least 1");
    const auto& c = spec.compiled();
    const CounterRng rng(seed);
    const auto p = static_cast<Eigen::Index>(spec.nodes().size());
    Eigen::MatrixXd values(n, p);
    std::vector<double> row(static_cast<std::size_t>(p));
    for (long r = 0; r < n; ++r) {
        for (int k : c.order) {
            row[static_cast<std::size_t>(k)] = c.structural(k, row) + c.noise(rng, k, static_cast<std::uint64_t>(r));
        }
        for (Eigen::Index k = 0; k < p; ++k) values(r, k) = row[static_cast<std::size_t>(k)];
    }
    std::vector<Column> columns;
    for (const auto& node : spec.nodes()) {
        const Role role = node.role == NodeRole::Confounder  ? Role::Latent
                          : node.role == NodeRole::Treatment ? Role::Treatment
                                                             : Role::Outcome;
        columns.push_back({node.name, role});
    }
    return Dataset(std::move(columns), std::move(values));
}

EffectCurve ground_truth_curve(const ScmSpec& spec, int target, const std::vector<int>& treated,
                               const std::vector<Eigen::VectorXd>& grid, long replicates,
                               std::uint64_t seed, unsigned jobs) {
    require(!grid.empty(), ErrorKind::Precondition, "ground truth grid is empty");
    require(replicates >= 1, ErrorKind::Precondition, "replicates must be at least 1");
    require(target >= 0 && target < spec.outcome_count(), ErrorKind::UnknownVariable,
            "target outcome index out of range");
    require(!treated.empty(), ErrorKind::Precondition, "treated set is empty");
    for (int i : treated) {
        require(i >= 0 && i < spec.treatment_count(), ErrorKind::UnknownVariable,
                "treated index out of range");
    }
    for (const auto& point : grid) {
        require(point.size() == static_cast<Eigen::Index>(treated.size()), ErrorKind::DimensionMismatch,
                "grid point dimension does not match treated set");
    }
    const auto& c = spec.compiled();
    const CounterRng rng(seed);
    const int target_node = c.outcomes[static_cast<std::size_t>(target)];
    std::vector<int> forced(c.nodes.size(), -1);
    for (std::size_t t = 0; t < treated.size(); ++t) {
        forced[static_cast<std::size_t>(c.treatments[static_cast<std::size_t>(treated[t])])] = static_cast<int>(t);
    }

    EffectCurve curve;
    curve.grid = grid;
    curve.estimates.assign(grid.size(), 0.0);
    curve.std_errors.assign(grid.size(), 0.0);
    curve.n_used = replicates;
    parallel_for(grid.size(), jobs, [&](std::size_t g) {
        std::vector<double> row(c.nodes.size(), 0.0);
        double mean = 0.0, m2 = 0.0;
        for (long r = 0; r < replicates; ++r) {
            for (int k : c.order) {
                const auto ku = static_cast<std::size_t>(k);
                if (c.nodes[ku].role == NodeRole::Outcome && k != target_node) continue;
                if (forced[ku] >= 0) {
                    row[ku] = grid[g](forced[ku]);
                } else {
                    row[ku] = c.structural(k, row) + c.noise(rng, k, static_cast<std::uint64_t>(r));
                }
            }
            const double y = row[static_cast<std::size_t>(target_node)];
            const double delta = y - mean;
            mean += delta / static_cast<double>(r + 1);
            m2 += delta * (y - mean);
        }
        curve.estimates[g] = mean;
        curve.std_errors[g] =
            replicates > 1 ? std::sqrt(m2 / static_cast<double>(replicates - 1) / static_cast<double>(replicates)) : 0.0;
    });
    return curve;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

namespace {

Factor arg(const std::string& node, double scale = 1.0, int power = 1) { return {node, scale, power}; }

Term term(double coefficient, LinkFn fn, std::vector<Factor> args, double shift = 0.0) {
    return {coefficient, fn, std::move(args), shift};
}

Node confounder(const std::string& name, Noise noise) { return {name, NodeRole::Confounder, noise, 0.0, {}}; }

struct TreatmentLink {
    LinkFn fn;
    double inner_scale;
    double offset;
};

// A_i = 0.5 * (g_i(scale * U) + offset) + N(0, 1)
Node main_treatment(int i, const TreatmentLink& link) {
    return {"A_" + std::to_string(i), NodeRole::Treatment, Noise::normal(0.0, 1.0), 0.5 * link.offset,
            {term(0.5, link.fn, {arg("U", link.inner_scale)})}};
}

std::vector<Node> main_outcomes() {
    const Noise eps = Noise::normal(0.0, 1.0);
    return {
        // Y_1 = 2 sin(1.4 A_1 + 2 A_3^2) + 0.5 (A_2 + A_4^2 + A_5) + A_3^3 + U + e
        {"Y_1", NodeRole::Outcome, eps, 0.0,
         {term(2.0, LinkFn::Sin, {arg("A_1", 1.4), arg("A_3", 2.0, 2)}), term(0.5, LinkFn::Linear, {arg("A_2")}),
          term(0.5, LinkFn::Square, {arg("A_4")}), term(0.5, LinkFn::Linear, {arg("A_5")}),
          term(1.0, LinkFn::Cube, {arg("A_3")}), term(1.0, LinkFn::Linear, {arg("U")})}},
        // Y_2 = -2 cos(1.8 A_2) + 1.5 A_4^2 + U + e
        {"Y_2", NodeRole::Outcome, eps, 0.0,
         {term(-2.0, LinkFn::Cos, {arg("A_2", 1.8)}), term(1.5, LinkFn::Square, {arg("A_4")}),
          term(1.0, LinkFn::Linear, {arg("U")})}},
        // Y_3 = 0.7 A_3^2 + 1.2 A_4 + U + e
        {"Y_3", NodeRole::Outcome, eps, 0.0,
         {term(0.7, LinkFn::Square, {arg("A_3")}), term(1.2, LinkFn::Linear, {arg("A_4")}),
          term(1.0, LinkFn::Linear, {arg("U")})}},
        // Y_4 = 1.6 exp(-A_1 + 1) + 2.3 A_5^2 + U + e
        {"Y_4", NodeRole::Outcome, eps, 0.0,
         {term(1.6, LinkFn::ExpNeg, {arg("A_1")}, -1.0), term(2.3, LinkFn::Square, {arg("A_5")}),
          term(1.0, LinkFn::Linear, {arg("U")})}},
    };
}

ScmSpec assemble_main(const std::vector<TreatmentLink>& links) {
    std::vector<Node> nodes{confounder("U", Noise::uniform(-1.0, 1.0))};
    for (std::size_t i = 0; i < links.size(); ++i) nodes.push_back(main_treatment(static_cast<int>(i + 1), links[i]));
    for (auto& y : main_outcomes()) nodes.push_back(std::move(y));
    return ScmSpec(std::move(nodes));
}

constexpr double kEighthPi = std::numbers::pi / 8.0;

// Offsets of the canonical assignment: A_1 uses U + 5, the others g(U) + 3.
constexpr double kOffsets[5] = {5.0, 3.0, 3.0, 3.0, 3.0};

TreatmentLink random_link(LinkFn fn, double offset) {
    switch (fn) {
        case LinkFn::Sin:
        case LinkFn::Cos: return {fn, kEighthPi, offset};
        case LinkFn::Sigmoid: return {fn, -1.0, offset};
        default: return {fn, 1.0, offset};
    }
}

ScmSpec proxy_strength(double beta, bool nonlinear, bool causal) {
    const Noise eps = Noise::normal(0.0, 1.0);
    std::vector<Node> nodes{confounder("U", Noise::normal(0.0, 1.0))};
    nodes.push_back({"A", NodeRole::Treatment, eps, 0.0, {term(1.0, LinkFn::Linear, {arg("U")})}});
    Node w{"W", NodeRole::Treatment, eps, 0.0, {}};
    if (beta != 0.0) w.terms.push_back(term(beta, nonlinear ? LinkFn::Tanh : LinkFn::Linear, {arg("U")}));
    nodes.push_back(std::move(w));
    Node y{"Y", NodeRole::Outcome, eps, 0.0, {}};
    if (causal) y.terms.push_back(term(1.0, LinkFn::Linear, {arg("A")}));
    y.terms.push_back(term(1.0, LinkFn::Linear, {arg("U")}));
    nodes.push_back(std::move(y));
    return ScmSpec(std::move(nodes));
}

// A = beta U + e, W = beta U + e, Y = [A +] W + beta g(U) + e with g linear or tanh.
ScmSpec confounding_strength(double beta, bool nonlinear, bool causal) {
    const Noise eps = Noise::normal(0.0, 1.0);
    std::vector<Node> nodes{confounder("U", Noise::normal(0.0, 1.0))};
    for (const char* name : {"A", "W"}) {
        Node t{name, NodeRole::Treatment, eps, 0.0, {}};
        if (beta != 0.0) t.terms.push_back(term(beta, LinkFn::Linear, {arg("U")}));
        nodes.push_back(std::move(t));
    }
    Node y{"Y", NodeRole::Outcome, eps, 0.0, {}};
    if (causal) y.terms.push_back(term(1.0, LinkFn::Linear, {arg("A")}));
    y.terms.push_back(term(1.0, LinkFn::Linear, {arg("W")}));
    if (beta != 0.0) y.terms.push_back(term(beta, nonlinear ? LinkFn::Tanh : LinkFn::Linear, {arg("U")}));
    nodes.push_back(std::move(y));
    return ScmSpec(std::move(nodes));
}

// U ~ N(0,1); A = U + N(0, 3^2); W = U + N(0,1); Y = 2A + U + N(0,1); Z = U + N(0,1).
// E[Y | do(a)] = 2a, with closed-form bridges h(a,w) = 2a + w and a Gaussian q.
ScmSpec linear_gaussian() {
    const Noise eps = Noise::normal(0.0, 1.0);
    std::vector<Node> nodes{confounder("U", Noise::normal(0.0, 1.0))};
    nodes.push_back({"A", NodeRole::Treatment, Noise::normal(0.0, 3.0), 0.0, {term(1.0, LinkFn::Linear, {arg("U")})}});
    nodes.push_back({"W", NodeRole::Treatment, eps, 0.0, {term(1.0, LinkFn::Linear, {arg("U")})}});
    nodes.push_back({"Y", NodeRole::Outcome, eps, 0.0,
                     {term(2.0, LinkFn::Linear, {arg("A")}), term(1.0, LinkFn::Linear, {arg("U")})}});
    nodes.push_back({"Z", NodeRole::Outcome, eps, 0.0, {term(1.0, LinkFn::Linear, {arg("U")})}});
    return ScmSpec(std::move(nodes));
}

std::vector<std::string> split_args(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const std::string& scenario) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    require(!s.empty() && end == s.c_str() + s.size() && std::isfinite(v), ErrorKind::UnknownScenario,
            "bad numeric argument '" + s + "' in scenario '" + scenario + "'");
    return v;
}

}  // namespace

ScmSpec synthetic_main() {
    return assemble_main({{LinkFn::Linear, 1.0, 5.0},
                          {LinkFn::Tanh, 1.0, 3.0},
                          {LinkFn::Sin, kEighthPi, 3.0},
                          {LinkFn::Sigmoid, -1.0, 3.0},
                          {LinkFn::Cos, kEighthPi, 3.0}});
}

ScmSpec builtin_scenario(const std::string& name) {
    static const std::regex call(R"(^\s*([a-z-]+)\s*(?:\((.*)\))?\s*$)");
    std::smatch m;
    require(std::regex_match(name, m, call), ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
    const std::string id = m[1];
    const bool has_args = m[2].matched;
    const auto args = has_args ? split_args(m[2]) : std::vector<std::string>{};

    if (id == "synthetic-main" && !has_args) return synthetic_main();
    if (id == "linear-gaussian" && !has_args) return linear_gaussian();
    if (id == "synthetic-main-random" && args.size() == 1) {
        const CounterRng rng(static_cast<std::uint64_t>(parse_number(args[0], name)));
        const LinkFn choices[5] = {LinkFn::Linear, LinkFn::Tanh, LinkFn::Sin, LinkFn::Cos, LinkFn::Sigmoid};
        std::vector<TreatmentLink> links;
        for (int i = 0; i < 5; ++i) links.push_back(random_link(choices[rng.bits(0, static_cast<std::uint64_t>(i)) % 5], kOffsets[i]));
        return assemble_main(links);
    }
    if (id == "proxy-strength" && args.size() == 3) {
        const double beta = parse_number(args[0], name);
        require(args[1] == "linear" || args[1] == "nonlinear", ErrorKind::UnknownScenario,
                "proxy-strength form must be linear|nonlinear");
        require(args[2] == "causal" || args[2] == "independent", ErrorKind::UnknownScenario,
                "proxy-strength case must be causal|independent");
        return proxy_strength(beta, args[1] == "nonlinear", args[2] == "causal");
    }
    if (id == "confounding-strength" && (args.size() == 2 || args.size() == 3)) {
        const double beta = parse_number(args[0], name);
        const std::string form = args.size() == 3 ? args[1] : "linear";
        require(form == "linear" || form == "nonlinear", ErrorKind::UnknownScenario,
                "confounding-strength form must be linear|nonlinear");
        require(args.back() == "causal" || args.back() == "independent", ErrorKind::UnknownScenario,
                "confounding-strength case must be causal|independent");
        return confounding_strength(beta, form == "nonlinear", args.back() == "causal");
    }
    fail(ErrorKind::UnknownScenario, "unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ScmSpec& spec) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& node : spec.nodes()) {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& t : node.terms) {
            nlohmann::json args = nlohmann::json::array();
            for (const auto& f : t.args) args.push_back({{"node", f.node}, {"scale", f.scale}, {"power", f.power}});
            terms.push_back({{"coef", t.coefficient}, {"fn", to_string(t.fn)}, {"args", args}, {"shift", t.shift}});
        }
        nlohmann::json noise = node.noise.kind == Noise::Kind::Uniform
                                   ? nlohmann::json{{"dist", "uniform"}, {"lo", node.noise.a}, {"hi", node.noise.b}}
                                   : nlohmann::json{{"dist", "normal"}, {"mean", node.noise.a}, {"sd", node.noise.b}};
        nodes.push_back({{"name", node.name},
                         {"role", role_name(node.role)},
                         {"noise", noise},
                         {"intercept", node.intercept},
                         {"terms", terms}});
    }
    return {{"nodes", nodes}};
}

ScmSpec scm_from_json(const nlohmann::json& doc) {
    try {
        std::vector<Node> nodes;
        for (const auto& jn : doc.at("nodes")) {
            Node node;
            node.name = jn.at("name").get<std::string>();
            node.role = role_from_name(jn.at("role").get<std::string>());
            const auto& jz = jn.at("noise");
            const std::string dist = jz.at("dist").get<std::string>();
            if (dist == "uniform") {
                node.noise = Noise::uniform(jz.at("lo").get<double>(), jz.at("hi").get<double>());
            } else if (dist == "normal") {
                node.noise = Noise::normal(jz.value("mean", 0.0), jz.value("sd", 1.0));
            } else {
                fail(ErrorKind::InvalidSpec, "unknown noise distribution '" + dist + "'");
            }
            node.intercept = jn.value("intercept", 0.0);
            for (const auto& jt : jn.value("terms", nlohmann::json::array())) {
                Term t;
                t.coefficient = jt.value("coef", 1.0);
                t.fn = link_from_string(jt.value("fn", std::string("linear")));
                t.shift = jt.value("shift", 0.0);
                for (const auto& ja : jt.at("args")) {
                    t.args.push_back({ja.at("node").get<std::string>(), ja.value("scale", 1.0), ja.value("power", 1)});
                }
                node.terms.push_back(std::move(t));
            }
            nodes.push_back(std::move(node));
        }
        return ScmSpec(std::move(nodes));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::InvalidSpec, std::string("malformed spec JSON: ") + e.what());
    }
}

}  // namespace proxci
