#pragma once

#include "proxci/curve.hpp"
#include "proxci/dataset.hpp"

#include "json.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace proxci {

enum class NodeRole { Confounder, Treatment, Outcome };

struct Noise {
    enum class Kind { Uniform, Normal } kind = Kind::Normal;
    // Uniform: [a, b). Normal: mean a, standard deviation b.
    double a = 0.0;
    double b = 1.0;

    static Noise uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
    static Noise normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
};

enum class LinkFn { Linear, Tanh, Sin, Cos, Sigmoid, Square, Cube, ExpNeg, Product };

// One argument of a term's inner expression: scale * node^power.
struct Factor {
    std::string node;
    double scale = 1.0;
    int power = 1;
};

// coefficient * f(inner), with inner = sum of factors + shift (or, for
// LinkFn::Product, the product of factors + shift).
struct Term {
    double coefficient = 1.0;
    LinkFn fn = LinkFn::Linear;
    std::vector<Factor> args;
    double shift = 0.0;
};

struct Node {
    std::string name;
    NodeRole role = NodeRole::Outcome;
    Noise noise;
    double intercept = 0.0;
    std::vector<Term> terms;
};

// Declarative structural causal model over confounders U, treatments A and
// outcomes Y. Construction checks the U -> A -> Y layering (no A->A, Y->Y,
// A->U, ... references), which also rules out cycles.
class ScmSpec {
public:
    explicit ScmSpec(std::vector<Node> nodes);

    const std::vector<Node>& nodes() const { return nodes_; }
    int treatment_count() const { return static_cast<int>(treatments_.size()); }
    int outcome_count() const { return static_cast<int>(outcomes_.size()); }
    const std::string& treatment_name(int i) const { return nodes_[treatments_.at(i)].name; }
    const std::string& outcome_name(int j) const { return nodes_[outcomes_.at(j)].name; }

    // True when some term of outcome j references treatment i.
    bool has_edge(int i, int j) const;
    // I x J adjacency implied by the link terms.
    std::vector<std::vector<bool>> adjacency() const;

    // Evaluation helpers shared by sampling and Monte Carlo intervention.
    struct Compiled;
    const Compiled& compiled() const { return *compiled_; }

private:
    std::vector<Node> nodes_;
    std::vector<int> confounders_, treatments_, outcomes_;
    std::shared_ptr<const Compiled> compiled_;
};

double apply_link(LinkFn fn, double inner);
std::string to_string(LinkFn fn);
LinkFn link_from_string(const std::string& s);

// Scenario ids:
//   synthetic-main
//   synthetic-main-random(<seed>)           random g_i from {linear,tanh,sin,cos,sigmoid}
//   proxy-strength(<beta>,linear|nonlinear,causal|independent)
//   confounding-strength(<beta>,[linear|nonlinear,]causal|independent)
//   linear-gaussian
ScmSpec builtin_scenario(const std::string& name);

// Canonical five-treatment, four-outcome benchmark model.
ScmSpec synthetic_main();

// n i.i.d. draws. Confounders are returned as Latent columns. Each noise
// variate is drawn from CounterRng(seed) at (stream = node position,
// index = row), so equal (spec, n, seed) give bit-identical datasets.
Dataset sample(const ScmSpec& spec, long n, std::uint64_t seed);

// Monte Carlo E[Y_target | do(A_treated = a)] for every grid point. Replicate
// r reuses the same exogenous draws at every grid point (common random
// numbers), so curves are smooth in a and replicates parallelize freely.
EffectCurve ground_truth_curve(const ScmSpec& spec, int target, const std::vector<int>& treated,
                               const std::vector<Eigen::VectorXd>& grid, long replicates,
                               std::uint64_t seed, unsigned jobs = 1);

nlohmann::json to_json(const ScmSpec& spec);
ScmSpec scm_from_json(const nlohmann::json& doc);

}  // namespace proxci
