#pragma once

#include <string>
#include <vector>

#include "kancast/data.hpp"
#include "kancast/kan.hpp"
#include "kancast/train.hpp"

namespace kancast {

// Mean absolute activation per edge over a batch, plus node importances
// (min of the node's max incoming and max outgoing edge importance).
struct ImportanceReport {
    // edge_importance[l][q * n_out + p]; inactive edges score 0.
    std::vector<std::vector<double>> edge_importance;
    // node_importance[l][j]: hidden node j after layer l (l < L-1).
    std::vector<std::vector<double>> node_importance;
};

ImportanceReport score(const KanNetwork& net, const FeatureMatrix& train);

// Deactivates edges whose importance falls below threshold times the max
// edge importance of their layer, then cascades: a node with no active
// incoming or no active outgoing edges loses all incident edges.
KanNetwork prune(const KanNetwork& net, const ImportanceReport& report, double threshold);

enum class CandidateKind { Identity, Negation, Zero };

struct SymbolicCandidate {
    CandidateKind kind;
    std::string name;

    double eval(double u) const;
    double slope() const; // affine slope of f (1, -1 or 0)
};

// {x, 0}: the VIX pipeline set.
std::vector<SymbolicCandidate> vix_candidates();
// {x, -x, 0}: the leverage pipeline set.
std::vector<SymbolicCandidate> leverage_candidates();

// Edge computing c * f(a*x + b) + d.
struct SymbolicEdge {
    CandidateKind kind = CandidateKind::Zero;
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    bool active = false;
    double fit_r2 = 0.0;

    double eval(double x) const;
};

// Best-fit symbolic edge for (x, phi(x)) samples: per candidate, (a, b) is
// searched over a coarse-to-fine grid and (c, d) solved by OLS; the highest
// R^2 wins, ties broken by candidate order.
SymbolicEdge fit_symbolic(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::vector<SymbolicCandidate>& candidates);

struct SymbolicLayer {
    int n_in = 0;
    int n_out = 0;
    std::vector<SymbolicEdge> edges; // (q, p) at q * n_out + p

    SymbolicEdge& edge(int q, int p) { return edges[static_cast<size_t>(q) * n_out + p]; }
    const SymbolicEdge& edge(int q, int p) const {
        return edges[static_cast<size_t>(q) * n_out + p];
    }
};

class SymbolicNetwork {
public:
    std::vector<int> shape;
    std::vector<SymbolicLayer> layers;

    double forward(const std::vector<double>& x) const;
    std::vector<double> forward_batch(const std::vector<std::vector<double>>& xs) const;

    // Affine parameters (a, b, c, d) of active edges, layer-major, (q, p)
    // row-major.
    std::vector<double> get_params() const;
    void set_params(const std::vector<double>& theta);
    double loss_and_gradient(const std::vector<std::vector<double>>& features,
                             const std::vector<double>& targets,
                             std::vector<double>& grad) const;

    nlohmann::ordered_json to_json() const;
};

// Replaces every active edge of a pruned network by its best-fit symbolic
// edge, sampling activations on the training batch.
SymbolicNetwork symbolify(const KanNetwork& net, const FeatureMatrix& train,
                          const std::vector<SymbolicCandidate>& candidates);

struct FinetuneConfig {
    int epochs = 30;
    double learning_rate = 0.0004;
    int iterations_per_epoch = 20;
    int lbfgs_history = 10;
};

// Optimizes all affine parameters jointly against the predictive loss,
// keeping the best-validation snapshot. Never returns a model with higher
// training loss than the input.
SymbolicNetwork finetune_affine(const SymbolicNetwork& snet, const FeatureMatrix& train,
                                const FeatureMatrix& valid,
                                const FinetuneConfig& config = {});

// Linear formula: sum of coefficient * input + intercept.
struct ClosedForm {
    std::vector<std::string> input_names;
    std::vector<double> coefficients;
    double intercept = 0.0;

    double eval(const std::vector<double>& x) const;
    // "V̂_t = 0.8297·V_{t-1} + 0.1477·V_w + 0.4756". significant_digits 17
    // round-trips exactly through parse_closed_form.
    std::string render(const std::string& lhs = "V̂_t",
                       int significant_digits = 17) const;
};

ClosedForm parse_closed_form(const std::string& rendered,
                             const std::vector<std::string>& input_names);

// Composes the all-affine symbolic edges along every path into one
// coefficient per input plus an intercept.
ClosedForm collapse(const SymbolicNetwork& snet);

struct MeanReversionReport {
    double kappa = 0.0;          // coefficient pulling toward the weekly average
    double residual_mean = 0.0;  // mean of V_hat - V_{t-1} - kappa*(V_w - V_{t-1})
    double vix_mean = 0.0;       // training-period mean of the target series
};

// Rewrites the Dataset-3 closed form as a mean-reverting increment toward
// the weekly average.
MeanReversionReport mean_reversion_report(const ClosedForm& cf, const FeatureMatrix& train);

} // namespace kancast
