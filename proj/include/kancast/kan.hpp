#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "kancast/bspline.hpp"
#include "kancast/errors.hpp"

namespace kancast {

double silu(double x);
double silu_derivative(double x);

// One trainable edge activation: phi(x) = w_b * silu(x) + w_s * sum_i c_i B_i(x).
// Inactive edges contribute exactly zero everywhere.
struct ActivationEdge {
    double w_b = 1.0;
    double w_s = 1.0;
    std::vector<double> coeffs;
    std::shared_ptr<const BSplineBasis> basis;
    bool active = true;

    double eval(double x) const;
    // phi value, d(phi)/dx, and the basis values at clamp(x) in one pass.
    // The spline path has zero x-derivative outside the grid domain (clamping).
    void eval_full(double x, double& value, double& dvalue_dx,
                   std::vector<double>& basis_values) const;

    int param_count() const { return 2 + static_cast<int>(coeffs.size()); }
};

// Dense grid of edges between n_in inputs and n_out outputs. Edge (q, p)
// lives at index q * n_out + p.
struct KanLayer {
    int n_in = 0;
    int n_out = 0;
    std::vector<ActivationEdge> edges;

    ActivationEdge& edge(int q, int p) { return edges[static_cast<size_t>(q) * n_out + p]; }
    const ActivationEdge& edge(int q, int p) const {
        return edges[static_cast<size_t>(q) * n_out + p];
    }
};

// Per-sample record of node inputs and edge activations, one entry per layer.
struct ForwardTrace {
    // node_inputs[l][s][q]: input to layer l, sample s, coordinate q.
    std::vector<std::vector<std::vector<double>>> node_inputs;
    // activations[l][s][q * n_out + p]: value of edge (q, p) at sample s.
    std::vector<std::vector<std::vector<double>>> activations;
    size_t batch_size() const {
        return node_inputs.empty() ? 0 : node_inputs.front().size();
    }
};

class KanNetwork {
public:
    KanNetwork() = default;

    // Fresh network with the given node counts, e.g. {5, 2, 1}. Spline
    // coefficients ~ N(0, 0.1^2/(G+k)), w_b = w_s = 1/n_in per layer (fan-in
    // averaging), grids on [-1, 1] until calibrated.
    static KanNetwork make(const std::vector<int>& shape, const GridSpec& grid,
                           std::uint64_t seed);

    const std::vector<int>& shape() const { return shape_; }
    std::vector<KanLayer>& layers() { return layers_; }
    const std::vector<KanLayer>& layers() const { return layers_; }
    int input_dim() const { return shape_.empty() ? 0 : shape_.front(); }

    // Re-derives every edge's grid domain from data: first layer from raw
    // feature ranges, deeper layers from node values after one forward pass
    // with current parameters. Ranges are then frozen.
    void calibrate_grids(const std::vector<std::vector<double>>& features);

    double forward(const std::vector<double>& x) const;
    // Batched forward with full trace (inputs as rows).
    std::vector<double> forward_batch(const std::vector<std::vector<double>>& xs,
                                      ForwardTrace& trace) const;

    int param_count() const;            // active edges only
    int param_count_unpruned() const;   // all edges
    std::vector<double> get_params() const;
    void set_params(const std::vector<double>& theta);

    nlohmann::ordered_json to_json() const;
    static KanNetwork from_json(const nlohmann::ordered_json& j);

private:
    std::vector<int> shape_;
    std::vector<KanLayer> layers_;
};

// Sum over active edges of the mean absolute activation (the layer L1 norm).
double layer_l1_norm(const KanLayer& layer, const ForwardTrace& trace, int layer_index);

// Entropy of the normalized edge-norm distribution, with 0*ln(0) = 0.
double layer_entropy(const KanLayer& layer, const ForwardTrace& trace, int layer_index);

// sum_t (V_t - KAN(x_t))^2 + lambda * (mu1 * sum_l L1_l + mu2 * sum_l S_l).
double loss_total(const KanNetwork& net, const std::vector<std::vector<double>>& features,
                  const std::vector<double>& targets, double lambda, double mu1, double mu2);

// Analytic gradient of loss_total over the flattened active parameters
// (layer-major, (q,p) row-major, [w_b, w_s, c_0..] per edge). L1 kinks use
// the sign subgradient with sign(0) = 0.
std::vector<double> gradient(const KanNetwork& net,
                             const std::vector<std::vector<double>>& features,
                             const std::vector<double>& targets, double lambda,
                             double mu1, double mu2);

// Loss and gradient in one pass (shared forward trace).
double loss_and_gradient(const KanNetwork& net,
                         const std::vector<std::vector<double>>& features,
                         const std::vector<double>& targets, double lambda, double mu1,
                         double mu2, std::vector<double>& grad);

} // namespace kancast
