#include "kancast/kan.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kancast {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_derivative(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

double ActivationEdge::eval(double x) const {
    if (!active) return 0.0;
    const auto b = basis->eval(x);
    double spline = 0.0;
    for (size_t i = 0; i < b.size(); ++i) spline += coeffs[i] * b[i];
    return w_b * silu(x) + w_s * spline;
}

void ActivationEdge::eval_full(double x, double& value, double& dvalue_dx,
                               std::vector<double>& basis_values) const {
    const auto& spec = basis->spec();
    double spline = 0.0;
    double dspline = 0.0;
    if (spec.order >= 1) {
        std::vector<double> derivs;
        basis->eval_with_derivative(x, basis_values, derivs);
        for (size_t i = 0; i < basis_values.size(); ++i) {
            spline += coeffs[i] * basis_values[i];
            dspline += coeffs[i] * derivs[i];
        }
        // Clamping makes the spline path flat outside the grid domain.
        if (x < spec.lower || x > spec.upper) dspline = 0.0;
    } else {
        basis_values = basis->eval(x);
        for (size_t i = 0; i < basis_values.size(); ++i)
            spline += coeffs[i] * basis_values[i];
    }
    value = w_b * silu(x) + w_s * spline;
    dvalue_dx = w_b * silu_derivative(x) + w_s * dspline;
}

KanNetwork KanNetwork::make(const std::vector<int>& shape, const GridSpec& grid,
                            std::uint64_t seed) {
    if (shape.size() < 2)
        throw ShapeMismatch("network shape needs at least input and output sizes");
    for (int n : shape)
        if (n < 1) throw ShapeMismatch("shape entries must be positive");

    KanNetwork net;
    net.shape_ = shape;
    std::mt19937_64 rng(seed);
    const int nb = grid.basis_count();
    std::normal_distribution<double> coeff_dist(0.0, 0.1 / std::sqrt(static_cast<double>(nb)));

    GridSpec g = grid;
    g.lower = -1.0;
    g.upper = 1.0;
    auto default_basis = std::make_shared<const BSplineBasis>(g);

    for (size_t l = 0; l + 1 < shape.size(); ++l) {
        KanLayer layer;
        layer.n_in = shape[l];
        layer.n_out = shape[l + 1];
        layer.edges.resize(static_cast<size_t>(layer.n_in) * layer.n_out);
        // Fan-in averaging keeps each node's initial output on the same scale
        // as its inputs; a unit-weight start sums n_in near-identity edges and
        // can park the optimizer at a poor stationary point far above the
        // target scale.
        const double fan = 1.0 / static_cast<double>(layer.n_in);
        for (auto& e : layer.edges) {
            e.w_b = fan;
            e.w_s = fan;
            e.basis = default_basis;
            e.coeffs.resize(static_cast<size_t>(nb));
            for (auto& c : e.coeffs) c = coeff_dist(rng);
            e.active = true;
        }
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

void KanNetwork::calibrate_grids(const std::vector<std::vector<double>>& features) {
    if (features.empty()) throw EmptyBatch("calibrate_grids needs at least one sample");
    const size_t n = features.size();

    // Current layer inputs; starts as the raw features.
    std::vector<std::vector<double>> inputs = features;

    for (size_t l = 0; l < layers_.size(); ++l) {
        KanLayer& layer = layers_[l];
        for (int q = 0; q < layer.n_in; ++q) {
            double lo = inputs[0][static_cast<size_t>(q)];
            double hi = lo;
            for (size_t s = 1; s < n; ++s) {
                lo = std::min(lo, inputs[s][static_cast<size_t>(q)]);
                hi = std::max(hi, inputs[s][static_cast<size_t>(q)]);
            }
            if (!(lo < hi)) {
                lo -= 0.5;
                hi += 0.5;
            }
            GridSpec spec = layer.edge(q, 0).basis->spec();
            spec.lower = lo;
            spec.upper = hi;
            auto basis = std::make_shared<const BSplineBasis>(spec);
            for (int p = 0; p < layer.n_out; ++p) layer.edge(q, p).basis = basis;
        }
        // Propagate through the freshly calibrated layer.
        std::vector<std::vector<double>> outputs(
            n, std::vector<double>(static_cast<size_t>(layer.n_out), 0.0));
        for (size_t s = 0; s < n; ++s)
            for (int q = 0; q < layer.n_in; ++q)
                for (int p = 0; p < layer.n_out; ++p) {
                    const auto& e = layer.edge(q, p);
                    if (e.active)
                        outputs[s][static_cast<size_t>(p)] +=
                            e.eval(inputs[s][static_cast<size_t>(q)]);
                }
        inputs = std::move(outputs);
    }
}

std::vector<double> KanNetwork::forward_batch(const std::vector<std::vector<double>>& xs,
                                              ForwardTrace& trace) const {
    const size_t n = xs.size();
    trace.node_inputs.assign(layers_.size(), {});
    trace.activations.assign(layers_.size(), {});

    std::vector<std::vector<double>> current = xs;
    for (size_t l = 0; l < layers_.size(); ++l) {
        const KanLayer& layer = layers_[l];
        for (const auto& row : current)
            if (static_cast<int>(row.size()) != layer.n_in)
                throw ShapeMismatch("input length " + std::to_string(row.size()) +
                                    " does not match layer width " +
                                    std::to_string(layer.n_in));
        trace.node_inputs[l] = current;
        trace.activations[l].assign(
            n, std::vector<double>(static_cast<size_t>(layer.n_in) * layer.n_out, 0.0));

        std::vector<std::vector<double>> next(
            n, std::vector<double>(static_cast<size_t>(layer.n_out), 0.0));
        for (size_t s = 0; s < n; ++s)
            for (int q = 0; q < layer.n_in; ++q) {
                const double x = current[s][static_cast<size_t>(q)];
                for (int p = 0; p < layer.n_out; ++p) {
                    const auto& e = layer.edge(q, p);
                    if (!e.active) continue;
                    const double a = e.eval(x);
                    trace.activations[l][s][static_cast<size_t>(q) * layer.n_out + p] = a;
                    next[s][static_cast<size_t>(p)] += a;
                }
            }
        current = std::move(next);
    }

    std::vector<double> preds(n);
    for (size_t s = 0; s < n; ++s) preds[s] = current[s][0];
    return preds;
}

double KanNetwork::forward(const std::vector<double>& x) const {
    ForwardTrace trace;
    return forward_batch({x}, trace)[0];
}

int KanNetwork::param_count() const {
    int n = 0;
    for (const auto& layer : layers_)
        for (const auto& e : layer.edges)
            if (e.active) n += e.param_count();
    return n;
}

int KanNetwork::param_count_unpruned() const {
    int n = 0;
    for (const auto& layer : layers_)
        for (const auto& e : layer.edges) n += e.param_count();
    return n;
}

std::vector<double> KanNetwork::get_params() const {
    std::vector<double> theta;
    theta.reserve(static_cast<size_t>(param_count()));
    for (const auto& layer : layers_)
        for (const auto& e : layer.edges) {
            if (!e.active) continue;
            theta.push_back(e.w_b);
            theta.push_back(e.w_s);
            theta.insert(theta.end(), e.coeffs.begin(), e.coeffs.end());
        }
    return theta;
}

void KanNetwork::set_params(const std::vector<double>& theta) {
    size_t i = 0;
    for (auto& layer : layers_)
        for (auto& e : layer.edges) {
            if (!e.active) continue;
            if (i + 2 + e.coeffs.size() > theta.size())
                throw ShapeMismatch("parameter vector too short");
            e.w_b = theta[i++];
            e.w_s = theta[i++];
            for (auto& c : e.coeffs) c = theta[i++];
        }
    if (i != theta.size()) throw ShapeMismatch("parameter vector too long");
}

nlohmann::ordered_json KanNetwork::to_json() const {
    nlohmann::ordered_json j;
    j["shape"] = shape_;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : layers_) {
        nlohmann::ordered_json jl;
        jl["n_in"] = layer.n_in;
        jl["n_out"] = layer.n_out;
        jl["edges"] = nlohmann::ordered_json::array();
        for (const auto& e : layer.edges) {
            const auto& spec = e.basis->spec();
            nlohmann::ordered_json je;
            je["w_b"] = e.w_b;
            je["w_s"] = e.w_s;
            je["coeffs"] = e.coeffs;
            je["grid"] = {{"lower", spec.lower},
                          {"upper", spec.upper},
                          {"grid_size", spec.grid_size},
                          {"order", spec.order}};
            je["active"] = e.active;
            jl["edges"].push_back(std::move(je));
        }
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

KanNetwork KanNetwork::from_json(const nlohmann::ordered_json& j) {
    KanNetwork net;
    net.shape_ = j.at("shape").get<std::vector<int>>();
    for (const auto& jl : j.at("layers")) {
        KanLayer layer;
        layer.n_in = jl.at("n_in").get<int>();
        layer.n_out = jl.at("n_out").get<int>();
        for (const auto& je : jl.at("edges")) {
            ActivationEdge e;
            e.w_b = je.at("w_b").get<double>();
            e.w_s = je.at("w_s").get<double>();
            e.coeffs = je.at("coeffs").get<std::vector<double>>();
            const auto& jg = je.at("grid");
            GridSpec spec{jg.at("lower").get<double>(), jg.at("upper").get<double>(),
                          jg.at("grid_size").get<int>(), jg.at("order").get<int>()};
            e.basis = std::make_shared<const BSplineBasis>(spec);
            e.active = je.at("active").get<bool>();
            layer.edges.push_back(std::move(e));
        }
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

double layer_l1_norm(const KanLayer& layer, const ForwardTrace& trace, int layer_index) {
    const auto& acts = trace.activations.at(static_cast<size_t>(layer_index));
    const size_t n = acts.size();
    if (n == 0) throw EmptyBatch("layer_l1_norm needs at least one sample");
    double total = 0.0;
    for (int q = 0; q < layer.n_in; ++q)
        for (int p = 0; p < layer.n_out; ++p) {
            if (!layer.edge(q, p).active) continue;
            const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
            double sum = 0.0;
            for (size_t s = 0; s < n; ++s) sum += std::abs(acts[s][idx]);
            total += sum / static_cast<double>(n);
        }
    return total;
}

double layer_entropy(const KanLayer& layer, const ForwardTrace& trace, int layer_index) {
    const auto& acts = trace.activations.at(static_cast<size_t>(layer_index));
    const size_t n = acts.size();
    if (n == 0) throw EmptyBatch("layer_entropy needs at least one sample");
    std::vector<double> norms;
    double total = 0.0;
    for (int q = 0; q < layer.n_in; ++q)
        for (int p = 0; p < layer.n_out; ++p) {
            if (!layer.edge(q, p).active) continue;
            const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
            double sum = 0.0;
            for (size_t s = 0; s < n; ++s) sum += std::abs(acts[s][idx]);
            norms.push_back(sum / static_cast<double>(n));
            total += norms.back();
        }
    if (total <= 0.0) throw ZeroNorm("all edge norms are zero");
    double entropy = 0.0;
    for (double v : norms) {
        if (v <= 0.0) continue; // 0 * ln(0) = 0
        const double frac = v / total;
        entropy -= frac * std::log(frac);
    }
    return entropy;
}

namespace {

struct LayerNorms {
    std::vector<double> edge_norms; // dense over (q, p), inactive entries 0
    double total = 0.0;
    double entropy = 0.0;
};

LayerNorms compute_norms(const KanLayer& layer,
                         const std::vector<std::vector<double>>& acts) {
    LayerNorms out;
    const size_t n = acts.size();
    out.edge_norms.assign(static_cast<size_t>(layer.n_in) * layer.n_out, 0.0);
    for (int q = 0; q < layer.n_in; ++q)
        for (int p = 0; p < layer.n_out; ++p) {
            if (!layer.edge(q, p).active) continue;
            const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
            double sum = 0.0;
            for (size_t s = 0; s < n; ++s) sum += std::abs(acts[s][idx]);
            out.edge_norms[idx] = sum / static_cast<double>(n);
            out.total += out.edge_norms[idx];
        }
    if (out.total > 0.0)
        for (int q = 0; q < layer.n_in; ++q)
            for (int p = 0; p < layer.n_out; ++p) {
                if (!layer.edge(q, p).active) continue;
                const double v = out.edge_norms[static_cast<size_t>(q) * layer.n_out + p];
                if (v > 0.0) {
                    const double frac = v / out.total;
                    out.entropy -= frac * std::log(frac);
                }
            }
    return out;
}

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

} // namespace

double loss_total(const KanNetwork& net, const std::vector<std::vector<double>>& features,
                  const std::vector<double>& targets, double lambda, double mu1,
                  double mu2) {
    if (features.empty()) throw EmptyBatch("loss_total needs at least one sample");
    if (features.size() != targets.size())
        throw ShapeMismatch("features and targets must align");

    ForwardTrace trace;
    const auto preds = net.forward_batch(features, trace);
    double loss = 0.0;
    for (size_t s = 0; s < preds.size(); ++s) {
        const double r = targets[s] - preds[s];
        loss += r * r;
    }
    if (lambda != 0.0) {
        for (size_t l = 0; l < net.layers().size(); ++l) {
            const auto norms = compute_norms(net.layers()[l], trace.activations[l]);
            loss += lambda * (mu1 * norms.total + mu2 * norms.entropy);
        }
    }
    return loss;
}

double loss_and_gradient(const KanNetwork& net,
                         const std::vector<std::vector<double>>& features,
                         const std::vector<double>& targets, double lambda, double mu1,
                         double mu2, std::vector<double>& grad) {
    if (features.empty()) throw EmptyBatch("gradient needs at least one sample");
    if (features.size() != targets.size())
        throw ShapeMismatch("features and targets must align");

    ForwardTrace trace;
    const auto preds = net.forward_batch(features, trace);
    const size_t n = features.size();
    const auto& layers = net.layers();

    double loss = 0.0;
    for (size_t s = 0; s < n; ++s) {
        const double r = targets[s] - preds[s];
        loss += r * r;
    }

    // Per-layer norms and the d(reg)/d(edge norm) coefficients.
    std::vector<LayerNorms> norms(layers.size());
    std::vector<std::vector<double>> reg_coeff(layers.size());
    if (lambda != 0.0) {
        for (size_t l = 0; l < layers.size(); ++l) {
            norms[l] = compute_norms(layers[l], trace.activations[l]);
            loss += lambda * (mu1 * norms[l].total + mu2 * norms[l].entropy);
            reg_coeff[l].assign(norms[l].edge_norms.size(), 0.0);
            if (norms[l].total > 0.0) {
                for (size_t idx = 0; idx < norms[l].edge_norms.size(); ++idx) {
                    const double p_e = norms[l].edge_norms[idx];
                    double c = mu1;
                    if (p_e > 0.0) {
                        const double frac = p_e / norms[l].total;
                        c += mu2 * (-std::log(frac) - norms[l].entropy) / norms[l].total;
                    }
                    reg_coeff[l][idx] = lambda * c;
                }
            } else {
                for (auto& c : reg_coeff[l]) c = lambda * mu1;
            }
        }
    }

    // Flat offsets of each active edge's parameter block.
    std::vector<std::vector<int>> offsets(layers.size());
    int cursor = 0;
    for (size_t l = 0; l < layers.size(); ++l) {
        offsets[l].assign(layers[l].edges.size(), -1);
        for (size_t e = 0; e < layers[l].edges.size(); ++e) {
            if (!layers[l].edges[e].active) continue;
            offsets[l][e] = cursor;
            cursor += layers[l].edges[e].param_count();
        }
    }
    grad.assign(static_cast<size_t>(cursor), 0.0);

    // Seed: dL_pred/d(output) = 2 * (pred - target).
    std::vector<std::vector<double>> out_adj(n, std::vector<double>(1, 0.0));
    for (size_t s = 0; s < n; ++s) out_adj[s][0] = 2.0 * (preds[s] - targets[s]);

    std::vector<double> basis_values;
    for (size_t li = layers.size(); li-- > 0;) {
        const KanLayer& layer = layers[li];
        std::vector<std::vector<double>> in_adj(
            n, std::vector<double>(static_cast<size_t>(layer.n_in), 0.0));
        for (size_t s = 0; s < n; ++s)
            for (int q = 0; q < layer.n_in; ++q) {
                const double x = trace.node_inputs[li][s][static_cast<size_t>(q)];
                for (int p = 0; p < layer.n_out; ++p) {
                    const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
                    const ActivationEdge& e = layer.edges[idx];
                    if (!e.active) continue;
                    double adj = out_adj[s][static_cast<size_t>(p)];
                    if (lambda != 0.0) {
                        const double a = trace.activations[li][s][idx];
                        adj += reg_coeff[li][idx] * sgn(a) / static_cast<double>(n);
                    }
                    if (adj == 0.0) continue;
                    double value, dvalue_dx;
                    e.eval_full(x, value, dvalue_dx, basis_values);
                    double spline = 0.0;
                    for (size_t i = 0; i < basis_values.size(); ++i)
                        spline += e.coeffs[i] * basis_values[i];
                    const int off = offsets[li][idx];
                    grad[static_cast<size_t>(off)] += adj * silu(x);
                    grad[static_cast<size_t>(off) + 1] += adj * spline;
                    for (size_t i = 0; i < basis_values.size(); ++i)
                        grad[static_cast<size_t>(off) + 2 + i] += adj * e.w_s * basis_values[i];
                    in_adj[s][static_cast<size_t>(q)] += adj * dvalue_dx;
                }
            }
        out_adj = std::move(in_adj);
    }
    return loss;
}

std::vector<double> gradient(const KanNetwork& net,
                             const std::vector<std::vector<double>>& features,
                             const std::vector<double>& targets, double lambda, double mu1,
                             double mu2) {
    std::vector<double> grad;
    loss_and_gradient(net, features, targets, lambda, mu1, mu2, grad);
    return grad;
}

} // namespace kancast
