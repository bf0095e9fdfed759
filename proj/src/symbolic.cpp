#include "kancast/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "kancast/lbfgs.hpp"

namespace kancast {

ImportanceReport score(const KanNetwork& net, const FeatureMatrix& train) {
    if (train.size() == 0) throw EmptyBatch("score needs a nonempty training batch");

    ForwardTrace trace;
    net.forward_batch(train.rows, trace);
    const size_t n = train.size();

    ImportanceReport report;
    const auto& layers = net.layers();
    report.edge_importance.resize(layers.size());
    for (size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        auto& imp = report.edge_importance[l];
        imp.assign(static_cast<size_t>(layer.n_in) * layer.n_out, 0.0);
        for (int q = 0; q < layer.n_in; ++q)
            for (int p = 0; p < layer.n_out; ++p) {
                const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
                if (!layer.edges[idx].active) continue;
                double sum = 0.0;
                for (size_t s = 0; s < n; ++s) sum += std::abs(trace.activations[l][s][idx]);
                imp[idx] = sum / static_cast<double>(n);
            }
    }

    // Hidden node j between layer l and l+1.
    report.node_importance.resize(layers.size() > 0 ? layers.size() - 1 : 0);
    for (size_t l = 0; l + 1 < layers.size(); ++l) {
        const auto& in_layer = layers[l];
        const auto& out_layer = layers[l + 1];
        auto& nodes = report.node_importance[l];
        nodes.assign(static_cast<size_t>(in_layer.n_out), 0.0);
        for (int j = 0; j < in_layer.n_out; ++j) {
            double max_in = 0.0, max_out = 0.0;
            for (int q = 0; q < in_layer.n_in; ++q)
                max_in = std::max(max_in,
                                  report.edge_importance[l][static_cast<size_t>(q) * in_layer.n_out + j]);
            for (int p = 0; p < out_layer.n_out; ++p)
                max_out = std::max(
                    max_out,
                    report.edge_importance[l + 1][static_cast<size_t>(j) * out_layer.n_out + p]);
            nodes[static_cast<size_t>(j)] = std::min(max_in, max_out);
        }
    }
    return report;
}

KanNetwork prune(const KanNetwork& net, const ImportanceReport& report, double threshold) {
    if (threshold < 0.0) throw ConfigError("pruning threshold must be nonnegative");

    KanNetwork pruned = net;
    auto& layers = pruned.layers();
    for (size_t l = 0; l < layers.size(); ++l) {
        const auto& imp = report.edge_importance.at(l);
        const double layer_max = imp.empty() ? 0.0 : *std::max_element(imp.begin(), imp.end());
        const double cut = threshold * layer_max;
        for (size_t e = 0; e < layers[l].edges.size(); ++e)
            if (layers[l].edges[e].active && imp[e] < cut) layers[l].edges[e].active = false;
    }

    // Cascade: a node with no active incoming edges or no active outgoing
    // edges takes its remaining incident edges down with it.
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t l = 0; l + 1 < layers.size(); ++l) {
            auto& in_layer = layers[l];
            auto& out_layer = layers[l + 1];
            for (int j = 0; j < in_layer.n_out; ++j) {
                bool any_in = false, any_out = false;
                for (int q = 0; q < in_layer.n_in; ++q)
                    any_in = any_in || in_layer.edge(q, j).active;
                for (int p = 0; p < out_layer.n_out; ++p)
                    any_out = any_out || out_layer.edge(j, p).active;
                if (any_in == any_out) continue;
                for (int q = 0; q < in_layer.n_in; ++q)
                    if (in_layer.edge(q, j).active) {
                        in_layer.edge(q, j).active = false;
                        changed = true;
                    }
                for (int p = 0; p < out_layer.n_out; ++p)
                    if (out_layer.edge(j, p).active) {
                        out_layer.edge(j, p).active = false;
                        changed = true;
                    }
            }
        }
    }

    const auto& last = layers.back();
    bool output_connected = false;
    for (const auto& e : last.edges) output_connected = output_connected || e.active;
    if (!output_connected)
        throw AllPruned("pruning disconnected the output node (threshold too high?)");
    return pruned;
}

double SymbolicCandidate::eval(double u) const {
    switch (kind) {
        case CandidateKind::Identity: return u;
        case CandidateKind::Negation: return -u;
        case CandidateKind::Zero: return 0.0;
    }
    return 0.0;
}

double SymbolicCandidate::slope() const {
    switch (kind) {
        case CandidateKind::Identity: return 1.0;
        case CandidateKind::Negation: return -1.0;
        case CandidateKind::Zero: return 0.0;
    }
    return 0.0;
}

std::vector<SymbolicCandidate> vix_candidates() {
    return {{CandidateKind::Identity, "x"}, {CandidateKind::Zero, "0"}};
}

std::vector<SymbolicCandidate> leverage_candidates() {
    return {{CandidateKind::Identity, "x"},
            {CandidateKind::Negation, "-x"},
            {CandidateKind::Zero, "0"}};
}

double SymbolicEdge::eval(double x) const {
    const double u = a * x + b;
    switch (kind) {
        case CandidateKind::Identity: return c * u + d;
        case CandidateKind::Negation: return c * -u + d;
        case CandidateKind::Zero: return d;
    }
    return d;
}

namespace {

struct OlsFit {
    double c = 0.0;
    double d = 0.0;
    double r2 = 0.0;
};

// OLS of y on (1, z) with the zero-variance conventions from the module
// contract: constant target fits with R^2 = 1 when residuals vanish.
OlsFit ols_fit(const std::vector<double>& zs, const std::vector<double>& ys) {
    const size_t n = ys.size();
    double zbar = 0.0, ybar = 0.0;
    for (size_t i = 0; i < n; ++i) {
        zbar += zs[i];
        ybar += ys[i];
    }
    zbar /= static_cast<double>(n);
    ybar /= static_cast<double>(n);

    double szz = 0.0, szy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        szz += (zs[i] - zbar) * (zs[i] - zbar);
        szy += (zs[i] - zbar) * (ys[i] - ybar);
        syy += (ys[i] - ybar) * (ys[i] - ybar);
    }

    OlsFit fit;
    fit.c = szz > 0.0 ? szy / szz : 0.0;
    fit.d = ybar - fit.c * zbar;

    double ss_res = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.c * zs[i] + fit.d);
        ss_res += r * r;
    }
    if (syy > 0.0)
        fit.r2 = 1.0 - ss_res / syy;
    else
        fit.r2 = ss_res <= 1e-20 ? 1.0 : 0.0;
    return fit;
}

} // namespace

SymbolicEdge fit_symbolic(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::vector<SymbolicCandidate>& candidates) {
    if (xs.size() != ys.size()) throw ShapeMismatch("sample vectors must align");
    std::set<double> distinct(xs.begin(), xs.end());
    if (distinct.size() < 3)
        throw DegenerateSamples("fit_symbolic needs at least 3 distinct x values");

    const double x_lo = *distinct.begin();
    const double x_hi = *distinct.rbegin();

    SymbolicEdge best;
    double best_r2 = -std::numeric_limits<double>::infinity();

    std::vector<double> zs(xs.size());
    auto try_cell = [&](const SymbolicCandidate& cand, double a, double b) {
        for (size_t i = 0; i < xs.size(); ++i) zs[i] = cand.eval(a * xs[i] + b);
        const OlsFit fit = ols_fit(zs, ys);
        if (fit.r2 > best_r2 + 1e-12) {
            best_r2 = fit.r2;
            best.kind = cand.kind;
            best.a = a;
            best.b = b;
            best.c = fit.c;
            best.d = fit.d;
            best.fit_r2 = fit.r2;
        }
    };

    constexpr int kGridPoints = 21;
    for (const auto& cand : candidates) {
        if (cand.kind == CandidateKind::Zero) {
            // (a, b) have no effect; canonical a=1, b=0, c=0.
            double ybar = 0.0;
            for (double y : ys) ybar += y;
            ybar /= static_cast<double>(ys.size());
            double ss_res = 0.0, syy = 0.0;
            for (double y : ys) {
                ss_res += (y - ybar) * (y - ybar);
                syy += (y - ybar) * (y - ybar);
            }
            const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
            if (r2 > best_r2 + 1e-12) {
                best_r2 = r2;
                best = SymbolicEdge{cand.kind, 1.0, 0.0, 0.0, ybar, true, r2};
            }
            continue;
        }

        // Coarse pass: 21 log-spaced |a| in [0.1, 10] times both signs,
        // 21 linear b across the sample range; then one 10x refinement
        // around the best cell. For affine candidates any a != 0 is
        // equivalent after OLS; the grid matters for future non-affine
        // candidates.
        double cell_best_r2 = -std::numeric_limits<double>::infinity();
        double cell_a = 1.0, cell_b = 0.0;
        auto scan = [&](double a_lo, double a_hi, double b_lo, double b_hi) {
            for (int sign = 0; sign < 2; ++sign)
                for (int i = 0; i < kGridPoints; ++i) {
                    const double mag =
                        a_lo * std::pow(a_hi / a_lo, i / double(kGridPoints - 1));
                    const double a = sign == 0 ? mag : -mag;
                    for (int j = 0; j < kGridPoints; ++j) {
                        const double b =
                            b_lo + (b_hi - b_lo) * j / double(kGridPoints - 1);
                        for (size_t s = 0; s < xs.size(); ++s)
                            zs[s] = cand.eval(a * xs[s] + b);
                        const OlsFit fit = ols_fit(zs, ys);
                        if (fit.r2 > cell_best_r2) {
                            cell_best_r2 = fit.r2;
                            cell_a = a;
                            cell_b = b;
                        }
                    }
                }
        };
        scan(0.1, 10.0, x_lo, x_hi);
        const double mag = std::abs(cell_a);
        scan(std::max(mag / std::sqrt(10.0), 1e-3), mag * std::sqrt(10.0),
             cell_b - (x_hi - x_lo) * 0.05, cell_b + (x_hi - x_lo) * 0.05);
        try_cell(cand, cell_a, cell_b);
    }

    const bool has_negation =
        std::any_of(candidates.begin(), candidates.end(),
                    [](const SymbolicCandidate& c) { return c.kind == CandidateKind::Negation; });
    if (best.kind != CandidateKind::Zero) {
        if (best.c == 0.0) {
            // The affine fit collapsed to a constant; that is the zero candidate.
            best = SymbolicEdge{CandidateKind::Zero, 1.0, 0.0, 0.0, best.d, true, best.fit_r2};
        } else if (has_negation && best.c * best.a *
                                           SymbolicCandidate{best.kind, ""}.slope() <
                                       0.0) {
            // Decreasing edge: report it through the -x candidate with the
            // sign moved out of c. Same function, different rendering.
            const double slope = best.c * best.a * SymbolicCandidate{best.kind, ""}.slope();
            const double inter = best.eval(0.0);
            best.kind = CandidateKind::Negation;
            best.a = std::abs(best.a);
            best.c = -slope / best.a;
            best.b = 0.0;
            best.d = inter;
        }
    }

    best.active = true;
    return best;
}

double SymbolicNetwork::forward(const std::vector<double>& x) const {
    return forward_batch({x})[0];
}

std::vector<double> SymbolicNetwork::forward_batch(
    const std::vector<std::vector<double>>& xs) const {
    std::vector<std::vector<double>> current = xs;
    for (const auto& layer : layers) {
        std::vector<std::vector<double>> next(
            current.size(), std::vector<double>(static_cast<size_t>(layer.n_out), 0.0));
        for (size_t s = 0; s < current.size(); ++s) {
            if (static_cast<int>(current[s].size()) != layer.n_in)
                throw ShapeMismatch("symbolic network input width mismatch");
            for (int q = 0; q < layer.n_in; ++q)
                for (int p = 0; p < layer.n_out; ++p) {
                    const auto& e = layer.edge(q, p);
                    if (e.active)
                        next[s][static_cast<size_t>(p)] += e.eval(current[s][static_cast<size_t>(q)]);
                }
        }
        current = std::move(next);
    }
    std::vector<double> out(current.size());
    for (size_t s = 0; s < current.size(); ++s) out[s] = current[s][0];
    return out;
}

std::vector<double> SymbolicNetwork::get_params() const {
    std::vector<double> theta;
    for (const auto& layer : layers)
        for (const auto& e : layer.edges) {
            if (!e.active) continue;
            theta.push_back(e.a);
            theta.push_back(e.b);
            theta.push_back(e.c);
            theta.push_back(e.d);
        }
    return theta;
}

void SymbolicNetwork::set_params(const std::vector<double>& theta) {
    size_t i = 0;
    for (auto& layer : layers)
        for (auto& e : layer.edges) {
            if (!e.active) continue;
            if (i + 4 > theta.size()) throw ShapeMismatch("parameter vector too short");
            e.a = theta[i++];
            e.b = theta[i++];
            e.c = theta[i++];
            e.d = theta[i++];
        }
    if (i != theta.size()) throw ShapeMismatch("parameter vector too long");
}

double SymbolicNetwork::loss_and_gradient(const std::vector<std::vector<double>>& features,
                                          const std::vector<double>& targets,
                                          std::vector<double>& grad) const {
    const size_t n = features.size();
    if (n == 0) throw EmptyBatch("loss needs at least one sample");

    // Forward with per-layer inputs kept for the backward pass.
    std::vector<std::vector<std::vector<double>>> inputs(layers.size());
    std::vector<std::vector<double>> current = features;
    for (size_t l = 0; l < layers.size(); ++l) {
        inputs[l] = current;
        const auto& layer = layers[l];
        std::vector<std::vector<double>> next(
            n, std::vector<double>(static_cast<size_t>(layer.n_out), 0.0));
        for (size_t s = 0; s < n; ++s)
            for (int q = 0; q < layer.n_in; ++q)
                for (int p = 0; p < layer.n_out; ++p) {
                    const auto& e = layer.edge(q, p);
                    if (e.active)
                        next[s][static_cast<size_t>(p)] += e.eval(current[s][static_cast<size_t>(q)]);
                }
        current = std::move(next);
    }

    double loss = 0.0;
    std::vector<std::vector<double>> out_adj(n, std::vector<double>(1, 0.0));
    for (size_t s = 0; s < n; ++s) {
        const double r = current[s][0] - targets[s];
        loss += r * r;
        out_adj[s][0] = 2.0 * r;
    }

    // Offsets of each active edge's (a, b, c, d) block.
    std::vector<std::vector<int>> offsets(layers.size());
    int cursor = 0;
    for (size_t l = 0; l < layers.size(); ++l) {
        offsets[l].assign(layers[l].edges.size(), -1);
        for (size_t e = 0; e < layers[l].edges.size(); ++e)
            if (layers[l].edges[e].active) {
                offsets[l][e] = cursor;
                cursor += 4;
            }
    }
    grad.assign(static_cast<size_t>(cursor), 0.0);

    for (size_t li = layers.size(); li-- > 0;) {
        const auto& layer = layers[li];
        std::vector<std::vector<double>> in_adj(
            n, std::vector<double>(static_cast<size_t>(layer.n_in), 0.0));
        for (size_t s = 0; s < n; ++s)
            for (int q = 0; q < layer.n_in; ++q) {
                const double x = inputs[li][s][static_cast<size_t>(q)];
                for (int p = 0; p < layer.n_out; ++p) {
                    const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
                    const auto& e = layer.edges[idx];
                    if (!e.active) continue;
                    const double g = out_adj[s][static_cast<size_t>(p)];
                    if (g == 0.0) continue;
                    const double sigma = SymbolicCandidate{e.kind, ""}.slope();
                    const double fu = SymbolicCandidate{e.kind, ""}.eval(e.a * x + e.b);
                    const int off = offsets[li][idx];
                    grad[static_cast<size_t>(off) + 0] += g * e.c * sigma * x; // d/da
                    grad[static_cast<size_t>(off) + 1] += g * e.c * sigma;     // d/db
                    grad[static_cast<size_t>(off) + 2] += g * fu;              // d/dc
                    grad[static_cast<size_t>(off) + 3] += g;                   // d/dd
                    in_adj[s][static_cast<size_t>(q)] += g * e.c * sigma * e.a;
                }
            }
        out_adj = std::move(in_adj);
    }
    return loss;
}

nlohmann::ordered_json SymbolicNetwork::to_json() const {
    nlohmann::ordered_json j;
    j["shape"] = shape;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : layers) {
        nlohmann::ordered_json jl;
        jl["n_in"] = layer.n_in;
        jl["n_out"] = layer.n_out;
        jl["edges"] = nlohmann::ordered_json::array();
        for (const auto& e : layer.edges) {
            static const char* names[] = {"x", "-x", "0"};
            jl["edges"].push_back({{"candidate", names[static_cast<int>(e.kind)]},
                                   {"a", e.a},
                                   {"b", e.b},
                                   {"c", e.c},
                                   {"d", e.d},
                                   {"active", e.active},
                                   {"fit_r2", e.fit_r2}});
        }
        j["layers"].push_back(std::move(jl));
    }
    return j;
}

SymbolicNetwork symbolify(const KanNetwork& net, const FeatureMatrix& train,
                          const std::vector<SymbolicCandidate>& candidates) {
    if (train.size() == 0) throw EmptyBatch("symbolify needs a nonempty training batch");

    ForwardTrace trace;
    net.forward_batch(train.rows, trace);
    const size_t n = train.size();

    SymbolicNetwork snet;
    snet.shape = net.shape();
    for (size_t l = 0; l < net.layers().size(); ++l) {
        const auto& layer = net.layers()[l];
        SymbolicLayer sl;
        sl.n_in = layer.n_in;
        sl.n_out = layer.n_out;
        sl.edges.resize(layer.edges.size());
        for (int q = 0; q < layer.n_in; ++q)
            for (int p = 0; p < layer.n_out; ++p) {
                const size_t idx = static_cast<size_t>(q) * layer.n_out + p;
                if (!layer.edges[idx].active) continue; // pruned edges stay inactive
                std::vector<double> xs(n), ys(n);
                for (size_t s = 0; s < n; ++s) {
                    xs[s] = trace.node_inputs[l][s][static_cast<size_t>(q)];
                    ys[s] = trace.activations[l][s][idx];
                }
                sl.edges[idx] = fit_symbolic(xs, ys, candidates);
            }
        snet.layers.push_back(std::move(sl));
    }
    return snet;
}

SymbolicNetwork finetune_affine(const SymbolicNetwork& snet, const FeatureMatrix& train,
                                const FeatureMatrix& valid, const FinetuneConfig& config) {
    SymbolicNetwork net = snet;

    auto train_loss_of = [&](const SymbolicNetwork& m) {
        const auto preds = m.forward_batch(train.rows);
        double loss = 0.0;
        for (size_t s = 0; s < preds.size(); ++s) {
            const double r = train.targets[s] - preds[s];
            loss += r * r;
        }
        return loss;
    };
    auto valid_loss_of = [&](const SymbolicNetwork& m) {
        const auto preds = m.forward_batch(valid.rows);
        double loss = 0.0;
        for (size_t s = 0; s < preds.size(); ++s) {
            const double r = valid.targets[s] - preds[s];
            loss += r * r;
        }
        return loss;
    };

    const double initial_train_loss = train_loss_of(net);
    double best_valid = valid_loss_of(net);
    std::vector<double> best_params = net.get_params();

    auto objective = [&](const std::vector<double>& theta,
                         std::vector<double>& grad) -> double {
        net.set_params(theta);
        return net.loss_and_gradient(train.rows, train.targets, grad);
    };

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        LbfgsOptions options;
        options.history = config.lbfgs_history;
        options.max_iterations = config.iterations_per_epoch;
        options.initial_step = config.learning_rate;
        const auto step = lbfgs_minimize(objective, net.get_params(), options);
        net.set_params(step.x);
        const double valid_loss = valid_loss_of(net);
        if (valid_loss < best_valid - 1e-12) {
            best_valid = valid_loss;
            best_params = step.x;
        }
        if (step.converged) break;
    }

    net.set_params(best_params);
    if (train_loss_of(net) > initial_train_loss) {
        // Best-validation snapshot regressed on the training objective;
        // keep the input model instead.
        net = snet;
    }
    return net;
}

double ClosedForm::eval(const std::vector<double>& x) const {
    if (x.size() != coefficients.size())
        throw ShapeMismatch("closed form expects " + std::to_string(coefficients.size()) +
                            " inputs");
    double v = intercept;
    for (size_t i = 0; i < x.size(); ++i) v += coefficients[i] * x[i];
    return v;
}

std::string ClosedForm::render(const std::string& lhs, int significant_digits) const {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
        return std::string(buf);
    };

    std::string out = lhs + " =";
    bool first = true;
    for (size_t i = 0; i < coefficients.size(); ++i) {
        const double c = coefficients[i];
        if (c == 0.0) continue; // pruned inputs are omitted
        if (first) {
            out += c < 0.0 ? " -" : " ";
            first = false;
        } else {
            out += c < 0.0 ? " - " : " + ";
        }
        out += fmt(std::abs(c)) + "·" + input_names[i];
    }
    if (first) {
        out += " " + fmt(intercept);
    } else {
        out += intercept < 0.0 ? " - " : " + ";
        out += fmt(std::abs(intercept));
    }
    return out;
}

ClosedForm parse_closed_form(const std::string& rendered,
                             const std::vector<std::string>& input_names) {
    const auto eq = rendered.find(" =");
    if (eq == std::string::npos) throw ParseError("closed form lacks '='");

    ClosedForm cf;
    cf.input_names = input_names;
    cf.coefficients.assign(input_names.size(), 0.0);

    std::string body = rendered.substr(eq + 2);
    // Tokenize into signed terms.
    size_t pos = 0;
    double sign = 1.0;
    while (pos < body.size()) {
        while (pos < body.size() && body[pos] == ' ') ++pos;
        if (pos >= body.size()) break;
        if (body[pos] == '+') {
            sign = 1.0;
            ++pos;
            continue;
        }
        if (body[pos] == '-') {
            sign = -1.0;
            ++pos;
            while (pos < body.size() && body[pos] == ' ') ++pos;
        }
        size_t end = body.find(' ', pos);
        if (end == std::string::npos) end = body.size();
        const std::string term = body.substr(pos, end - pos);
        pos = end;

        const auto dot = term.find("·");
        if (dot == std::string::npos) {
            cf.intercept += sign * std::stod(term);
        } else {
            const double coeff = std::stod(term.substr(0, dot));
            const std::string name = term.substr(dot + 2); // U+00B7 is 2 bytes
            const auto it = std::find(input_names.begin(), input_names.end(), name);
            if (it == input_names.end())
                throw ParseError("unknown input '" + name + "' in closed form");
            cf.coefficients[static_cast<size_t>(it - input_names.begin())] += sign * coeff;
        }
        sign = 1.0;
    }
    return cf;
}

ClosedForm collapse(const SymbolicNetwork& snet) {
    if (snet.layers.empty()) throw ShapeMismatch("empty symbolic network");
    const int n_inputs = snet.layers.front().n_in;

    // Each node value as an affine function of the network inputs.
    struct Affine {
        std::vector<double> w;
        double b = 0.0;
    };
    std::vector<Affine> nodes(static_cast<size_t>(n_inputs));
    for (int q = 0; q < n_inputs; ++q) {
        nodes[static_cast<size_t>(q)].w.assign(static_cast<size_t>(n_inputs), 0.0);
        nodes[static_cast<size_t>(q)].w[static_cast<size_t>(q)] = 1.0;
    }

    for (const auto& layer : snet.layers) {
        std::vector<Affine> next(static_cast<size_t>(layer.n_out));
        for (auto& a : next) a.w.assign(static_cast<size_t>(n_inputs), 0.0);
        for (int q = 0; q < layer.n_in; ++q)
            for (int p = 0; p < layer.n_out; ++p) {
                const auto& e = layer.edge(q, p);
                if (!e.active) continue;
                // c * f(a*u + b) + d with affine f of slope sigma:
                // slope c*sigma*a on u, intercept c*sigma*b + d.
                const double sigma = SymbolicCandidate{e.kind, ""}.slope();
                const double k = e.c * sigma * e.a;
                const Affine& u = nodes[static_cast<size_t>(q)];
                Affine& out = next[static_cast<size_t>(p)];
                for (int i = 0; i < n_inputs; ++i)
                    out.w[static_cast<size_t>(i)] += k * u.w[static_cast<size_t>(i)];
                out.b += k * u.b + e.c * sigma * e.b + e.d;
            }
        nodes = std::move(next);
    }

    ClosedForm cf;
    cf.coefficients = nodes[0].w;
    cf.intercept = nodes[0].b;
    return cf;
}

MeanReversionReport mean_reversion_report(const ClosedForm& cf, const FeatureMatrix& train) {
    auto index_of = [&](const std::string& name) -> int {
        for (size_t i = 0; i < cf.input_names.size(); ++i)
            if (cf.input_names[i] == name) return static_cast<int>(i);
        return -1;
    };
    const int i_lag = index_of("V_{t-1}");
    const int i_w = index_of("V_w");
    if (i_lag < 0 || i_w < 0 || cf.coefficients[static_cast<size_t>(i_w)] == 0.0)
        throw MissingFeature("mean-reversion decomposition needs V_{t-1} and V_w terms");

    MeanReversionReport report;
    report.kappa = cf.coefficients[static_cast<size_t>(i_w)];

    double residual_sum = 0.0;
    double target_sum = 0.0;
    for (size_t s = 0; s < train.size(); ++s) {
        const double v_lag = train.rows[s][static_cast<size_t>(i_lag)];
        const double v_w = train.rows[s][static_cast<size_t>(i_w)];
        const double pred = cf.eval(train.rows[s]);
        residual_sum += pred - v_lag - report.kappa * (v_w - v_lag);
        target_sum += train.targets[s];
    }
    if (train.size() == 0) throw EmptyBatch("mean_reversion_report needs data");
    report.residual_mean = residual_sum / static_cast<double>(train.size());
    report.vix_mean = target_sum / static_cast<double>(train.size());
    return report;
}

} // namespace kancast
