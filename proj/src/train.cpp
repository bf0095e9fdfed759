#include "kancast/train.hpp"

#include <cmath>

namespace kancast {

namespace {
constexpr double kImprovementEps = 1e-12;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (decay_factor <= 0.0 || decay_factor >= 1.0)
        throw ConfigError("decay_factor must lie in (0, 1)");
    if (patience_decay >= patience_stop)
        throw ConfigError("patience_decay must be smaller than patience_stop");
    if (patience_decay < 1 || max_epochs < 1 || lbfgs_history < 1 ||
        iterations_per_epoch < 1)
        throw ConfigError("patience, epoch and history settings must be positive");
}

double predictive_loss(const KanNetwork& net, const FeatureMatrix& data) {
    ForwardTrace trace;
    const auto preds = net.forward_batch(data.rows, trace);
    double loss = 0.0;
    for (size_t s = 0; s < preds.size(); ++s) {
        const double r = data.targets[s] - preds[s];
        loss += r * r;
    }
    return loss;
}

TrainResult fit(KanNetwork net, const FeatureMatrix& train, const FeatureMatrix& valid,
                const TrainConfig& config, const EpochLogger& logger) {
    config.validate();
    if (train.size() == 0 || valid.size() == 0)
        throw EmptyBatch("fit needs nonempty training and validation sets");
    if (net.input_dim() != train.feature_count() ||
        net.input_dim() != valid.feature_count())
        throw ShapeMismatch("network input width does not match feature count");

    TrainResult result;
    double lr = config.learning_rate;

    auto objective = [&](const std::vector<double>& theta,
                         std::vector<double>& grad) -> double {
        KanNetwork& n = net; // optimized in place through set_params
        n.set_params(theta);
        return loss_and_gradient(n, train.rows, train.targets, config.lambda, config.mu1,
                                 config.mu2, grad);
    };

    // Pre-training evaluation; the untrained parameters are a valid snapshot.
    double best_valid = predictive_loss(net, valid);
    std::vector<double> best_params = net.get_params();
    result.train_loss_history.push_back(
        loss_total(net, train.rows, train.targets, config.lambda, config.mu1, config.mu2));
    result.valid_loss_history.push_back(best_valid);

    int stall = 0;
    bool decayed_this_window = false;
    result.stop_reason = StopReason::MaxEpochs;

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        LbfgsOptions options;
        options.history = config.lbfgs_history;
        options.max_iterations = config.iterations_per_epoch;
        options.initial_step = lr;
        const auto step = lbfgs_minimize(objective, net.get_params(), options);
        net.set_params(step.x);

        const double train_loss = step.value;
        const double valid_loss = predictive_loss(net, valid);
        result.train_loss_history.push_back(train_loss);
        result.valid_loss_history.push_back(valid_loss);
        result.epochs = epoch;
        if (logger) logger(epoch, train_loss, valid_loss, lr);

        if (valid_loss < best_valid - kImprovementEps) {
            best_valid = valid_loss;
            best_params = step.x;
            stall = 0;
            decayed_this_window = false;
        } else {
            ++stall;
            if (stall >= config.patience_decay && !decayed_this_window) {
                lr *= config.decay_factor;
                decayed_this_window = true;
            }
            if (stall >= config.patience_stop) {
                result.stop_reason = StopReason::EarlyStopped;
                break;
            }
        }
    }

    net.set_params(best_params);
    result.best_valid_loss = best_valid;
    result.net = std::move(net);
    return result;
}

} // namespace kancast
