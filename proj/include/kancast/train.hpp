#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kancast/data.hpp"
#include "kancast/kan.hpp"
#include "kancast/lbfgs.hpp"

namespace kancast {

struct TrainConfig {
    double learning_rate = 0.04;
    double decay_factor = 0.1;
    int patience_decay = 5;
    int patience_stop = 10;
    int lbfgs_history = 10;
    int max_epochs = 500;
    int iterations_per_epoch = 20;
    double lambda = 0.0;
    double mu1 = 1.0;
    double mu2 = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class StopReason { EarlyStopped, MaxEpochs };

struct TrainResult {
    KanNetwork net;
    int epochs = 0;
    // Entry 0 is the pre-training evaluation; entry e is after epoch e.
    std::vector<double> train_loss_history;
    std::vector<double> valid_loss_history;
    double best_valid_loss = 0.0;
    StopReason stop_reason = StopReason::MaxEpochs;
};

using EpochLogger = std::function<void(int epoch, double train_loss, double valid_loss,
                                       double learning_rate)>;

// One epoch = one bounded L-BFGS pass over the full training batch. After
// each epoch the validation predictive loss is evaluated; a stall of
// patience_decay epochs decays the learning rate once per stall window and a
// stall of patience_stop epochs stops training and restores the best
// parameters. "Improvement" means a strict decrease by more than 1e-12.
TrainResult fit(KanNetwork net, const FeatureMatrix& train, const FeatureMatrix& valid,
                const TrainConfig& config, const EpochLogger& logger = {});

// Predictive loss only (sum of squared errors) on a dataset.
double predictive_loss(const KanNetwork& net, const FeatureMatrix& data);

} // namespace kancast
