#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tod/data.hpp"
#include "tod/nnet.hpp"
#include "tod/pools.hpp"

namespace tod {

struct TrainConfig {
    double eta = 0.1;
    double lambda = 0.05;   // unsupervised weight
    double alpha = 0.999;   // EMA decay
    int epochs = 30;
    int batch_size = 32;
    int unsup_batch_size = 32;
    std::uint64_t seed = 0;
    // Representation the consistency term (and COD scoring) is computed on.
    // Probabilities for classifiers by default; logits mode is exposed for
    // ablation. Regression heads use the raw output either way.
    OutputRepr output_repr = OutputRepr::probabilities;

    bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
    double supervised_loss = 0.0;
    double unsupervised_loss = 0.0;
    double overall_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
};

struct TrainResult {
    NetworkSnapshot model;
    NetworkSnapshot ema;
    TrainHistory history;
};

// Mean over the batch of squared output distance between the current model
// and the EMA baseline. EMA outputs are constants; no label is ever read.
double unsupervised_loss(const NetworkSnapshot& current, const NetworkSnapshot& ema,
                         const FeatureView& features, const std::vector<int>& batch,
                         OutputRepr repr = OutputRepr::probabilities);

// Mean task loss over the labeled batch.
double supervised_loss(const NetworkSnapshot& current, const Dataset& data,
                       const std::vector<int>& batch);

// One active-learning cycle of semi-supervised optimization. Per optimizer
// step: a labeled batch and an unlabeled batch (seeded shuffles, reshuffled
// per epoch), gradient of L_S + lambda * L_U, one SGD step, one EMA update.
// The labeled pool stays fixed for the whole cycle. Deterministic given
// (config, pools, data, model, ema).
//
// step_observer, when set, is invoked with the model snapshot after every
// optimizer step (used to capture intra-cycle snapshots for analysis).
TrainResult train_cycle(const TrainConfig& config, const PoolState& pools, const Dataset& data,
                        const NetworkSnapshot& model, const NetworkSnapshot& ema,
                        const std::function<void(const NetworkSnapshot&)>& step_observer = {});

// Number of optimizer steps train_cycle will take for this pool size.
int train_cycle_step_count(const TrainConfig& config, int labeled_count);

}  // namespace tod
