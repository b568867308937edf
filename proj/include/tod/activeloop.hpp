#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tod/data.hpp"
#include "tod/discrepancy.hpp"
#include "tod/nnet.hpp"
#include "tod/pools.hpp"
#include "tod/sampling.hpp"
#include "tod/training.hpp"

namespace tod {

enum class DatasetKind { two_moons, blobs, csv };

struct DatasetSpec {
    DatasetKind kind = DatasetKind::two_moons;
    int n = 2000;
    double noise = 0.2;     // two_moons
    int k = 8;              // blobs
    double spread = 1.0;    // blobs
    std::uint64_t seed = 1;
    std::string path;       // csv
    CsvSchema schema;       // csv

    bool operator==(const DatasetSpec&) const = default;
};

struct EvalSpec {
    double test_fraction = 0.25;
    bool operator==(const EvalSpec&) const = default;
};

struct ScheduleSpec {
    double start_fraction = 0.10;
    double budget_fraction = 0.05;
    int num_cycles = 7;
    bool operator==(const ScheduleSpec&) const = default;
};

struct NetworkConfig {
    std::vector<int> hidden = {16, 16};
    double init_scale = 0.5;
    bool operator==(const NetworkConfig&) const = default;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    EvalSpec eval;
    NetworkConfig network;
    ScheduleSpec schedule;
    AcquisitionStrategy strategy;
    TrainConfig train;
    bool reinit_per_cycle = false;
    std::vector<std::uint64_t> seeds = {1};

    bool operator==(const ExperimentConfig&) const = default;
};

void validate_experiment_config(const ExperimentConfig& config);

// Per-cycle metrics: test accuracy (mean task loss for regression heads),
// mean COD and mean oracle loss over the remaining unlabeled pool, and the
// grad-norm diagnostic. selection is empty after the final cycle.
struct CycleRecord {
    int cycle = 0;
    double labeled_fraction = 0.0;
    double test_accuracy = 0.0;
    double mean_cod_unlabeled = 0.0;
    double mean_real_loss_unlabeled = 0.0;
    double grad_norm_mean = 0.0;
    double grad_norm_var = 0.0;
    SelectionResult selection;
};

struct ExperimentResult {
    std::vector<CycleRecord> records;
    // Cycle-boundary snapshots: index 0 is the fresh init, index c the model
    // after cycle c. EMA snapshots follow the same indexing.
    std::vector<NetworkSnapshot> boundary_snapshots;
    std::vector<NetworkSnapshot> ema_snapshots;
    // labeled_history[c-1] is the labeled set used to train cycle c.
    std::vector<std::vector<int>> labeled_history;
    std::vector<TrainHistory> train_histories;
    std::vector<std::string> warnings;
    int n_train = 0;
    int reveal_count = 0;
};

// Builds the dataset from its own seed, holds out the test split (fixed per
// dataset seed), then runs the full multi-cycle loop. All other randomness
// (init, pools, shuffles, tie-breaks) derives from run_seed.
ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t run_seed);

// The spec the experiment's network uses for this dataset (input width from
// the data, head and output width from its label type).
NetworkSpec experiment_network_spec(const ExperimentConfig& config, const Dataset& data);

// Training pool and test set as separate datasets (test split derived from
// the dataset seed, not the run seed).
struct ExperimentData {
    Dataset train;
    Dataset test;
};
ExperimentData build_experiment_data(const ExperimentConfig& config);

// Classification: fraction of argmax-correct predictions. Regression: mean
// task loss (reported in the accuracy slot; lower is better).
double evaluate_test_metric(const NetworkSnapshot& model, const Dataset& test);

// Sub-seed derivation tags; fixed so runs are reproducible from one seed.
namespace seed_tags {
inline constexpr std::uint64_t kSplit = 11;
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kPools = 2;
inline constexpr std::uint64_t kTrainBase = 100;      // + cycle
inline constexpr std::uint64_t kSelectBase = 200;     // + cycle
inline constexpr std::uint64_t kReinitBase = 1000;    // + cycle
}  // namespace seed_tags

}  // namespace tod
