#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tod/activeloop.hpp"

namespace tod {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;       // thresholds not met / unexpected failure
inline constexpr int kExitConfig = 2;     // bad config or arguments
inline constexpr int kExitIo = 3;         // I/O failure
inline constexpr int kExitMissing = 4;    // missing artifact (snapshot, run dir)

struct RunOptions {
    std::string config_path;
    std::string out_dir;                     // empty: $TODLAB_OUT_ROOT/<config stem> or ./runs/<stem>
    std::vector<std::uint64_t> seeds;        // empty: use the config's list
    std::string strategy;                    // empty: use the config's strategy
    int threads = 1;
};

// One sub-directory per seed: <strategy>_seed<seed>/ with cycles.csv,
// selections.csv, train_history_c<k>.csv, gradnorm.csv, pool_init.csv,
// snapshots, config.json echo and manifest.json. Deterministic byte-for-byte
// apart from the timestamp in manifest.json.
int cmd_run(const RunOptions& opts, std::ostream& log);

struct VerifyBoundsOptions {
    std::vector<double> etas = {1e-4, 1e-3};
    std::vector<int> t_values = {2, 5, 10};
    int trials = 1000;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

// Writes bounds.csv and prints pass rates per (suite, eta, T). Exit 0 iff
// the one-step and T-step rates reach 0.99 for every eta <= 1e-3, the
// linear-equality and chain checks are exact, and the ReLU-layer check
// passes every instance. Larger etas are reported but do not gate.
int cmd_verify_bounds(const VerifyBoundsOptions& opts, std::ostream& log);

struct LossQualityOptions {
    std::string run_dir;   // one <strategy>_seed<seed> directory
    int cycle = 2;
    int gd_steps = 0;      // 0: consecutive cycle snapshots; k>0: replay and
                           // compare snapshots k optimizer steps apart
    std::string out_dir;   // empty: <run_dir>/loss_quality_c<cycle>[_g<k>]
    int num_buckets = 20;
    double top_loss_fraction = 0.25;
};

int cmd_loss_quality(const LossQualityOptions& opts, std::ostream& log);

struct ReportOptions {
    std::string run_root;
    std::string out_path;  // empty: <run_root>/report.csv
};

// Aggregates cycles.csv across seed sub-directories (mean/std per cycle per
// strategy) into report.csv.
int cmd_report(const ReportOptions& opts, std::ostream& log);

// Helpers shared with the acceptance suite.
std::string run_subdir_name(const std::string& strategy, std::uint64_t seed);
void write_experiment_outputs(const ExperimentConfig& config, const std::string& config_path,
                              std::uint64_t run_seed, const ExperimentResult& result,
                              const std::string& dir);

}  // namespace tod
