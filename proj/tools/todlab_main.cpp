#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tod/commands.hpp"
#include "tod/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Temporal-output-discrepancy active learning lab"};
    app.set_version_flag("--version", std::string(tod::kToolVersion));
    app.require_subcommand(1);

    tod::RunOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "Run active-learning experiments from a config");
    run->add_option("config", run_opts.config_path, "Experiment config (JSON)")->required();
    run->add_option("-o,--out", run_opts.out_dir,
                    "Output directory (default: $TODLAB_OUT_ROOT/<config stem> or runs/<stem>)");
    run->add_option("--seeds", run_opts.seeds, "Override the config's seed list");
    run->add_option("--strategy", run_opts.strategy, "Override the strategy (random|cod|emaod)");
    run->add_option("--threads", run_opts.threads, "Worker pool size for seed fan-out");

    tod::VerifyBoundsOptions vb_opts;
    CLI::App* verify = app.add_subcommand("verify-bounds",
                                          "Numerically check the discrepancy bound inequalities");
    verify->add_option("--eta", vb_opts.etas, "Learning rates to sweep");
    verify->add_option("--T", vb_opts.t_values, "Step counts for the T-step bound");
    verify->add_option("--trials", vb_opts.trials, "Seeded instances per sweep");
    verify->add_option("--seed", vb_opts.seed, "Master seed");
    verify->add_option("-o,--out", vb_opts.out_dir, "Directory for bounds.csv");

    tod::LossQualityOptions lq_opts;
    CLI::App* lq = app.add_subcommand("loss-quality",
                                      "Bucket/capture/rank analyses of COD as a loss estimator");
    lq->add_option("run_dir", lq_opts.run_dir, "A <strategy>_seed<N> run directory")->required();
    lq->add_option("--cycle", lq_opts.cycle, "Active-learning cycle to analyze (>= 1)");
    lq->add_option("--gd-steps", lq_opts.gd_steps,
                   "Compare snapshots this many optimizer steps apart (0: whole cycle)");
    lq->add_option("-o,--out", lq_opts.out_dir, "Output directory");
    lq->add_option("--buckets", lq_opts.num_buckets, "Number of COD percentile buckets");
    lq->add_option("--top-loss-fraction", lq_opts.top_loss_fraction,
                   "Loss quantile for the capture curve");

    tod::ReportOptions rep_opts;
    CLI::App* report = app.add_subcommand("report", "Aggregate per-seed runs into report.csv");
    report->add_option("run_root", rep_opts.run_root, "Directory holding run sub-directories")
        ->required();
    report->add_option("-o,--out", rep_opts.out_path, "Report path (default: <root>/report.csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tod::kExitConfig;
    }

    if (run->parsed()) return tod::cmd_run(run_opts, std::cout);
    if (verify->parsed()) return tod::cmd_verify_bounds(vb_opts, std::cout);
    if (lq->parsed()) return tod::cmd_loss_quality(lq_opts, std::cout);
    if (report->parsed()) return tod::cmd_report(rep_opts, std::cout);
    return tod::kExitConfig;
}
