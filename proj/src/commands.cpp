#include "tod/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "tod/analysis.hpp"
#include "tod/config.hpp"
#include "tod/rng.hpp"
#include "tod/textio.hpp"

namespace fs = std::filesystem;

namespace tod {

namespace {

int exit_code_for(const Error& e) {
    if (dynamic_cast<const MissingArtifactError*>(&e)) return kExitMissing;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    return kExitConfig;  // config, argument, parse, range, shape, numeric
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitFail;
    }
}

std::string config_stem(const std::string& config_path) {
    const std::string stem = fs::path(config_path).stem().string();
    return stem.empty() ? "run" : stem;
}

std::string default_out_dir(const std::string& config_path) {
    if (const char* root = std::getenv("TODLAB_OUT_ROOT"); root != nullptr && *root != '\0')
        return (fs::path(root) / config_stem(config_path)).string();
    return (fs::path("runs") / config_stem(config_path)).string();
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const std::string& dir, const ExperimentConfig& config,
                    const std::string& config_path, std::uint64_t run_seed, double grad_norm_cv) {
    nlohmann::json m;
    m["tool_version"] = kToolVersion;
    m["config_path"] = config_path;
    m["strategy"] = strategy_kind_name(config.strategy.kind);
    m["run_seed"] = run_seed;
    m["seeds"] = config.seeds;
    m["grad_norm_cv"] = grad_norm_cv;
    m["timestamp"] = timestamp_utc();
    write_text_file((fs::path(dir) / "manifest.json").string(), m.dump(2) + "\n");
}

std::uint64_t manifest_run_seed(const std::string& dir) {
    const std::string path = (fs::path(dir) / "manifest.json").string();
    if (!fs::exists(path)) throw MissingArtifactError("missing manifest: " + path);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + std::string(e.what()));
    }
    if (!m.contains("run_seed")) throw ParseError(path + ": missing run_seed");
    return m.at("run_seed").get<std::uint64_t>();
}

}  // namespace

std::string run_subdir_name(const std::string& strategy, std::uint64_t seed) {
    return strategy + "_seed" + std::to_string(seed);
}

void write_experiment_outputs(const ExperimentConfig& config, const std::string& config_path,
                              std::uint64_t run_seed, const ExperimentResult& result,
                              const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    {
        CsvWriter out((base / "cycles.csv").string(),
                      "cycle,labeled_fraction,test_accuracy,mean_cod_unlabeled,"
                      "mean_real_loss_unlabeled,grad_norm_mean");
        for (const CycleRecord& r : result.records)
            out.row({std::to_string(r.cycle), fmt_double(r.labeled_fraction),
                     fmt_double(r.test_accuracy), fmt_double(r.mean_cod_unlabeled),
                     fmt_double(r.mean_real_loss_unlabeled), fmt_double(r.grad_norm_mean)});
        out.close();
    }
    {
        CsvWriter out((base / "selections.csv").string(), "cycle,index,score");
        for (const CycleRecord& r : result.records) {
            for (std::size_t i = 0; i < r.selection.chosen.size(); ++i) {
                const std::string score =
                    i < r.selection.scores_used.size() ? fmt_double(r.selection.scores_used[i].value)
                                                       : std::string();
                out.row({std::to_string(r.cycle), std::to_string(r.selection.chosen[i]), score});
            }
        }
        out.close();
    }
    {
        CsvWriter out((base / "pool_init.csv").string(), "index");
        for (int idx : result.labeled_history.front()) out.row({std::to_string(idx)});
        out.close();
    }
    for (std::size_t c = 0; c < result.train_histories.size(); ++c) {
        CsvWriter out((base / ("train_history_c" + std::to_string(c + 1) + ".csv")).string(),
                      "epoch,sup_loss,unsup_loss,overall_loss");
        const TrainHistory& h = result.train_histories[c];
        for (std::size_t e = 0; e < h.epochs.size(); ++e)
            out.row({std::to_string(e + 1), fmt_double(h.epochs[e].supervised_loss),
                     fmt_double(h.epochs[e].unsupervised_loss),
                     fmt_double(h.epochs[e].overall_loss)});
        out.close();
    }
    for (std::size_t c = 0; c < result.boundary_snapshots.size(); ++c) {
        save_snapshot(result.boundary_snapshots[c],
                      (base / ("snap_c" + std::to_string(c) + ".snap")).string());
        save_snapshot(result.ema_snapshots[c],
                      (base / ("ema_c" + std::to_string(c) + ".snap")).string());
    }

    // Grad-norm diagnostic over the full training pool at every cycle
    // boundary (post-cycle snapshots only).
    double cv = 0.0;
    {
        const ExperimentData data = build_experiment_data(config);
        std::vector<int> all(static_cast<std::size_t>(data.train.n));
        for (int i = 0; i < data.train.n; ++i) all[static_cast<std::size_t>(i)] = i;
        std::vector<NetworkSnapshot> post_cycle(result.boundary_snapshots.begin() + 1,
                                                result.boundary_snapshots.end());
        const GradNormTrace trace = grad_norm_trace(post_cycle, data.train.view(), all);
        cv = trace.coeff_variation;
        CsvWriter out((base / "gradnorm.csv").string(), "cycle,mean,variance");
        for (std::size_t c = 0; c < trace.entries.size(); ++c)
            out.row({std::to_string(c + 1), fmt_double(trace.entries[c].mean),
                     fmt_double(trace.entries[c].variance)});
        out.close();
    }

    if (!result.warnings.empty()) {
        std::string text;
        for (const std::string& w : result.warnings) text += w + "\n";
        write_text_file((base / "warnings.txt").string(), text);
    }
    write_text_file((base / "config.json").string(), serialize_experiment_config(config));
    write_manifest(dir, config, config_path, run_seed, cv);
}

int cmd_run(const RunOptions& opts, std::ostream& log) {
    return guarded(log, [&]() -> int {
        ExperimentConfig config = load_experiment_config(opts.config_path);
        if (!opts.strategy.empty()) config.strategy.kind = strategy_kind_from_name(opts.strategy);
        if (!opts.seeds.empty()) config.seeds = opts.seeds;
        validate_experiment_config(config);
        if (opts.threads < 1) throw ArgumentError("--threads must be >= 1");

        const std::string out_dir =
            opts.out_dir.empty() ? default_out_dir(opts.config_path) : opts.out_dir;
        fs::create_directories(out_dir);
        write_text_file((fs::path(out_dir) / "config.json").string(),
                        serialize_experiment_config(config));

        const std::string strategy = strategy_kind_name(config.strategy.kind);
        struct Job {
            std::uint64_t seed;
            std::string dir;
            double final_accuracy = 0.0;
            std::string error;
        };
        std::vector<Job> jobs;
        for (std::uint64_t seed : config.seeds) {
            Job job;
            job.seed = seed;
            job.dir = (fs::path(out_dir) / run_subdir_name(strategy, seed)).string();
            jobs.push_back(std::move(job));
        }

        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                try {
                    const ExperimentResult result = run_experiment(config, jobs[i].seed);
                    write_experiment_outputs(config, opts.config_path, jobs[i].seed, result,
                                             jobs[i].dir);
                    jobs[i].final_accuracy = result.records.back().test_accuracy;
                } catch (const std::exception& e) {
                    jobs[i].error = e.what();
                }
            }
        };
        const int n_threads = std::min<int>(opts.threads, static_cast<int>(jobs.size()));
        if (n_threads <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
            for (std::thread& t : pool) t.join();
        }

        // Aggregate in sorted seed order.
        std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.seed < b.seed; });
        bool failed = false;
        double acc_sum = 0.0;
        for (const Job& j : jobs) {
            if (!j.error.empty()) {
                log << strategy << " seed " << j.seed << ": FAILED: " << j.error << "\n";
                failed = true;
                continue;
            }
            log << strategy << " seed " << j.seed
                << ": final test metric = " << fmt_double(j.final_accuracy) << " -> " << j.dir
                << "\n";
            acc_sum += j.final_accuracy;
        }
        if (failed) return kExitFail;
        log << strategy << ": mean final test metric over " << jobs.size()
            << " seeds = " << fmt_double(acc_sum / static_cast<double>(jobs.size())) << "\n";
        return kExitOk;
    });
}

int cmd_verify_bounds(const VerifyBoundsOptions& opts, std::ostream& log) {
    return guarded(log, [&]() -> int {
        if (opts.trials < 1) throw ArgumentError("--trials must be >= 1");
        if (opts.etas.empty()) throw ArgumentError("need at least one --eta");
        if (opts.t_values.empty()) throw ArgumentError("need at least one --T");
        for (double eta : opts.etas)
            if (!(eta > 0.0)) throw ArgumentError("--eta values must be positive");
        for (int t : opts.t_values)
            if (t < 1) throw ArgumentError("--T values must be >= 1");

        fs::create_directories(opts.out_dir);
        std::vector<BoundReport> all_reports;
        bool ok = true;
        const double gate_eta = 1e-3;  // rates at larger eta are reported, not asserted

        for (double eta : opts.etas) {
            const BoundSweep one = sweep_theorem1(eta, opts.trials, opts.seed);
            all_reports.insert(all_reports.end(), one.reports.begin(), one.reports.end());
            log << "one-step bound   eta=" << fmt_double(eta) << " T=1 pass rate "
                << fmt_double(one.pass_rate()) << "\n";
            if (eta <= gate_eta && one.pass_rate() < 0.99) ok = false;

            const BoundSweep lin = sweep_theorem1_linear(eta, opts.trials, opts.seed);
            log << "linear equality  eta=" << fmt_double(eta) << " T=1 exact "
                << lin.num_equality << "/" << opts.trials << "\n";
            if (lin.num_equality != opts.trials) ok = false;

            for (int t_steps : opts.t_values) {
                const BoundSweep multi = sweep_corollary2(eta, t_steps, opts.trials, opts.seed);
                all_reports.insert(all_reports.end(), multi.reports.begin(), multi.reports.end());
                log << "T-step bound     eta=" << fmt_double(eta) << " T=" << t_steps
                    << " pass rate " << fmt_double(multi.pass_rate()) << ", chain "
                    << multi.num_chain_ok << "/" << opts.trials << "\n";
                if (eta <= gate_eta && multi.pass_rate() < 0.99) ok = false;
                if (multi.num_chain_ok != opts.trials) ok = false;
            }
        }

        const BoundSweep relu = sweep_remark1(opts.trials, opts.seed);
        all_reports.insert(all_reports.end(), relu.reports.begin(), relu.reports.end());
        log << "relu-layer bound pass rate " << fmt_double(relu.pass_rate()) << "\n";
        if (relu.num_passed != opts.trials) ok = false;

        write_bound_reports_csv(all_reports, (fs::path(opts.out_dir) / "bounds.csv").string());
        log << (ok ? "all bound suites met their thresholds\n"
                   : "bound suites below threshold\n");
        return ok ? kExitOk : kExitFail;
    });
}

namespace {

// Labeled set in effect while training the given cycle: the initial pool
// plus everything selected after cycles 1..cycle-1.
std::vector<int> labeled_at_cycle(const std::string& run_dir, int cycle) {
    const std::string pool_path = (fs::path(run_dir) / "pool_init.csv").string();
    if (!fs::exists(pool_path)) throw MissingArtifactError("missing " + pool_path);
    std::vector<int> labeled;
    {
        std::istringstream in(read_text_file(pool_path));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line))
            if (!line.empty()) labeled.push_back(static_cast<int>(parse_long(line, pool_path)));
    }
    const std::string sel_path = (fs::path(run_dir) / "selections.csv").string();
    if (!fs::exists(sel_path)) throw MissingArtifactError("missing " + sel_path);
    {
        std::istringstream in(read_text_file(sel_path));
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const std::vector<std::string> cells = split_line(line, ',');
            if (cells.size() < 2) throw ParseError(sel_path + ": short row");
            const int sel_cycle = static_cast<int>(parse_long(cells[0], sel_path));
            if (sel_cycle < cycle) labeled.push_back(static_cast<int>(parse_long(cells[1], sel_path)));
        }
    }
    std::sort(labeled.begin(), labeled.end());
    return labeled;
}

}  // namespace

int cmd_loss_quality(const LossQualityOptions& opts, std::ostream& log) {
    return guarded(log, [&]() -> int {
        if (opts.cycle < 1) throw ArgumentError("--cycle must be >= 1");
        if (opts.gd_steps < 0) throw ArgumentError("--gd-steps must be >= 0");
        const fs::path run_dir(opts.run_dir);
        const std::string config_path = (run_dir / "config.json").string();
        if (!fs::exists(config_path))
            throw MissingArtifactError("missing config echo: " + config_path);
        const ExperimentConfig config = load_experiment_config(config_path);
        const std::uint64_t run_seed = manifest_run_seed(opts.run_dir);

        const std::string snap_cur = (run_dir / ("snap_c" + std::to_string(opts.cycle) + ".snap")).string();
        const std::string snap_prev =
            (run_dir / ("snap_c" + std::to_string(opts.cycle - 1) + ".snap")).string();
        if (!fs::exists(snap_cur)) throw MissingArtifactError("missing snapshot: " + snap_cur);
        if (!fs::exists(snap_prev)) throw MissingArtifactError("missing snapshot: " + snap_prev);
        const NetworkSnapshot current = load_snapshot(snap_cur);
        const NetworkSnapshot previous = load_snapshot(snap_prev);

        const ExperimentData data = build_experiment_data(config);
        const std::vector<int> labeled = labeled_at_cycle(opts.run_dir, opts.cycle);
        std::vector<int> unlabeled;
        {
            std::size_t li = 0;
            for (int i = 0; i < data.train.n; ++i) {
                if (li < labeled.size() && labeled[li] == i)
                    ++li;
                else
                    unlabeled.push_back(i);
            }
        }
        if (unlabeled.empty()) throw ArgumentError("no unlabeled samples at this cycle");

        const OutputRepr repr = config.train.output_repr;
        std::vector<DiscrepancyScore> scores;
        if (opts.gd_steps == 0) {
            scores = cod_scores(current, previous, data.train.view(), unlabeled, repr);
        } else {
            // Replay this cycle's training deterministically and capture the
            // snapshot gd_steps before the end.
            const std::string ema_path =
                (run_dir / ("ema_c" + std::to_string(opts.cycle - 1) + ".snap")).string();
            if (!fs::exists(ema_path)) throw MissingArtifactError("missing snapshot: " + ema_path);
            const NetworkSnapshot ema_prev = load_snapshot(ema_path);

            TrainConfig tc = config.train;
            tc.seed = mix_seed(run_seed, seed_tags::kTrainBase + static_cast<std::uint64_t>(opts.cycle));
            PoolState pools;
            pools.labeled = labeled;
            pools.unlabeled = unlabeled;
            const int total = train_cycle_step_count(tc, static_cast<int>(labeled.size()));
            if (opts.gd_steps > total)
                throw ArgumentError("--gd-steps " + std::to_string(opts.gd_steps) +
                                    " exceeds the cycle's " + std::to_string(total) + " steps");
            const int capture_at = total - opts.gd_steps;
            NetworkSnapshot captured = previous;  // capture_at == 0: the cycle start
            int step = 0;
            const TrainResult replay = train_cycle(
                tc, pools, data.train, previous, ema_prev,
                [&](const NetworkSnapshot& s) {
                    ++step;
                    if (step == capture_at) captured = s;
                });
            if (replay.model.params != current.params)
                throw ParseError("replayed cycle does not match stored snapshot; run directory "
                                 "is inconsistent with its config");
            scores = cod_scores(replay.model, captured, data.train.view(), unlabeled, repr);
        }

        std::vector<double> losses;
        losses.reserve(unlabeled.size());
        for (int idx : unlabeled)
            losses.push_back(
                grad_loss(current, data.train.feature_row(idx), data.train.label(idx)).loss);

        std::vector<double> score_values;
        score_values.reserve(scores.size());
        for (const DiscrepancyScore& s : scores) score_values.push_back(s.value);

        const std::string out_dir =
            opts.out_dir.empty()
                ? (run_dir / ("loss_quality_c" + std::to_string(opts.cycle) +
                              (opts.gd_steps > 0 ? "_g" + std::to_string(opts.gd_steps) : "")))
                      .string()
                : opts.out_dir;
        fs::create_directories(out_dir);

        const BucketReport buckets = bucket_mean_loss(scores, losses, opts.num_buckets);
        write_bucket_csv(buckets, (fs::path(out_dir) / "buckets.csv").string());
        std::vector<double> fractions;
        for (int i = 1; i <= 20; ++i) fractions.push_back(static_cast<double>(i) * 0.05);
        const CaptureCurve curve =
            capture_curve(scores, losses, opts.top_loss_fraction, fractions);
        write_capture_csv(curve, (fs::path(out_dir) / "capture.csv").string());

        const SpearmanResult rho = spearman(score_values, losses);
        double mean_cod = 0.0, mean_loss = 0.0;
        for (double v : score_values) mean_cod += v;
        for (double v : losses) mean_loss += v;
        mean_cod /= static_cast<double>(score_values.size());
        mean_loss /= static_cast<double>(losses.size());
        double capture_at_q = 0.0;
        for (std::size_t i = 0; i < curve.sampling_fractions.size(); ++i)
            if (std::abs(curve.sampling_fractions[i] - opts.top_loss_fraction) < 1e-9)
                capture_at_q = curve.capture[i];

        std::ostringstream summary;
        summary << "cycle=" << opts.cycle << "\n";
        summary << "gd_steps=" << opts.gd_steps << "\n";
        summary << "n_unlabeled=" << unlabeled.size() << "\n";
        summary << "spearman=" << (rho.defined ? fmt_double(rho.value) : "undefined") << "\n";
        summary << "mean_cod=" << fmt_double(mean_cod) << "\n";
        summary << "mean_real_loss=" << fmt_double(mean_loss) << "\n";
        summary << "capture_at_top_loss_fraction=" << fmt_double(capture_at_q) << "\n";
        write_text_file((fs::path(out_dir) / "summary.txt").string(), summary.str());
        log << summary.str();
        log << "wrote " << out_dir << "\n";
        return kExitOk;
    });
}

int cmd_report(const ReportOptions& opts, std::ostream& log) {
    return guarded(log, [&]() -> int {
        if (!fs::is_directory(opts.run_root))
            throw MissingArtifactError("not a directory: " + opts.run_root);

        struct Row {
            double labeled_fraction = 0.0;
            std::vector<double> accuracies;
            std::vector<double> mean_cods;
            std::vector<double> mean_losses;
        };
        // strategy -> cycle -> aggregate
        std::map<std::string, std::map<int, Row>> table;

        std::vector<std::string> subdirs;
        for (const auto& entry : fs::directory_iterator(opts.run_root))
            if (entry.is_directory() && fs::exists(entry.path() / "cycles.csv"))
                subdirs.push_back(entry.path().string());
        std::sort(subdirs.begin(), subdirs.end());
        if (subdirs.empty())
            throw MissingArtifactError("no run sub-directories with cycles.csv under " +
                                       opts.run_root);

        for (const std::string& dir : subdirs) {
            const std::string name = fs::path(dir).filename().string();
            const std::size_t pos = name.rfind("_seed");
            const std::string strategy = pos == std::string::npos ? name : name.substr(0, pos);
            const std::string path = (fs::path(dir) / "cycles.csv").string();
            std::istringstream in(read_text_file(path));
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const std::vector<std::string> cells = split_line(line, ',');
                if (cells.size() < 6) throw ParseError(path + ": short row");
                const int cycle = static_cast<int>(parse_long(cells[0], path));
                Row& row = table[strategy][cycle];
                row.labeled_fraction = parse_double(cells[1], path);
                row.accuracies.push_back(parse_double(cells[2], path));
                row.mean_cods.push_back(parse_double(cells[3], path));
                row.mean_losses.push_back(parse_double(cells[4], path));
            }
        }

        const std::string out_path =
            opts.out_path.empty() ? (fs::path(opts.run_root) / "report.csv").string()
                                  : opts.out_path;
        CsvWriter out(out_path,
                      "strategy,cycle,labeled_fraction,mean_test_accuracy,std_test_accuracy,"
                      "mean_cod,mean_real_loss,num_seeds");
        for (const auto& [strategy, cycles] : table) {
            for (const auto& [cycle, row] : cycles) {
                const double n = static_cast<double>(row.accuracies.size());
                double mean = 0.0;
                for (double a : row.accuracies) mean += a;
                mean /= n;
                double var = 0.0;
                for (double a : row.accuracies) var += (a - mean) * (a - mean);
                var /= n;
                double cod = 0.0;
                for (double c : row.mean_cods) cod += c;
                cod /= n;
                double loss = 0.0;
                for (double l : row.mean_losses) loss += l;
                loss /= n;
                out.row({strategy, std::to_string(cycle), fmt_double(row.labeled_fraction),
                         fmt_double(mean), fmt_double(std::sqrt(var)), fmt_double(cod),
                         fmt_double(loss), std::to_string(row.accuracies.size())});
                log << strategy << " cycle " << cycle << " labeled "
                    << fmt_double(row.labeled_fraction) << ": accuracy " << fmt_double(mean)
                    << " +/- " << fmt_double(std::sqrt(var)) << " (" << row.accuracies.size()
                    << " seeds)\n";
            }
        }
        out.close();
        log << "wrote " << out_path << "\n";
        return kExitOk;
    });
}

}  // namespace tod
