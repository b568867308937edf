#include "tod/activeloop.hpp"

#include <algorithm>
#include <cmath>

#include "tod/rng.hpp"

namespace tod {

PoolState init_pools(int n, double start_fraction, std::uint64_t seed) {
    if (n <= 0) throw ArgumentError("init_pools: n must be positive");
    if (!(start_fraction > 0.0 && start_fraction < 1.0))
        throw ConfigError("init_pools: start_fraction must be in (0,1)");
    const int n_labeled = static_cast<int>(std::llround(start_fraction * n));
    if (n_labeled < 1 || n_labeled >= n)
        throw ConfigError("init_pools: start_fraction leaves an empty pool");
    Rng rng(seed);
    std::vector<int> picks = rng.sample_without_replacement(n, n_labeled);
    std::sort(picks.begin(), picks.end());
    PoolState pools;
    pools.labeled = std::move(picks);
    pools.unlabeled.reserve(static_cast<std::size_t>(n - n_labeled));
    std::size_t li = 0;
    for (int i = 0; i < n; ++i) {
        if (li < pools.labeled.size() && pools.labeled[li] == i)
            ++li;
        else
            pools.unlabeled.push_back(i);
    }
    return pools;
}

void extend_labeled(PoolState& pools, const std::vector<int>& newly_labeled) {
    for (int idx : newly_labeled) {
        const auto it = std::lower_bound(pools.unlabeled.begin(), pools.unlabeled.end(), idx);
        if (it == pools.unlabeled.end() || *it != idx)
            throw RangeError("extend_labeled: index " + std::to_string(idx) + " is not unlabeled");
        pools.unlabeled.erase(it);
        pools.labeled.insert(std::lower_bound(pools.labeled.begin(), pools.labeled.end(), idx),
                             idx);
    }
}

void validate_experiment_config(const ExperimentConfig& config) {
    const ScheduleSpec& s = config.schedule;
    if (s.num_cycles < 1) throw ConfigError("schedule: num_cycles must be >= 1");
    if (!(s.start_fraction > 0.0 && s.start_fraction < 1.0))
        throw ConfigError("schedule: start_fraction must be in (0,1)");
    if (s.budget_fraction < 0.0) throw ConfigError("schedule: budget_fraction must be >= 0");
    if (s.start_fraction + s.num_cycles * s.budget_fraction > 1.0)
        throw ConfigError("schedule: start_fraction + num_cycles*budget_fraction must be <= 1");
    if (config.eval.test_fraction < 0.0 || config.eval.test_fraction >= 1.0)
        throw ConfigError("eval: test_fraction must be in [0,1)");
    for (int h : config.network.hidden)
        if (h < 1) throw ConfigError("network: hidden widths must be >= 1");
    if (!(config.network.init_scale > 0.0)) throw ConfigError("network: init_scale must be > 0");
    if (config.dataset.kind == DatasetKind::csv && config.dataset.path.empty())
        throw ConfigError("dataset: csv kind needs a path");
    if (config.seeds.empty()) throw ConfigError("seeds: need at least one seed");
    if (!(config.train.alpha >= 0.0 && config.train.alpha <= 1.0))
        throw ConfigError("train: alpha must be in [0,1]");
    if (!(config.train.eta > 0.0)) throw ConfigError("train: eta must be positive");
}

ExperimentData build_experiment_data(const ExperimentConfig& config) {
    Dataset full;
    switch (config.dataset.kind) {
        case DatasetKind::two_moons:
            full = gen_two_moons(config.dataset.n, config.dataset.noise, config.dataset.seed);
            break;
        case DatasetKind::blobs:
            full = gen_blobs(config.dataset.n, config.dataset.k, config.dataset.spread,
                             config.dataset.seed);
            break;
        case DatasetKind::csv:
            full = load_csv(config.dataset.path, config.dataset.schema);
            break;
    }
    const SplitIndices split =
        train_test_split(full.n, config.eval.test_fraction, mix_seed(config.dataset.seed, seed_tags::kSplit));
    ExperimentData out;
    out.train = subset(full, split.train);
    out.test = subset(full, split.test);
    return out;
}

NetworkSpec experiment_network_spec(const ExperimentConfig& config, const Dataset& data) {
    NetworkSpec spec;
    spec.layer_widths.push_back(data.d);
    for (int h : config.network.hidden) spec.layer_widths.push_back(h);
    if (data.is_classification()) {
        spec.layer_widths.push_back(data.num_classes);
        spec.head = Head::softmax_classification;
    } else {
        spec.layer_widths.push_back(1);
        spec.head = Head::scalar_regression;
    }
    spec.init_scale = config.network.init_scale;
    validate_spec(spec);
    return spec;
}

double evaluate_test_metric(const NetworkSnapshot& model, const Dataset& test) {
    if (test.n == 0) throw ArgumentError("evaluate_test_metric: empty test set");
    if (test.is_classification()) {
        int correct = 0;
        for (int i = 0; i < test.n; ++i) {
            const std::vector<double> p = forward(model, test.feature_row(i));
            const int pred = static_cast<int>(
                std::max_element(p.begin(), p.end()) - p.begin());
            if (pred == static_cast<int>(test.label(i))) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(test.n);
    }
    double loss = 0.0;
    for (int i = 0; i < test.n; ++i) {
        const std::vector<double> f = forward(model, test.feature_row(i));
        const double r = test.label(i) - f[0];
        loss += 0.5 * r * r;
    }
    return loss / static_cast<double>(test.n);
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t run_seed) {
    validate_experiment_config(config);
    const ExperimentData data = build_experiment_data(config);
    const Dataset& train_data = data.train;
    const FeatureView features = train_data.view();
    const int n = train_data.n;

    const NetworkSpec net_spec = experiment_network_spec(config, train_data);
    const int budget = static_cast<int>(std::llround(config.schedule.budget_fraction * n));

    ExperimentResult result;
    result.n_train = n;

    PoolState pools = init_pools(n, config.schedule.start_fraction,
                                 mix_seed(run_seed, seed_tags::kPools));
    Oracle oracle(train_data.labels);
    for (int idx : pools.labeled) oracle.reveal(idx);

    NetworkSnapshot model = init_network(net_spec, mix_seed(run_seed, seed_tags::kInit));
    NetworkSnapshot ema = model;
    NetworkSnapshot prev_model = model;  // w_{c-1}; w_0 is the fresh init
    result.boundary_snapshots.push_back(model);
    result.ema_snapshots.push_back(ema);

    const OutputRepr repr = config.train.output_repr;

    for (int cycle = 1; cycle <= config.schedule.num_cycles; ++cycle) {
        if (config.reinit_per_cycle && cycle > 1) {
            model = init_network(net_spec, mix_seed(run_seed, seed_tags::kReinitBase +
                                                                  static_cast<std::uint64_t>(cycle)));
            ema = model;
        }
        result.labeled_history.push_back(pools.labeled);

        TrainConfig tc = config.train;
        tc.seed = mix_seed(run_seed, seed_tags::kTrainBase + static_cast<std::uint64_t>(cycle));
        TrainResult trained = train_cycle(tc, pools, train_data, model, ema);
        model = std::move(trained.model);
        ema = std::move(trained.ema);
        result.train_histories.push_back(std::move(trained.history));
        result.boundary_snapshots.push_back(model);
        result.ema_snapshots.push_back(ema);

        CycleRecord rec;
        rec.cycle = cycle;
        rec.labeled_fraction = static_cast<double>(pools.labeled.size()) / static_cast<double>(n);
        rec.test_accuracy = evaluate_test_metric(model, data.test);

        if (!pools.unlabeled.empty()) {
            const std::vector<DiscrepancyScore> cyc_scores =
                cod_scores(model, prev_model, features, pools.unlabeled, repr);
            double cod_sum = 0.0;
            for (const DiscrepancyScore& s : cyc_scores) cod_sum += s.value;
            rec.mean_cod_unlabeled = cod_sum / static_cast<double>(cyc_scores.size());

            double loss_sum = 0.0;
            for (int idx : pools.unlabeled)
                loss_sum +=
                    grad_loss(model, train_data.feature_row(idx), oracle.peek(idx)).loss;
            rec.mean_real_loss_unlabeled =
                loss_sum / static_cast<double>(pools.unlabeled.size());

            double g_sum = 0.0, g_sum_sq = 0.0;
            for (int idx : pools.unlabeled) {
                const double g = grad_output_norm_sq(model, train_data.feature_row(idx));
                g_sum += g;
                g_sum_sq += g * g;
            }
            const double un = static_cast<double>(pools.unlabeled.size());
            rec.grad_norm_mean = g_sum / un;
            rec.grad_norm_var = std::max(0.0, g_sum_sq / un - rec.grad_norm_mean * rec.grad_norm_mean);
        }

        if (cycle < config.schedule.num_cycles && !pools.unlabeled.empty() && budget > 0) {
            int b = budget;
            if (b > static_cast<int>(pools.unlabeled.size())) {
                b = static_cast<int>(pools.unlabeled.size());
                result.warnings.push_back("cycle " + std::to_string(cycle) +
                                          ": budget clipped to remaining unlabeled pool (" +
                                          std::to_string(b) + ")");
            }
            const NetworkSnapshot* comparison = nullptr;
            if (config.strategy.kind == StrategyKind::cod)
                comparison = &prev_model;
            else if (config.strategy.kind == StrategyKind::emaod)
                comparison = &ema;
            rec.selection = acquire(config.strategy, pools, model, comparison, features, b,
                                    mix_seed(run_seed, seed_tags::kSelectBase +
                                                           static_cast<std::uint64_t>(cycle)),
                                    repr);
            for (int idx : rec.selection.chosen) oracle.reveal(idx);
            extend_labeled(pools, rec.selection.chosen);
        }

        result.records.push_back(std::move(rec));
        prev_model = model;
    }

    result.reveal_count = oracle.reveal_count();
    return result;
}

}  // namespace tod
