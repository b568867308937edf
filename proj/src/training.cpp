#include "tod/training.hpp"

#include <algorithm>
#include <cmath>

#include "tod/rng.hpp"

namespace tod {

double unsupervised_loss(const NetworkSnapshot& current, const NetworkSnapshot& ema,
                         const FeatureView& features, const std::vector<int>& batch,
                         OutputRepr repr) {
    if (!(current.spec == ema.spec)) throw ConfigError("unsupervised_loss: spec mismatch");
    if (batch.empty()) throw ArgumentError("unsupervised_loss: empty batch");
    double acc = 0.0;
    for (int i : batch) {
        const std::vector<double> x = features.row(i);
        const std::vector<double> f = forward_repr(current, x, repr);
        const std::vector<double> f_base = forward_repr(ema, x, repr);
        double d_sq = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double d = f[k] - f_base[k];
            d_sq += d * d;
        }
        acc += d_sq;
    }
    return acc / static_cast<double>(batch.size());
}

double supervised_loss(const NetworkSnapshot& current, const Dataset& data,
                       const std::vector<int>& batch) {
    if (batch.empty()) throw ArgumentError("supervised_loss: empty batch");
    double acc = 0.0;
    for (int i : batch) acc += grad_loss(current, data.feature_row(i), data.label(i)).loss;
    return acc / static_cast<double>(batch.size());
}

int train_cycle_step_count(const TrainConfig& config, int labeled_count) {
    if (labeled_count <= 0) return 0;
    const int batches = (labeled_count + config.batch_size - 1) / config.batch_size;
    return batches * config.epochs;
}

TrainResult train_cycle(const TrainConfig& config, const PoolState& pools, const Dataset& data,
                        const NetworkSnapshot& model, const NetworkSnapshot& ema,
                        const std::function<void(const NetworkSnapshot&)>& step_observer) {
    if (pools.labeled.empty()) throw ConfigError("train_cycle: empty labeled pool");
    if (config.epochs < 1 || config.batch_size < 1 || config.unsup_batch_size < 1)
        throw ConfigError("train_cycle: epochs and batch sizes must be positive");
    if (config.lambda < 0.0) throw ConfigError("train_cycle: lambda must be non-negative");

    TrainResult result;
    result.model = model;
    result.ema = ema;

    Rng rng(config.seed);
    std::vector<int> labeled_order = pools.labeled;
    std::vector<int> unlabeled_order = pools.unlabeled;
    std::size_t unsup_pos = unlabeled_order.size();  // forces shuffle on first use

    const bool use_unsup = config.lambda > 0.0 && !pools.unlabeled.empty();
    const std::size_t param_n = result.model.params.size();
    const int sup_batches =
        (static_cast<int>(labeled_order.size()) + config.batch_size - 1) / config.batch_size;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(labeled_order);
        double epoch_sup = 0.0, epoch_unsup = 0.0;
        for (int step = 0; step < sup_batches; ++step) {
            const std::size_t lo = static_cast<std::size_t>(step) * static_cast<std::size_t>(config.batch_size);
            const std::size_t hi = std::min(lo + static_cast<std::size_t>(config.batch_size),
                                            labeled_order.size());

            GradientVector grad;
            grad.values.assign(param_n, 0.0);
            double sup_loss = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const int idx = labeled_order[i];
                const LossGrad lg = grad_loss(result.model, data.feature_row(idx), data.label(idx));
                sup_loss += lg.loss;
                for (std::size_t p = 0; p < param_n; ++p) grad.values[p] += lg.grad.values[p];
            }
            const double sup_n = static_cast<double>(hi - lo);
            sup_loss /= sup_n;
            for (double& v : grad.values) v /= sup_n;

            double unsup_loss_value = 0.0;
            if (use_unsup) {
                const std::size_t want = std::min(static_cast<std::size_t>(config.unsup_batch_size),
                                                  unlabeled_order.size());
                if (unsup_pos + want > unlabeled_order.size()) {
                    rng.shuffle(unlabeled_order);
                    unsup_pos = 0;
                }
                GradientVector ugrad;
                ugrad.values.assign(param_n, 0.0);
                for (std::size_t i = unsup_pos; i < unsup_pos + want; ++i) {
                    const int idx = unlabeled_order[i];
                    const std::vector<double> x = data.feature_row(idx);
                    const std::vector<double> f = forward_repr(result.model, x, config.output_repr);
                    const std::vector<double> f_base = forward_repr(result.ema, x, config.output_repr);
                    std::vector<double> delta(f.size());
                    double d_sq = 0.0;
                    for (std::size_t k = 0; k < f.size(); ++k) {
                        const double d = f[k] - f_base[k];
                        delta[k] = 2.0 * d;  // d/df of (f - f_base)^2, baseline constant
                        d_sq += d * d;
                    }
                    unsup_loss_value += d_sq;
                    const GradientVector g =
                        grad_from_output_delta(result.model, x, delta, config.output_repr);
                    for (std::size_t p = 0; p < param_n; ++p) ugrad.values[p] += g.values[p];
                }
                unsup_pos += want;
                const double unsup_n = static_cast<double>(want);
                unsup_loss_value /= unsup_n;
                for (std::size_t p = 0; p < param_n; ++p)
                    grad.values[p] += config.lambda * (ugrad.values[p] / unsup_n);
            }

            result.model = sgd_step(result.model, grad, config.eta);
            result.ema = ema_update(result.ema, result.model, config.alpha);
            if (step_observer) step_observer(result.model);

            epoch_sup += sup_loss;
            epoch_unsup += unsup_loss_value;
        }
        EpochStats stats;
        stats.supervised_loss = epoch_sup / static_cast<double>(sup_batches);
        stats.unsupervised_loss = epoch_unsup / static_cast<double>(sup_batches);
        stats.overall_loss = stats.supervised_loss + config.lambda * stats.unsupervised_loss;
        result.history.epochs.push_back(stats);
    }
    return result;
}

}  // namespace tod
