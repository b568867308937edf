#include "tod/sampling.hpp"

#include <algorithm>

#include "tod/rng.hpp"

namespace tod {

const char* strategy_kind_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::random: return "random";
        case StrategyKind::cod: return "cod";
        case StrategyKind::emaod: return "emaod";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_name(const std::string& name) {
    if (name == "random") return StrategyKind::random;
    if (name == "cod") return StrategyKind::cod;
    if (name == "emaod") return StrategyKind::emaod;
    throw ConfigError("unknown strategy '" + name + "' (valid: random, cod, emaod)");
}

SelectionResult select_top_b(const std::vector<DiscrepancyScore>& scores, int b, TieRule tie_rule,
                             std::uint64_t seed) {
    if (b < 1) throw ArgumentError("select_top_b: b must be >= 1");
    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    if (tie_rule == TieRule::lowest_index) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
            if (scores[a].value != scores[c].value) return scores[a].value > scores[c].value;
            return scores[a].sample_index < scores[c].sample_index;
        });
    } else {
        // Seeded priority per sample index; stateless so the ordering does not
        // depend on the position of a score in the list.
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
            if (scores[a].value != scores[c].value) return scores[a].value > scores[c].value;
            const std::uint64_t pa = mix_seed(seed, static_cast<std::uint64_t>(scores[a].sample_index));
            const std::uint64_t pc = mix_seed(seed, static_cast<std::uint64_t>(scores[c].sample_index));
            if (pa != pc) return pa < pc;
            return scores[a].sample_index < scores[c].sample_index;
        });
    }

    const std::size_t take = std::min(static_cast<std::size_t>(b), scores.size());
    SelectionResult result;
    result.chosen.reserve(take);
    result.scores_used.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        result.chosen.push_back(scores[order[i]].sample_index);
        result.scores_used.push_back(scores[order[i]]);
    }
    return result;
}

SelectionResult select_random(const std::vector<int>& unlabeled, int b, std::uint64_t seed) {
    if (unlabeled.empty()) throw ArgumentError("select_random: empty pool");
    if (b < 1) throw ArgumentError("select_random: b must be >= 1");
    Rng rng(seed);
    const std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(unlabeled.size()), b);
    SelectionResult result;
    result.chosen.reserve(picks.size());
    for (int p : picks) result.chosen.push_back(unlabeled[static_cast<std::size_t>(p)]);
    return result;
}

SelectionResult acquire(const AcquisitionStrategy& strategy, const PoolState& pool,
                        const NetworkSnapshot& current, const NetworkSnapshot* previous_or_ema,
                        const FeatureView& features, int b, std::uint64_t seed, OutputRepr repr) {
    if (pool.unlabeled.empty()) throw ArgumentError("acquire: pool has no unlabeled samples");
    if (strategy.kind == StrategyKind::random) return select_random(pool.unlabeled, b, seed);
    if (previous_or_ema == nullptr)
        throw ConfigError("acquire: cod/emaod need a comparison snapshot");
    const std::vector<DiscrepancyScore> scores =
        cod_scores(current, *previous_or_ema, features, pool.unlabeled, repr);
    return select_top_b(scores, b, strategy.tie_rule, seed);
}

}  // namespace tod
