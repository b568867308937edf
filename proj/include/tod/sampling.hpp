#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tod/data.hpp"
#include "tod/discrepancy.hpp"
#include "tod/nnet.hpp"
#include "tod/pools.hpp"

namespace tod {

enum class StrategyKind { random, cod, emaod };
enum class TieRule { lowest_index, seeded_shuffle };

struct AcquisitionStrategy {
    StrategyKind kind = StrategyKind::cod;
    TieRule tie_rule = TieRule::lowest_index;

    bool operator==(const AcquisitionStrategy&) const = default;
};

const char* strategy_kind_name(StrategyKind kind);
StrategyKind strategy_kind_from_name(const std::string& name);

struct SelectionResult {
    std::vector<int> chosen;                   // no duplicates, descending score order
    std::vector<DiscrepancyScore> scores_used;  // aligned with chosen; empty for random
};

// The b largest scores; ties broken by the rule (lowest_index, or a seeded
// priority per sample index). If b >= |scores| every index is returned.
SelectionResult select_top_b(const std::vector<DiscrepancyScore>& scores, int b, TieRule tie_rule,
                             std::uint64_t seed = 0);

// Uniform sample without replacement from the pool, deterministic per seed.
SelectionResult select_random(const std::vector<int>& unlabeled, int b, std::uint64_t seed);

// Strategy dispatch. cod/emaod score the unlabeled pool against the
// comparison snapshot (previous cycle's model, or the EMA baseline) and take
// the top b; random ignores the snapshots.
SelectionResult acquire(const AcquisitionStrategy& strategy, const PoolState& pool,
                        const NetworkSnapshot& current, const NetworkSnapshot* previous_or_ema,
                        const FeatureView& features, int b, std::uint64_t seed,
                        OutputRepr repr = OutputRepr::probabilities);

}  // namespace tod
