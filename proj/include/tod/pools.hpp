#pragma once

#include <cstdint>
#include <vector>

#include "tod/errors.hpp"

namespace tod {

// Partition of the training indices. Both lists are kept sorted ascending;
// they stay disjoint and their union covers [0, n). The labeled side only
// ever grows.
struct PoolState {
    std::vector<int> labeled;
    std::vector<int> unlabeled;

    int total() const { return static_cast<int>(labeled.size() + unlabeled.size()); }
};

// round(start_fraction * n) uniformly chosen labeled indices, rest unlabeled.
PoolState init_pools(int n, double start_fraction, std::uint64_t seed);

// Moves the given indices from unlabeled to labeled. Throws RangeError if
// an index is not currently unlabeled.
void extend_labeled(PoolState& pools, const std::vector<int>& newly_labeled);

// Holds ground-truth labels for the training pool. Labels enter training
// only through reveal(); peek() exists for evaluation-time diagnostics
// (mean real loss over the unlabeled pool) and never marks anything revealed.
class Oracle {
public:
    explicit Oracle(std::vector<double> labels)
        : labels_(std::move(labels)), revealed_(labels_.size(), false) {}

    // Returns the hidden label and marks the index revealed. Revealing the
    // same index again returns the same label and counts once.
    double reveal(int index) {
        check(index);
        if (!revealed_[static_cast<std::size_t>(index)]) {
            revealed_[static_cast<std::size_t>(index)] = true;
            ++reveal_count_;
        }
        return labels_[static_cast<std::size_t>(index)];
    }

    // Evaluation-only read; does not count as annotation.
    double peek(int index) const {
        check(index);
        return labels_[static_cast<std::size_t>(index)];
    }

    bool revealed(int index) const {
        check(index);
        return revealed_[static_cast<std::size_t>(index)];
    }

    int reveal_count() const { return reveal_count_; }
    int size() const { return static_cast<int>(labels_.size()); }

private:
    void check(int index) const {
        if (index < 0 || index >= static_cast<int>(labels_.size()))
            throw RangeError("Oracle: index out of range");
    }

    std::vector<double> labels_;
    std::vector<bool> revealed_;
    int reveal_count_ = 0;
};

}  // namespace tod
