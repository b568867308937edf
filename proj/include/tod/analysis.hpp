#pragma once

#include <string>
#include <vector>

#include "tod/discrepancy.hpp"

namespace tod {

struct SpearmanResult {
    double value = 0.0;
    bool defined = false;  // false when either vector is constant
};

// Spearman rank correlation with average ranks for ties.
SpearmanResult spearman(const std::vector<double>& a, const std::vector<double>& b);

// One percentile slice of the score-sorted samples: samples ranked in
// [top_fraction_lo, top_fraction_hi) by descending score.
struct Bucket {
    double top_fraction_lo = 0.0;
    double top_fraction_hi = 0.0;
    int count = 0;
    double mean_loss = 0.0;
};

struct BucketReport {
    std::vector<Bucket> buckets;  // descending score order; counts differ by <= 1
};

// Sorts by score descending, splits into num_buckets near-equal buckets,
// reports mean real loss per bucket. real_losses aligns with scores by
// position.
BucketReport bucket_mean_loss(const std::vector<DiscrepancyScore>& scores,
                              const std::vector<double>& real_losses, int num_buckets);

inline constexpr int kDefaultNumBuckets = 20;

struct CaptureCurve {
    double top_loss_fraction = 0.0;
    std::vector<double> sampling_fractions;
    std::vector<double> capture;  // aligned with sampling_fractions; in [0,1]
};

// For each sampling fraction p: the share of the true top-q-by-loss samples
// found inside the top-p-by-score set (q = top_loss_fraction).
CaptureCurve capture_curve(const std::vector<DiscrepancyScore>& scores,
                           const std::vector<double>& real_losses, double top_loss_fraction,
                           const std::vector<double>& sampling_fractions);

inline constexpr double kDefaultTopLossFraction = 0.25;

void write_bucket_csv(const BucketReport& report, const std::string& path);
void write_capture_csv(const CaptureCurve& curve, const std::string& path);

}  // namespace tod
