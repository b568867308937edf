#include "tod/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "tod/textio.hpp"

namespace tod {

namespace {

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Descending-score order with index tie-break; shared by bucket and capture
// analyses so both are plain rank statistics.
std::vector<std::size_t> descending_order(const std::vector<double>& values,
                                          const std::vector<int>& tie_keys) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return tie_keys[a] < tie_keys[b];
    });
    return order;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ArgumentError("spearman: length mismatch");
    if (a.size() < 2) throw ArgumentError("spearman: need at least 2 points");
    const std::vector<double> ra = average_ranks(a);
    const std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = ra[i] - mean_a;
        const double db = rb[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    SpearmanResult result;
    if (var_a <= 0.0 || var_b <= 0.0) return result;  // constant input: undefined
    result.value = cov / std::sqrt(var_a * var_b);
    result.value = std::clamp(result.value, -1.0, 1.0);
    result.defined = true;
    return result;
}

BucketReport bucket_mean_loss(const std::vector<DiscrepancyScore>& scores,
                              const std::vector<double>& real_losses, int num_buckets) {
    if (scores.size() != real_losses.size()) throw ArgumentError("bucket_mean_loss: length mismatch");
    if (num_buckets < 2) throw ArgumentError("bucket_mean_loss: need at least 2 buckets");
    const int n = static_cast<int>(scores.size());
    if (num_buckets > n) throw ArgumentError("bucket_mean_loss: more buckets than samples");

    std::vector<double> values(scores.size());
    std::vector<int> keys(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        values[i] = scores[i].value;
        keys[i] = scores[i].sample_index;
    }
    const std::vector<std::size_t> order = descending_order(values, keys);

    BucketReport report;
    const int base = n / num_buckets;
    const int remainder = n % num_buckets;
    int pos = 0;
    for (int bkt = 0; bkt < num_buckets; ++bkt) {
        const int size = base + (bkt < remainder ? 1 : 0);
        Bucket bucket;
        bucket.top_fraction_lo = static_cast<double>(pos) / static_cast<double>(n);
        bucket.top_fraction_hi = static_cast<double>(pos + size) / static_cast<double>(n);
        bucket.count = size;
        double sum = 0.0;
        for (int i = pos; i < pos + size; ++i) sum += real_losses[order[static_cast<std::size_t>(i)]];
        bucket.mean_loss = sum / static_cast<double>(size);
        report.buckets.push_back(bucket);
        pos += size;
    }
    return report;
}

CaptureCurve capture_curve(const std::vector<DiscrepancyScore>& scores,
                           const std::vector<double>& real_losses, double top_loss_fraction,
                           const std::vector<double>& sampling_fractions) {
    if (scores.size() != real_losses.size()) throw ArgumentError("capture_curve: length mismatch");
    if (scores.empty()) throw ArgumentError("capture_curve: empty input");
    if (!(top_loss_fraction > 0.0 && top_loss_fraction <= 1.0))
        throw ArgumentError("capture_curve: top_loss_fraction must be in (0,1]");
    for (double p : sampling_fractions)
        if (!(p > 0.0 && p <= 1.0))
            throw ArgumentError("capture_curve: sampling fractions must be in (0,1]");

    const int n = static_cast<int>(scores.size());
    std::vector<double> score_values(scores.size());
    std::vector<int> keys(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        score_values[i] = scores[i].value;
        keys[i] = scores[i].sample_index;
    }
    const std::vector<std::size_t> by_score = descending_order(score_values, keys);
    const std::vector<std::size_t> by_loss = descending_order(real_losses, keys);

    const int count_q = std::max(1, static_cast<int>(std::llround(top_loss_fraction * n)));
    std::vector<char> is_top_loss(scores.size(), 0);
    for (int i = 0; i < count_q; ++i) is_top_loss[by_loss[static_cast<std::size_t>(i)]] = 1;

    // Prefix hit counts over the score order; capture at k is hits[k]/count_q.
    std::vector<int> hits(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i)
        hits[static_cast<std::size_t>(i) + 1] =
            hits[static_cast<std::size_t>(i)] + (is_top_loss[by_score[static_cast<std::size_t>(i)]] ? 1 : 0);

    CaptureCurve curve;
    curve.top_loss_fraction = top_loss_fraction;
    curve.sampling_fractions = sampling_fractions;
    curve.capture.reserve(sampling_fractions.size());
    for (double p : sampling_fractions) {
        const int k = std::min(n, std::max(1, static_cast<int>(std::llround(p * n))));
        curve.capture.push_back(static_cast<double>(hits[static_cast<std::size_t>(k)]) /
                                static_cast<double>(count_q));
    }
    return curve;
}

void write_bucket_csv(const BucketReport& report, const std::string& path) {
    CsvWriter out(path, "top_fraction_lo,top_fraction_hi,count,mean_loss");
    for (const Bucket& b : report.buckets)
        out.row({fmt_double(b.top_fraction_lo), fmt_double(b.top_fraction_hi),
                 std::to_string(b.count), fmt_double(b.mean_loss)});
    out.close();
}

void write_capture_csv(const CaptureCurve& curve, const std::string& path) {
    CsvWriter out(path, "sampling_fraction,capture");
    for (std::size_t i = 0; i < curve.sampling_fractions.size(); ++i)
        out.row({fmt_double(curve.sampling_fractions[i]), fmt_double(curve.capture[i])});
    out.close();
}

}  // namespace tod
