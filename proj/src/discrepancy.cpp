#include "tod/discrepancy.hpp"

#include <algorithm>
#include <cmath>

#include "tod/rng.hpp"
#include "tod/textio.hpp"

namespace tod {

namespace {

bool bound_holds(double lhs, double rhs, double rel_tol) {
    return lhs <= rhs * (1.0 + rel_tol) + kBoundAbsTol;
}

}  // namespace

double output_discrepancy(const NetworkSnapshot& a, const NetworkSnapshot& b,
                          const std::vector<double>& x, OutputRepr repr) {
    if (!(a.spec == b.spec)) throw ConfigError("output_discrepancy: spec mismatch");
    const std::vector<double> fa = forward_repr(a, x, repr);
    const std::vector<double> fb = forward_repr(b, x, repr);
    double acc = 0.0;
    for (std::size_t k = 0; k < fa.size(); ++k) {
        const double d = fa[k] - fb[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::vector<DiscrepancyScore> cod_scores(const NetworkSnapshot& current,
                                         const NetworkSnapshot& previous,
                                         const FeatureView& features,
                                         const std::vector<int>& indices, OutputRepr repr) {
    if (!(current.spec == previous.spec)) throw ConfigError("cod_scores: spec mismatch");
    std::vector<DiscrepancyScore> out;
    out.reserve(indices.size());
    for (int i : indices) {
        const std::vector<double> x = features.row(i);  // throws RangeError on bad index
        out.push_back({i, output_discrepancy(current, previous, x, repr)});
    }
    return out;
}

BoundReport verify_theorem1(const NetworkSnapshot& net, const std::vector<double>& x, double y,
                            double eta) {
    if (net.spec.head != Head::scalar_regression)
        throw ConfigError("verify_theorem1: bound is stated for scalar_regression heads");
    if (!(eta > 0.0)) throw ArgumentError("verify_theorem1: eta must be positive");

    const LossGrad lg = grad_loss(net, x, y);
    const double grad_norm_sq = grad_output_norm_sq(net, x);
    const NetworkSnapshot after = sgd_step(net, lg.grad, eta);

    BoundReport r;
    r.eta = eta;
    r.T = 1;
    r.lhs = output_discrepancy(net, after, x);
    r.rhs = eta * std::sqrt(2.0 * lg.loss) * grad_norm_sq;
    r.slack = r.rhs - r.lhs;
    r.passed = bound_holds(r.lhs, r.rhs, kBoundSlackCoeff * eta);
    return r;
}

BoundReport verify_theorem1(const NetworkSpec& spec, std::uint64_t seed,
                            const std::vector<double>& x, double y, double eta) {
    BoundReport r = verify_theorem1(init_network(spec, seed), x, y, eta);
    r.seed = seed;
    return r;
}

MultiStepBoundReport verify_corollary2(const NetworkSnapshot& net, const std::vector<double>& x,
                                       double y, double eta, int T) {
    if (net.spec.head != Head::scalar_regression)
        throw ConfigError("verify_corollary2: bound is stated for scalar_regression heads");
    if (!(eta > 0.0)) throw ArgumentError("verify_corollary2: eta must be positive");
    if (T < 1) throw ArgumentError("verify_corollary2: T must be positive");

    const NetworkSnapshot& start = net;
    NetworkSnapshot w = start;
    MultiStepBoundReport mr;
    mr.step_losses.reserve(static_cast<std::size_t>(T));
    double loss_sum = 0.0;
    double per_step_sum = 0.0;  // sum of sqrt(L_tau) * |grad f(w_tau)|^2
    double c_max = 0.0;
    for (int tau = 0; tau < T; ++tau) {
        const LossGrad lg = grad_loss(w, x, y);
        const double gsq = grad_output_norm_sq(w, x);
        mr.step_losses.push_back(lg.loss);
        loss_sum += lg.loss;
        per_step_sum += std::sqrt(lg.loss) * gsq;
        c_max = std::max(c_max, gsq);
        w = sgd_step(w, lg.grad, eta);
    }

    BoundReport& r = mr.bound;
    r.eta = eta;
    r.T = T;
    r.lhs = output_discrepancy(start, w, x);
    r.rhs = std::sqrt(2.0 * T) * eta * c_max * std::sqrt(loss_sum);
    r.slack = r.rhs - r.lhs;
    r.passed = bound_holds(r.lhs, r.rhs, kBoundSlackCoeff * eta);

    mr.intermediate_bound = std::sqrt(2.0) * eta * per_step_sum;
    mr.c_constant = c_max;
    mr.chain_ok = bound_holds(mr.intermediate_bound, r.rhs, 1e-12);
    return mr;
}

MultiStepBoundReport verify_corollary2(const NetworkSpec& spec, std::uint64_t seed,
                                       const std::vector<double>& x, double y, double eta,
                                       int T) {
    MultiStepBoundReport mr = verify_corollary2(init_network(spec, seed), x, y, eta, T);
    mr.bound.seed = seed;
    return mr;
}

BoundReport verify_remark1(int input_dim, int output_dim, std::uint64_t seed,
                           const std::vector<double>& x, const std::vector<double>& r) {
    if (input_dim < 1 || output_dim < 1) throw ConfigError("verify_remark1: bad layer dims");
    if (static_cast<int>(x.size()) != input_dim) throw ShapeError("verify_remark1: x dim mismatch");
    if (static_cast<int>(r.size()) != input_dim * output_dim)
        throw ShapeError("verify_remark1: perturbation shape mismatch");

    // W (out x in, row-major) and b drawn uniform from the seed.
    Rng rng(seed);
    std::vector<double> weight(static_cast<std::size_t>(input_dim) * static_cast<std::size_t>(output_dim));
    std::vector<double> bias(static_cast<std::size_t>(output_dim));
    for (double& v : weight) v = rng.range(-0.5, 0.5);
    for (double& v : bias) v = rng.range(-0.5, 0.5);

    auto relu_layer = [&](const std::vector<double>& w_mat) {
        std::vector<double> out(static_cast<std::size_t>(output_dim));
        for (int j = 0; j < output_dim; ++j) {
            double acc = bias[static_cast<std::size_t>(j)];
            for (int i = 0; i < input_dim; ++i)
                acc += w_mat[static_cast<std::size_t>(j) * input_dim + i] * x[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(j)] = acc > 0.0 ? acc : 0.0;
        }
        return out;
    };

    std::vector<double> perturbed = weight;
    for (std::size_t i = 0; i < perturbed.size(); ++i) perturbed[i] += r[i];

    const std::vector<double> base = relu_layer(weight);
    const std::vector<double> moved = relu_layer(perturbed);
    double diff_sq = 0.0;
    for (int j = 0; j < output_dim; ++j) {
        const double d = moved[static_cast<std::size_t>(j)] - base[static_cast<std::size_t>(j)];
        diff_sq += d * d;
    }
    double x_sq = 0.0;
    for (double v : x) x_sq += v * v;
    double r_sq = 0.0;
    for (double v : r) r_sq += v * v;

    BoundReport rep;
    rep.seed = seed;
    rep.eta = 0.0;
    rep.T = 0;
    rep.lhs = std::sqrt(diff_sq);
    rep.rhs = std::sqrt(x_sq) * std::sqrt(r_sq);  // |x| * |r|_F
    rep.slack = rep.rhs - rep.lhs;
    rep.passed = bound_holds(rep.lhs, rep.rhs, 0.0);
    return rep;
}

GradNormTrace grad_norm_trace(const std::vector<NetworkSnapshot>& snapshots,
                              const FeatureView& features, const std::vector<int>& indices) {
    if (snapshots.empty()) throw ArgumentError("grad_norm_trace: no snapshots");
    if (indices.empty()) throw ArgumentError("grad_norm_trace: empty sample set");
    for (const NetworkSnapshot& s : snapshots)
        if (!(s.spec == snapshots.front().spec))
            throw ConfigError("grad_norm_trace: snapshots must share a spec");

    GradNormTrace trace;
    trace.entries.reserve(snapshots.size());
    for (const NetworkSnapshot& s : snapshots) {
        double sum = 0.0, sum_sq = 0.0;
        for (int i : indices) {
            const double g = grad_output_norm_sq(s, features.row(i));
            sum += g;
            sum_sq += g * g;
        }
        const double n = static_cast<double>(indices.size());
        GradNormEntry e;
        e.mean = sum / n;
        e.variance = std::max(0.0, sum_sq / n - e.mean * e.mean);
        trace.entries.push_back(e);
    }

    double mean_of_means = 0.0;
    for (const GradNormEntry& e : trace.entries) mean_of_means += e.mean;
    mean_of_means /= static_cast<double>(trace.entries.size());
    double var_of_means = 0.0;
    for (const GradNormEntry& e : trace.entries) {
        const double d = e.mean - mean_of_means;
        var_of_means += d * d;
    }
    var_of_means /= static_cast<double>(trace.entries.size());
    trace.coeff_variation = mean_of_means > 0.0 ? std::sqrt(var_of_means) / mean_of_means : 0.0;
    return trace;
}

namespace {

NetworkSpec sweep_spec(bool linear) {
    NetworkSpec spec;
    spec.layer_widths = linear ? std::vector<int>{2, 1} : std::vector<int>{2, 4, 1};
    spec.head = Head::scalar_regression;
    return spec;
}

struct SweepInstance {
    std::uint64_t seed;
    std::vector<double> x;
    double y;
};

SweepInstance sweep_instance(std::uint64_t master_seed, int trial) {
    SweepInstance inst;
    inst.seed = mix_seed(master_seed, static_cast<std::uint64_t>(trial));
    Rng rng(mix_seed(inst.seed, 7));
    inst.x = {rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)};
    inst.y = rng.range(-1.0, 1.0);
    return inst;
}

}  // namespace

BoundSweep sweep_theorem1(double eta, int trials, std::uint64_t master_seed) {
    if (trials < 1) throw ArgumentError("sweep_theorem1: trials must be >= 1");
    BoundSweep sweep;
    sweep.reports.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        const SweepInstance inst = sweep_instance(master_seed, i);
        const BoundReport r = verify_theorem1(sweep_spec(false), inst.seed, inst.x, inst.y, eta);
        sweep.num_passed += r.passed ? 1 : 0;
        sweep.reports.push_back(r);
    }
    return sweep;
}

BoundSweep sweep_theorem1_linear(double eta, int trials, std::uint64_t master_seed) {
    if (trials < 1) throw ArgumentError("sweep_theorem1_linear: trials must be >= 1");
    BoundSweep sweep;
    sweep.reports.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        const SweepInstance inst = sweep_instance(master_seed, i);
        const BoundReport r = verify_theorem1(sweep_spec(true), inst.seed, inst.x, inst.y, eta);
        sweep.num_passed += r.passed ? 1 : 0;
        // First-order expansion is exact for a linear model: lhs == rhs.
        if (std::abs(r.lhs - r.rhs) <= 1e-12 * std::max(1.0, r.rhs)) ++sweep.num_equality;
        sweep.reports.push_back(r);
    }
    return sweep;
}

BoundSweep sweep_corollary2(double eta, int T, int trials, std::uint64_t master_seed) {
    if (trials < 1) throw ArgumentError("sweep_corollary2: trials must be >= 1");
    BoundSweep sweep;
    sweep.reports.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        const SweepInstance inst = sweep_instance(master_seed, i);
        const MultiStepBoundReport mr =
            verify_corollary2(sweep_spec(false), inst.seed, inst.x, inst.y, eta, T);
        sweep.num_passed += mr.bound.passed ? 1 : 0;
        sweep.num_chain_ok += mr.chain_ok ? 1 : 0;
        sweep.reports.push_back(mr.bound);
    }
    return sweep;
}

BoundSweep sweep_remark1(int trials, std::uint64_t master_seed) {
    if (trials < 1) throw ArgumentError("sweep_remark1: trials must be >= 1");
    const int in_dim = 3, out_dim = 4;
    BoundSweep sweep;
    sweep.reports.reserve(static_cast<std::size_t>(trials));
    for (int i = 0; i < trials; ++i) {
        const std::uint64_t seed = mix_seed(master_seed, static_cast<std::uint64_t>(i));
        Rng rx(mix_seed(seed, 5));
        std::vector<double> x(in_dim);
        for (double& v : x) v = rx.range(-1.0, 1.0);
        Rng rr(mix_seed(seed, 3));
        std::vector<double> r(static_cast<std::size_t>(in_dim) * out_dim);
        for (double& v : r) v = rr.range(-0.5, 0.5);
        const BoundReport rep = verify_remark1(in_dim, out_dim, seed, x, r);
        sweep.num_passed += rep.passed ? 1 : 0;
        sweep.reports.push_back(rep);
    }
    return sweep;
}

void write_bound_reports_csv(const std::vector<BoundReport>& reports, const std::string& path) {
    CsvWriter out(path, "seed,eta,T,lhs,rhs,slack,passed");
    for (const BoundReport& r : reports)
        out.row({std::to_string(r.seed), fmt_double(r.eta), std::to_string(r.T), fmt_double(r.lhs),
                 fmt_double(r.rhs), fmt_double(r.slack), r.passed ? "1" : "0"});
    out.close();
}

}  // namespace tod
