#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tod/errors.hpp"

namespace tod {

enum class Activation { relu };
enum class Head { scalar_regression, softmax_classification };

// Which output representation downstream consumers see. Regression heads
// have a single raw output either way; classification heads expose either
// post-softmax probabilities or raw logits.
enum class OutputRepr { probabilities, logits };

struct NetworkSpec {
    std::vector<int> layer_widths;  // input dim first, output dim last
    Activation activation = Activation::relu;
    Head head = Head::scalar_regression;
    double init_scale = 0.5;
    bool use_bias = true;

    int input_dim() const { return layer_widths.front(); }
    int output_dim() const { return layer_widths.back(); }
    bool operator==(const NetworkSpec&) const = default;
};

void validate_spec(const NetworkSpec& spec);

// Total number of weights and biases implied by the spec.
// Layout of the flat parameter vector, fixed for serialization and
// snapshot comparison: layer by layer, W row-major (out x in), then biases.
std::size_t param_count(const NetworkSpec& spec);

// Immutable parameter state of the network at one point in optimization.
// Every update returns a fresh snapshot; functions never mutate inputs.
struct NetworkSnapshot {
    NetworkSpec spec;
    std::vector<double> params;
    std::int64_t step_count = 0;
};

struct GradientVector {
    std::vector<double> values;  // same length and order as params
};

struct LossGrad {
    double loss = 0.0;
    GradientVector grad;
};

// Seeded init: every parameter uniform in [-init_scale, +init_scale],
// drawn in parameter-vector order from Rng(seed).
NetworkSnapshot init_network(const NetworkSpec& spec, std::uint64_t seed);

// Head output: raw scalar for regression, probability vector for softmax.
std::vector<double> forward(const NetworkSnapshot& s, const std::vector<double>& x);

// Raw pre-head output (logits for classification, same scalar for regression).
std::vector<double> forward_logits(const NetworkSnapshot& s, const std::vector<double>& x);

std::vector<double> forward_repr(const NetworkSnapshot& s, const std::vector<double>& x,
                                 OutputRepr repr);

// Task loss and its exact analytic gradient w.r.t. params.
// Regression: L = 0.5*(y - f)^2 with y real. Classification: cross-entropy
// with y an integral class index in [0, num_classes).
LossGrad grad_loss(const NetworkSnapshot& s, const std::vector<double>& x, double y);

// Exact Jacobian of the raw pre-head output: output_dim rows, each of
// param_count entries.
std::vector<std::vector<double>> grad_output(const NetworkSnapshot& s,
                                             const std::vector<double>& x);

// Squared Frobenius norm of the grad_output Jacobian.
double grad_output_norm_sq(const NetworkSnapshot& s, const std::vector<double>& x);

// Backpropagates an arbitrary output-side delta (given on the chosen
// representation) to a parameter gradient. This is the building block for
// the consistency loss, whose gradient is 2*(f - f_baseline) at the output.
GradientVector grad_from_output_delta(const NetworkSnapshot& s, const std::vector<double>& x,
                                      const std::vector<double>& delta, OutputRepr repr);

// params' = params - eta * g; step_count + 1.
NetworkSnapshot sgd_step(const NetworkSnapshot& s, const GradientVector& g, double eta);

// params' = alpha * ema.params + (1 - alpha) * current.params.
// The result carries current.step_count (the step it mirrors).
NetworkSnapshot ema_update(const NetworkSnapshot& ema, const NetworkSnapshot& current,
                           double alpha);

// Text snapshot format, version line first, params as hexfloat so the
// round-trip is bit-exact.
void save_snapshot(const NetworkSnapshot& s, const std::string& path);
NetworkSnapshot load_snapshot(const std::string& path);

}  // namespace tod
