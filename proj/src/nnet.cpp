#include "tod/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tod/rng.hpp"
#include "tod/textio.hpp"

namespace tod {

namespace {

int num_layers(const NetworkSpec& spec) {
    return static_cast<int>(spec.layer_widths.size()) - 1;
}

// Activations per layer plus the raw (pre-head) output; kept around for
// backprop. acts[0] is the input, acts[L] the raw output.
struct ForwardCache {
    std::vector<std::vector<double>> acts;
};

ForwardCache run_forward(const NetworkSnapshot& s, const std::vector<double>& x) {
    const NetworkSpec& spec = s.spec;
    if (static_cast<int>(x.size()) != spec.input_dim())
        throw ShapeError("forward: input has dim " + std::to_string(x.size()) + ", expected " +
                         std::to_string(spec.input_dim()));
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("forward: non-finite input entry");

    const int L = num_layers(spec);
    ForwardCache cache;
    cache.acts.resize(static_cast<std::size_t>(L) + 1);
    cache.acts[0] = x;

    std::size_t offset = 0;
    for (int l = 0; l < L; ++l) {
        const int in = spec.layer_widths[static_cast<std::size_t>(l)];
        const int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
        const std::vector<double>& a = cache.acts[static_cast<std::size_t>(l)];
        std::vector<double> z(static_cast<std::size_t>(out));
        for (int j = 0; j < out; ++j) {
            double acc = spec.use_bias
                             ? s.params[offset + static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
                                        static_cast<std::size_t>(j)]
                             : 0.0;
            const std::size_t wrow = offset + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
            for (int i = 0; i < in; ++i) acc += s.params[wrow + static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(j)] = acc;
        }
        if (l < L - 1)
            for (double& v : z) v = v > 0.0 ? v : 0.0;  // relu on hidden layers
        cache.acts[static_cast<std::size_t>(l) + 1] = std::move(z);
        offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
                  (spec.use_bias ? static_cast<std::size_t>(out) : 0);
    }
    return cache;
}

std::vector<double> softmax(const std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
        p[k] = std::exp(z[k] - zmax);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    return p;
}

double log_sum_exp(const std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    return zmax + std::log(sum);
}

// Backprop of an output-side delta (defined on the raw pre-head output)
// down to the flat parameter gradient.
GradientVector backprop(const NetworkSnapshot& s, const ForwardCache& cache,
                        std::vector<double> delta) {
    const NetworkSpec& spec = s.spec;
    const int L = num_layers(spec);
    GradientVector g;
    g.values.assign(s.params.size(), 0.0);

    // Per-layer parameter offsets.
    std::vector<std::size_t> offsets(static_cast<std::size_t>(L));
    std::size_t off = 0;
    for (int l = 0; l < L; ++l) {
        offsets[static_cast<std::size_t>(l)] = off;
        off += static_cast<std::size_t>(spec.layer_widths[static_cast<std::size_t>(l)]) *
                   static_cast<std::size_t>(spec.layer_widths[static_cast<std::size_t>(l) + 1]) +
               (spec.use_bias ? static_cast<std::size_t>(spec.layer_widths[static_cast<std::size_t>(l) + 1])
                              : 0);
    }

    for (int l = L - 1; l >= 0; --l) {
        const int in = spec.layer_widths[static_cast<std::size_t>(l)];
        const int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
        const std::vector<double>& a = cache.acts[static_cast<std::size_t>(l)];
        const std::size_t base = offsets[static_cast<std::size_t>(l)];
        const std::size_t bias_base = base + static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
        for (int j = 0; j < out; ++j) {
            const double d = delta[static_cast<std::size_t>(j)];
            const std::size_t wrow = base + static_cast<std::size_t>(j) * static_cast<std::size_t>(in);
            for (int i = 0; i < in; ++i)
                g.values[wrow + static_cast<std::size_t>(i)] = d * a[static_cast<std::size_t>(i)];
            if (spec.use_bias) g.values[bias_base + static_cast<std::size_t>(j)] = d;
        }
        if (l > 0) {
            std::vector<double> prev(static_cast<std::size_t>(in), 0.0);
            for (int i = 0; i < in; ++i) {
                // relu derivative: the cached activation is already post-relu,
                // so a[i] > 0 marks the active units.
                if (a[static_cast<std::size_t>(i)] <= 0.0) continue;
                double acc = 0.0;
                for (int j = 0; j < out; ++j)
                    acc += s.params[base + static_cast<std::size_t>(j) * static_cast<std::size_t>(in) +
                                    static_cast<std::size_t>(i)] *
                           delta[static_cast<std::size_t>(j)];
                prev[static_cast<std::size_t>(i)] = acc;
            }
            delta = std::move(prev);
        }
    }
    return g;
}

const char* head_name(Head h) {
    return h == Head::scalar_regression ? "scalar_regression" : "softmax_classification";
}

const char* activation_name(Activation a) {
    (void)a;
    return "relu";
}

}  // namespace

void validate_spec(const NetworkSpec& spec) {
    if (spec.layer_widths.size() < 2)
        throw ConfigError("network spec needs at least input and output widths");
    for (int w : spec.layer_widths)
        if (w < 1) throw ConfigError("network spec: every layer width must be >= 1");
    if (spec.head == Head::scalar_regression && spec.layer_widths.back() != 1)
        throw ConfigError("scalar_regression head requires final width 1");
    if (spec.head == Head::softmax_classification && spec.layer_widths.back() < 2)
        throw ConfigError("softmax_classification head requires final width >= 2");
    if (!(spec.init_scale > 0.0)) throw ConfigError("init_scale must be positive");
}

std::size_t param_count(const NetworkSpec& spec) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l)
        n += static_cast<std::size_t>(spec.layer_widths[l]) * static_cast<std::size_t>(spec.layer_widths[l + 1]) +
             (spec.use_bias ? static_cast<std::size_t>(spec.layer_widths[l + 1]) : 0);
    return n;
}

NetworkSnapshot init_network(const NetworkSpec& spec, std::uint64_t seed) {
    validate_spec(spec);
    NetworkSnapshot s;
    s.spec = spec;
    s.params.resize(param_count(spec));
    Rng rng(seed);
    for (double& p : s.params) p = rng.range(-spec.init_scale, spec.init_scale);
    s.step_count = 0;
    return s;
}

std::vector<double> forward_logits(const NetworkSnapshot& s, const std::vector<double>& x) {
    ForwardCache cache = run_forward(s, x);
    return cache.acts.back();
}

std::vector<double> forward(const NetworkSnapshot& s, const std::vector<double>& x) {
    std::vector<double> z = forward_logits(s, x);
    if (s.spec.head == Head::softmax_classification) return softmax(z);
    return z;
}

std::vector<double> forward_repr(const NetworkSnapshot& s, const std::vector<double>& x,
                                 OutputRepr repr) {
    if (repr == OutputRepr::logits) return forward_logits(s, x);
    return forward(s, x);
}

LossGrad grad_loss(const NetworkSnapshot& s, const std::vector<double>& x, double y) {
    ForwardCache cache = run_forward(s, x);
    const std::vector<double>& z = cache.acts.back();
    LossGrad out;
    if (s.spec.head == Head::scalar_regression) {
        const double f = z[0];
        const double r = y - f;
        out.loss = 0.5 * r * r;
        out.grad = backprop(s, cache, {f - y});
    } else {
        const int K = s.spec.output_dim();
        const double ky = std::round(y);
        if (ky != y || ky < 0.0 || ky >= static_cast<double>(K))
            throw ConfigError("classification label must be an integral class index in [0, " +
                              std::to_string(K) + ")");
        const int k = static_cast<int>(ky);
        out.loss = log_sum_exp(z) - z[static_cast<std::size_t>(k)];
        std::vector<double> delta = softmax(z);
        delta[static_cast<std::size_t>(k)] -= 1.0;
        out.grad = backprop(s, cache, std::move(delta));
    }
    return out;
}

std::vector<std::vector<double>> grad_output(const NetworkSnapshot& s,
                                             const std::vector<double>& x) {
    ForwardCache cache = run_forward(s, x);
    const int K = s.spec.output_dim();
    std::vector<std::vector<double>> jac;
    jac.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::vector<double> delta(static_cast<std::size_t>(K), 0.0);
        delta[static_cast<std::size_t>(k)] = 1.0;
        jac.push_back(backprop(s, cache, std::move(delta)).values);
    }
    return jac;
}

double grad_output_norm_sq(const NetworkSnapshot& s, const std::vector<double>& x) {
    ForwardCache cache = run_forward(s, x);
    const int K = s.spec.output_dim();
    double norm_sq = 0.0;
    for (int k = 0; k < K; ++k) {
        std::vector<double> delta(static_cast<std::size_t>(K), 0.0);
        delta[static_cast<std::size_t>(k)] = 1.0;
        const GradientVector row = backprop(s, cache, std::move(delta));
        for (double v : row.values) norm_sq += v * v;
    }
    return norm_sq;
}

GradientVector grad_from_output_delta(const NetworkSnapshot& s, const std::vector<double>& x,
                                      const std::vector<double>& delta, OutputRepr repr) {
    if (static_cast<int>(delta.size()) != s.spec.output_dim())
        throw ShapeError("grad_from_output_delta: delta size mismatch");
    ForwardCache cache = run_forward(s, x);
    if (s.spec.head == Head::softmax_classification && repr == OutputRepr::probabilities) {
        // Chain through softmax: dz_j = p_j * (dp_j - sum_k dp_k * p_k).
        const std::vector<double> p = softmax(cache.acts.back());
        double dot = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) dot += delta[k] * p[k];
        std::vector<double> dz(p.size());
        for (std::size_t j = 0; j < p.size(); ++j) dz[j] = p[j] * (delta[j] - dot);
        return backprop(s, cache, std::move(dz));
    }
    return backprop(s, cache, delta);
}

NetworkSnapshot sgd_step(const NetworkSnapshot& s, const GradientVector& g, double eta) {
    if (!(eta > 0.0)) throw ArgumentError("sgd_step: eta must be positive");
    if (g.values.size() != s.params.size()) throw ShapeError("sgd_step: gradient size mismatch");
    for (double v : g.values)
        if (!std::isfinite(v)) throw NumericError("sgd_step: non-finite gradient entry");
    NetworkSnapshot out;
    out.spec = s.spec;
    out.params.resize(s.params.size());
    for (std::size_t i = 0; i < s.params.size(); ++i) out.params[i] = s.params[i] - eta * g.values[i];
    out.step_count = s.step_count + 1;
    return out;
}

NetworkSnapshot ema_update(const NetworkSnapshot& ema, const NetworkSnapshot& current,
                           double alpha) {
    if (!(ema.spec == current.spec)) throw ConfigError("ema_update: spec mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("ema_update: alpha must be in [0,1]");
    NetworkSnapshot out;
    out.spec = current.spec;
    out.params.resize(current.params.size());
    for (std::size_t i = 0; i < current.params.size(); ++i)
        out.params[i] = alpha * ema.params[i] + (1.0 - alpha) * current.params[i];
    out.step_count = current.step_count;
    return out;
}

void save_snapshot(const NetworkSnapshot& s, const std::string& path) {
    std::ostringstream out;
    out << "todsnap 1\n";
    out << "widths";
    for (int w : s.spec.layer_widths) out << ' ' << w;
    out << "\n";
    out << "activation " << activation_name(s.spec.activation) << "\n";
    out << "head " << head_name(s.spec.head) << "\n";
    out << "bias " << (s.spec.use_bias ? 1 : 0) << "\n";
    out << "init_scale " << fmt_double_hex(s.spec.init_scale) << "\n";
    out << "step_count " << s.step_count << "\n";
    out << "params " << s.params.size() << "\n";
    for (double p : s.params) out << fmt_double_hex(p) << "\n";
    write_text_file(path, out.str());
}

NetworkSnapshot load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("snapshot not found: " + path);
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "todsnap" || version != 1)
        throw ParseError("unrecognized snapshot header in " + path);

    NetworkSnapshot s;
    std::string key;
    in >> key;
    if (key != "widths") throw ParseError("expected 'widths' in " + path);
    {
        std::string rest;
        std::getline(in, rest);
        std::istringstream ws(rest);
        int w;
        while (ws >> w) s.spec.layer_widths.push_back(w);
    }
    std::string value;
    in >> key >> value;
    if (key != "activation" || value != "relu") throw ParseError("bad activation in " + path);
    in >> key >> value;
    if (key != "head") throw ParseError("expected 'head' in " + path);
    if (value == "scalar_regression")
        s.spec.head = Head::scalar_regression;
    else if (value == "softmax_classification")
        s.spec.head = Head::softmax_classification;
    else
        throw ParseError("bad head '" + value + "' in " + path);
    in >> key >> value;
    if (key != "bias") throw ParseError("expected 'bias' in " + path);
    s.spec.use_bias = value != "0";
    in >> key >> value;
    if (key != "init_scale") throw ParseError("expected 'init_scale' in " + path);
    s.spec.init_scale = parse_double(value, path);
    in >> key >> s.step_count;
    if (key != "step_count") throw ParseError("expected 'step_count' in " + path);
    std::size_t n = 0;
    in >> key >> n;
    if (key != "params") throw ParseError("expected 'params' in " + path);
    validate_spec(s.spec);
    if (n != param_count(s.spec)) throw ParseError("param count mismatch in " + path);
    s.params.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        in >> value;
        if (!in) throw ParseError("truncated params in " + path);
        s.params[i] = parse_double(value, path);
    }
    return s;
}

}  // namespace tod
