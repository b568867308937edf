#include "tod/config.hpp"

#include <json.hpp>

#include "tod/textio.hpp"

namespace tod {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

DatasetKind dataset_kind_from_name(const std::string& name, const std::string& where) {
    if (name == "two_moons") return DatasetKind::two_moons;
    if (name == "blobs") return DatasetKind::blobs;
    if (name == "csv") return DatasetKind::csv;
    throw ConfigError(where + ": unknown dataset kind '" + name +
                      "' (valid: two_moons, blobs, csv)");
}

const char* dataset_kind_name(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::two_moons: return "two_moons";
        case DatasetKind::blobs: return "blobs";
        case DatasetKind::csv: return "csv";
    }
    return "unknown";
}

TieRule tie_rule_from_name(const std::string& name, const std::string& where) {
    if (name == "lowest_index") return TieRule::lowest_index;
    if (name == "seeded_shuffle") return TieRule::seeded_shuffle;
    throw ConfigError(where + ": unknown tie_rule '" + name +
                      "' (valid: lowest_index, seeded_shuffle)");
}

OutputRepr repr_from_name(const std::string& name, const std::string& where) {
    if (name == "probabilities") return OutputRepr::probabilities;
    if (name == "logits") return OutputRepr::logits;
    throw ConfigError(where + ": unknown output_repr '" + name +
                      "' (valid: probabilities, logits)");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::string& where) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
    check_keys(root, where,
               {"dataset", "eval", "network", "schedule", "strategy", "train",
                "reinit_per_cycle", "seeds"});

    ExperimentConfig config;
    if (root.contains("dataset")) {
        const json& d = root.at("dataset");
        check_keys(d, where + ".dataset",
                   {"kind", "n", "noise", "k", "spread", "seed", "path", "label_column",
                    "delimiter", "header"});
        std::string kind = dataset_kind_name(config.dataset.kind);
        read_field(d, "kind", kind, where + ".dataset");
        config.dataset.kind = dataset_kind_from_name(kind, where + ".dataset.kind");
        read_field(d, "n", config.dataset.n, where + ".dataset");
        read_field(d, "noise", config.dataset.noise, where + ".dataset");
        read_field(d, "k", config.dataset.k, where + ".dataset");
        read_field(d, "spread", config.dataset.spread, where + ".dataset");
        read_field(d, "seed", config.dataset.seed, where + ".dataset");
        read_field(d, "path", config.dataset.path, where + ".dataset");
        read_field(d, "label_column", config.dataset.schema.label_column, where + ".dataset");
        std::string delim(1, config.dataset.schema.delimiter);
        read_field(d, "delimiter", delim, where + ".dataset");
        if (delim.size() != 1)
            throw ConfigError(where + ".dataset.delimiter: must be a single character");
        config.dataset.schema.delimiter = delim[0];
        read_field(d, "header", config.dataset.schema.header, where + ".dataset");
    }
    if (root.contains("eval")) {
        const json& e = root.at("eval");
        check_keys(e, where + ".eval", {"test_fraction"});
        read_field(e, "test_fraction", config.eval.test_fraction, where + ".eval");
    }
    if (root.contains("network")) {
        const json& n = root.at("network");
        check_keys(n, where + ".network", {"hidden", "init_scale"});
        read_field(n, "hidden", config.network.hidden, where + ".network");
        read_field(n, "init_scale", config.network.init_scale, where + ".network");
    }
    if (root.contains("schedule")) {
        const json& s = root.at("schedule");
        check_keys(s, where + ".schedule", {"start_fraction", "budget_fraction", "num_cycles"});
        read_field(s, "start_fraction", config.schedule.start_fraction, where + ".schedule");
        read_field(s, "budget_fraction", config.schedule.budget_fraction, where + ".schedule");
        read_field(s, "num_cycles", config.schedule.num_cycles, where + ".schedule");
    }
    if (root.contains("strategy")) {
        const json& s = root.at("strategy");
        check_keys(s, where + ".strategy", {"kind", "tie_rule"});
        std::string kind = strategy_kind_name(config.strategy.kind);
        read_field(s, "kind", kind, where + ".strategy");
        config.strategy.kind = strategy_kind_from_name(kind);
        std::string tie = config.strategy.tie_rule == TieRule::lowest_index ? "lowest_index"
                                                                            : "seeded_shuffle";
        read_field(s, "tie_rule", tie, where + ".strategy");
        config.strategy.tie_rule = tie_rule_from_name(tie, where + ".strategy.tie_rule");
    }
    if (root.contains("train")) {
        const json& t = root.at("train");
        check_keys(t, where + ".train",
                   {"eta", "lambda", "alpha", "epochs", "batch_size", "unsup_batch_size",
                    "output_repr"});
        read_field(t, "eta", config.train.eta, where + ".train");
        read_field(t, "lambda", config.train.lambda, where + ".train");
        read_field(t, "alpha", config.train.alpha, where + ".train");
        read_field(t, "epochs", config.train.epochs, where + ".train");
        read_field(t, "batch_size", config.train.batch_size, where + ".train");
        read_field(t, "unsup_batch_size", config.train.unsup_batch_size, where + ".train");
        std::string repr =
            config.train.output_repr == OutputRepr::probabilities ? "probabilities" : "logits";
        read_field(t, "output_repr", repr, where + ".train");
        config.train.output_repr = repr_from_name(repr, where + ".train.output_repr");
    }
    read_field(root, "reinit_per_cycle", config.reinit_per_cycle, where);
    read_field(root, "seeds", config.seeds, where);

    validate_experiment_config(config);
    return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return parse_experiment_config(read_text_file(path), path);
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
    json root;
    root["dataset"]["kind"] = dataset_kind_name(config.dataset.kind);
    root["dataset"]["n"] = config.dataset.n;
    root["dataset"]["noise"] = config.dataset.noise;
    root["dataset"]["k"] = config.dataset.k;
    root["dataset"]["spread"] = config.dataset.spread;
    root["dataset"]["seed"] = config.dataset.seed;
    root["dataset"]["path"] = config.dataset.path;
    root["dataset"]["label_column"] = config.dataset.schema.label_column;
    root["dataset"]["delimiter"] = std::string(1, config.dataset.schema.delimiter);
    root["dataset"]["header"] = config.dataset.schema.header;
    root["eval"]["test_fraction"] = config.eval.test_fraction;
    root["network"]["hidden"] = config.network.hidden;
    root["network"]["init_scale"] = config.network.init_scale;
    root["schedule"]["start_fraction"] = config.schedule.start_fraction;
    root["schedule"]["budget_fraction"] = config.schedule.budget_fraction;
    root["schedule"]["num_cycles"] = config.schedule.num_cycles;
    root["strategy"]["kind"] = strategy_kind_name(config.strategy.kind);
    root["strategy"]["tie_rule"] =
        config.strategy.tie_rule == TieRule::lowest_index ? "lowest_index" : "seeded_shuffle";
    root["train"]["eta"] = config.train.eta;
    root["train"]["lambda"] = config.train.lambda;
    root["train"]["alpha"] = config.train.alpha;
    root["train"]["epochs"] = config.train.epochs;
    root["train"]["batch_size"] = config.train.batch_size;
    root["train"]["unsup_batch_size"] = config.train.unsup_batch_size;
    root["train"]["output_repr"] =
        config.train.output_repr == OutputRepr::probabilities ? "probabilities" : "logits";
    root["reinit_per_cycle"] = config.reinit_per_cycle;
    root["seeds"] = config.seeds;
    return root.dump(2) + "\n";
}

}  // namespace tod
