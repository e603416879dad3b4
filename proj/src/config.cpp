#include "qjet/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace qjet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
    std::istringstream in(v);
    T out;
    in >> out;
    if (in.fail() || !in.eof())
        throw ValidationError("config: key '" + key + "' has malformed value '" + v + "'");
    return out;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "model") cfg.model = val;
        else if (key == "hidden") cfg.hidden = parse_number<std::size_t>(val, key);
        else if (key == "layers") cfg.layers = parse_number<std::size_t>(val, key);
        else if (key == "lr") cfg.lr = parse_number<double>(val, key);
        else if (key == "epochs") cfg.epochs = parse_number<std::size_t>(val, key);
        else if (key == "batch") cfg.batch = parse_number<std::size_t>(val, key);
        else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(val, key);
        else if (key == "checkpoint_start")
            cfg.checkpoint_start = parse_number<std::size_t>(val, key);
        else if (key == "train_size") cfg.train_size = parse_number<std::size_t>(val, key);
        else if (key == "val_size") cfg.val_size = parse_number<std::size_t>(val, key);
        else if (key == "test_size") cfg.test_size = parse_number<std::size_t>(val, key);
        else if (key == "data") cfg.data = val;
        else if (key == "synth_n") cfg.synth_n = parse_number<std::size_t>(val, key);
        else if (key == "synth_seed") cfg.synth_seed = parse_number<std::uint64_t>(val, key);
        else if (key == "output_dir") cfg.output_dir = val;
        else if (key == "run_name") cfg.run_name = val;
        else if (key == "encoder_hidden")
            cfg.encoder_hidden = parse_number<std::size_t>(val, key);
        else if (key == "head_hidden") cfg.head_hidden = parse_number<std::size_t>(val, key);
        else if (key == "activation") cfg.activation = val;
        else if (key == "squared_modulus") cfg.squared_modulus = parse_bool(val, key);
        else if (key == "scale_train_only") cfg.scale_train_only = parse_bool(val, key);
        else if (key == "wrap_phi") cfg.wrap_phi = parse_bool(val, key);
        else if (key == "min_particles")
            cfg.min_particles = parse_number<std::size_t>(val, key);
        else if (key == "nodes") cfg.nodes = parse_number<std::size_t>(val, key);
        else
            throw ValidationError(origin + ":" + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

bool is_quantum(const ExperimentConfig& cfg) {
    return cfg.model == "qgnn" || cfg.model == "eqgnn";
}

void resolve_and_validate(ExperimentConfig& cfg) {
    if (cfg.model != "gnn" && cfg.model != "egnn" && cfg.model != "qgnn" &&
        cfg.model != "eqgnn")
        throw ValidationError("config: model must be gnn, egnn, qgnn or eqgnn, got '" +
                              cfg.model + "'");
    if (cfg.nodes < 1 || cfg.nodes > 10)
        throw ValidationError("config: nodes must be in 1..10 (dense 2^n simulation)");

    if (cfg.hidden == 0)
        cfg.hidden = is_quantum(cfg) ? (std::size_t{1} << cfg.nodes) : 10;
    if (cfg.layers == 0) {
        if (cfg.model == "gnn") cfg.layers = 5;
        else if (cfg.model == "egnn") cfg.layers = 4;
        else cfg.layers = 6;
    }
    if (cfg.batch == 0) cfg.batch = is_quantum(cfg) ? 1 : 64;

    if (is_quantum(cfg) && cfg.hidden != (std::size_t{1} << cfg.nodes))
        throw ValidationError("config: quantum models require hidden = 2^nodes = " +
                              std::to_string(std::size_t{1} << cfg.nodes) + ", got " +
                              std::to_string(cfg.hidden));
    if (cfg.min_particles < cfg.nodes)
        throw ValidationError("config: min_particles must be >= nodes");
    if (cfg.train_size == 0 || cfg.val_size == 0 || cfg.test_size == 0)
        throw ValidationError("config: split sizes must be positive");
    if (cfg.data.empty() && cfg.synth_n == 0)
        throw ValidationError("config: provide either data = <path> or synth_n = <count>");
    if (!(cfg.lr > 0.0)) throw ValidationError("config: lr must be positive");
    activation_from_name(cfg.activation); // validates the name
}

ad::Activation activation_from_name(const std::string& name) {
    if (name == "softplus") return ad::Activation::Softplus;
    if (name == "tanh") return ad::Activation::Tanh;
    if (name == "relu") return ad::Activation::Relu;
    if (name == "identity") return ad::Activation::Identity;
    throw ValidationError("config: unknown activation '" + name + "'");
}

ModelSpec model_spec(const ExperimentConfig& cfg) {
    ModelSpec spec;
    spec.kind = cfg.model;
    spec.hidden = cfg.hidden;
    spec.layers = cfg.layers;
    spec.nodes = cfg.nodes;
    spec.encoder_hidden = cfg.encoder_hidden;
    spec.head_hidden = cfg.head_hidden;
    spec.act = activation_from_name(cfg.activation);
    spec.squared_modulus = cfg.squared_modulus;
    spec.seed = cfg.seed;
    return spec;
}

DatasetConfig dataset_config(const ExperimentConfig& cfg) {
    DatasetConfig d;
    d.train_size = cfg.train_size;
    d.val_size = cfg.val_size;
    d.test_size = cfg.test_size;
    d.min_particles = cfg.min_particles;
    d.nodes = cfg.nodes;
    d.scale_train_only = cfg.scale_train_only;
    d.wrap_phi = cfg.wrap_phi;
    d.seed = cfg.seed;
    return d;
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["model"] = cfg.model;
    kv["hidden"] = std::to_string(cfg.hidden);
    kv["layers"] = std::to_string(cfg.layers);
    {
        std::ostringstream s;
        s.precision(17);
        s << cfg.lr;
        kv["lr"] = s.str();
    }
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["batch"] = std::to_string(cfg.batch);
    kv["seed"] = std::to_string(cfg.seed);
    kv["checkpoint_start"] = std::to_string(cfg.checkpoint_start);
    kv["train_size"] = std::to_string(cfg.train_size);
    kv["val_size"] = std::to_string(cfg.val_size);
    kv["test_size"] = std::to_string(cfg.test_size);
    kv["data"] = cfg.data;
    kv["synth_n"] = std::to_string(cfg.synth_n);
    kv["synth_seed"] = std::to_string(cfg.synth_seed);
    kv["encoder_hidden"] = std::to_string(cfg.encoder_hidden);
    kv["head_hidden"] = std::to_string(cfg.head_hidden);
    kv["activation"] = cfg.activation;
    kv["squared_modulus"] = cfg.squared_modulus ? "true" : "false";
    kv["scale_train_only"] = cfg.scale_train_only ? "true" : "false";
    kv["wrap_phi"] = cfg.wrap_phi ? "true" : "false";
    kv["min_particles"] = std::to_string(cfg.min_particles);
    kv["nodes"] = std::to_string(cfg.nodes);
    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
    return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace qjet
