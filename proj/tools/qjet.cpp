#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qjet/classical_models.hpp"
#include "qjet/config.hpp"
#include "qjet/jet_data.hpp"
#include "qjet/quantum_models.hpp"
#include "qjet/runio.hpp"
#include "qjet/training.hpp"

namespace fs = std::filesystem;
using namespace qjet;

namespace {

DatasetSplit load_dataset(const ExperimentConfig& cfg) {
    const DatasetConfig dcfg = dataset_config(cfg);
    if (cfg.synth_n > 0) {
        auto jets = synth_jets(cfg.synth_n, cfg.synth_seed);
        return build_dataset(jets, dcfg);
    }
    if (is_cache_file(cfg.data)) {
        bool scaled = false;
        auto records = read_cache(cfg.data, &scaled);
        if (scaled)
            throw ValidationError("dataset: cache " + cfg.data +
                                  " is already scaled; rebuild it with qjet ingest");
        return build_dataset(records, dcfg);
    }
    return build_dataset(read_jsonl(cfg.data), dcfg);
}

fs::path make_run_dir(const ExperimentConfig& cfg) {
    std::string name = cfg.run_name;
    if (name.empty()) {
        const std::time_t t = std::time(nullptr);
        char buf[32];
        std::strftime(buf, sizeof(buf), "run-%Y%m%d-%H%M%S", std::localtime(&t));
        name = buf;
        fs::path candidate = fs::path(cfg.output_dir) / name;
        int suffix = 1;
        while (fs::exists(candidate))
            candidate = fs::path(cfg.output_dir) / (name + "-" + std::to_string(++suffix));
        name = candidate.filename().string();
    }
    fs::path dir = fs::path(cfg.output_dir) / name;
    fs::create_directories(dir);
    return dir;
}

TrainConfig train_config(const ExperimentConfig& cfg, bool verbose) {
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.batch = cfg.batch;
    tc.seed = cfg.seed;
    tc.checkpoint_start = cfg.checkpoint_start;
    tc.adam.lr = cfg.lr;
    if (verbose) {
        tc.on_epoch = [](std::size_t epoch, const EpochStats& s) {
            std::cout << "epoch " << epoch << ": train_loss=" << s.train_loss
                      << " val_loss=" << s.val_loss << " train_acc=" << s.train_acc
                      << " val_acc=" << s.val_acc << " val_auc=" << s.val_auc << " ("
                      << s.seconds << " s)\n";
        };
    }
    return tc;
}

struct RunOutcome {
    TrainReport report;
    std::size_t param_count = 0;
    fs::path run_dir;
};

RunOutcome run_experiment(ExperimentConfig cfg, bool verbose) {
    resolve_and_validate(cfg);
    DatasetSplit data = load_dataset(cfg);
    auto model = make_model(model_spec(cfg));

    RunOutcome out;
    out.param_count = model->param_count();
    out.run_dir = make_run_dir(cfg);
    if (verbose)
        std::cout << "model " << cfg.model << " |Theta| = " << out.param_count
                  << ", split " << data.train.size() << "/" << data.val.size() << "/"
                  << data.test.size() << ", run dir " << out.run_dir.string() << "\n";

    {
        std::ofstream echo(out.run_dir / "config.resolved");
        echo << canonical_config(cfg);
    }

    out.report = train_model(*model, data, train_config(cfg, verbose));

    write_report_json((out.run_dir / "report.json").string(), cfg, out.report,
                      out.param_count, train_config(cfg, false).adam);
    write_history_csv((out.run_dir / "history.csv").string(), out.report);
    write_roc_csv((out.run_dir / "roc.csv").string(), out.report.test_roc);
    Checkpoint ck{config_hash(cfg), out.report.best_epoch, out.report.best_params};
    save_checkpoint((out.run_dir / "model.qjck").string(), ck);
    return out;
}

int cmd_ingest(const std::string& input, const std::string& output,
               std::size_t min_particles, std::size_t nodes, bool wrap_phi) {
    auto jets = read_jsonl(input);
    std::vector<FeaturedJet> records;
    records.reserve(jets.size());
    std::size_t excluded = 0;
    std::size_t counts[2] = {0, 0};
    for (std::size_t k = 0; k < jets.size(); ++k) {
        if (jets[k].particles.size() < min_particles) {
            ++excluded;
            std::cerr << "warning: jet " << k + 1 << " excluded ("
                      << jets[k].particles.size() << " < " << min_particles
                      << " particles)\n";
            continue;
        }
        records.push_back(featurize(jets[k], nodes, wrap_phi));
        ++counts[jets[k].label];
    }
    write_cache(output, records, false);
    std::cout << "kept " << records.size() << " jets (" << counts[1] << " quark, "
              << counts[0] << " gluon), excluded " << excluded << " short jets\n"
              << "cache written to " << output << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& data_path,
             std::string config_path) {
    if (config_path.empty()) {
        const fs::path sibling = fs::path(checkpoint_path).parent_path() / "config.resolved";
        if (!fs::exists(sibling))
            throw ValidationError("eval: no --config given and " + sibling.string() +
                                  " not found");
        config_path = sibling.string();
    }
    ExperimentConfig cfg = parse_config_file(config_path);
    resolve_and_validate(cfg);
    Checkpoint ck = load_checkpoint(checkpoint_path);
    if (ck.config_hash != config_hash(cfg))
        throw ValidationError("eval: checkpoint config hash mismatch; wrong config file?");
    if (!data_path.empty()) cfg.data = data_path;

    DatasetSplit data = load_dataset(cfg);
    auto model = make_model(model_spec(cfg));
    model->load(ck.params);
    EvalResult r = evaluate(*model, data.test);
    const double auc = roc_auc(r.scores, r.labels).second;
    std::cout << "test accuracy " << fmt17(r.acc) << "\n"
              << "test AUC " << fmt17(auc) << "\n";
    return 0;
}

// Nearest-|Theta| preset configurations for the parameter sweep: classical
// models vary N_h and P, quantum models keep N_h = 2^n fixed and vary the
// encoder/decoder widths and P.
void emit_presets(const fs::path& dir, const ExperimentConfig& base) {
    const std::size_t targets[] = {500, 1200, 1600, 2800, 3500, 5100};
    fs::create_directories(dir);

    auto count_for = [&](const std::string& kind, std::size_t hidden, std::size_t layers,
                         std::size_t enc, std::size_t headh) {
        ModelSpec spec;
        spec.kind = kind;
        spec.hidden = hidden;
        spec.layers = layers;
        spec.nodes = base.nodes;
        spec.encoder_hidden = enc;
        spec.head_hidden = headh;
        spec.seed = 1;
        return make_model(spec)->param_count();
    };

    for (const std::string kind : {"gnn", "egnn", "qgnn", "eqgnn"}) {
        const bool quantum = kind == "qgnn" || kind == "eqgnn";
        for (std::size_t target : targets) {
            ExperimentConfig cfg = base;
            cfg.model = kind;
            std::size_t best_diff = static_cast<std::size_t>(-1);
            if (!quantum) {
                for (std::size_t nh = 2; nh <= 28; ++nh)
                    for (std::size_t p = 1; p <= 8; ++p) {
                        const std::size_t c = count_for(kind, nh, p, 0, 0);
                        const std::size_t diff = c > target ? c - target : target - c;
                        if (diff < best_diff) {
                            best_diff = diff;
                            cfg.hidden = nh;
                            cfg.layers = p;
                        }
                    }
            } else {
                cfg.hidden = std::size_t{1} << base.nodes;
                const std::size_t encs[] = {2, 4, 8, 12, 16, 24, 32, 48, 64, 96};
                const std::size_t heads[] = {0, 2, 4, 8, 16};
                for (std::size_t p = 1; p <= 6; ++p)
                    for (std::size_t enc : encs)
                        for (std::size_t hh : heads) {
                            const std::size_t c = count_for(kind, cfg.hidden, p, enc, hh);
                            const std::size_t diff = c > target ? c - target : target - c;
                            if (diff < best_diff) {
                                best_diff = diff;
                                cfg.layers = p;
                                cfg.encoder_hidden = enc;
                                cfg.head_hidden = hh;
                            }
                        }
            }
            ExperimentConfig resolved = cfg;
            resolve_and_validate(resolved);
            const std::size_t count =
                count_for(kind, resolved.hidden, resolved.layers, resolved.encoder_hidden,
                          resolved.head_hidden);
            const std::string name =
                kind + "_theta" + std::to_string(target) + ".cfg";
            std::ofstream out(dir / name);
            out << "# target |Theta| ~ " << target << ", actual " << count << "\n"
                << canonical_config(resolved);
            std::cout << name << ": |Theta| = " << count << " (target " << target << ")\n";
        }
    }
}

int cmd_sweep(const std::string& configs_dir, std::string output,
              const std::string& emit_dir, const std::string& base_config) {
    if (!emit_dir.empty()) {
        ExperimentConfig base;
        if (!base_config.empty()) base = parse_config_file(base_config);
        if (base.data.empty() && base.synth_n == 0) base.synth_n = 2000;
        emit_presets(emit_dir, base);
        return 0;
    }

    std::vector<fs::path> files;
    if (!fs::exists(configs_dir))
        throw ValidationError("sweep: config directory " + configs_dir + " does not exist");
    for (const auto& entry : fs::directory_iterator(configs_dir))
        if (entry.path().extension() == ".cfg") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    if (output.empty()) output = (fs::path(configs_dir) / "auc_vs_params.csv").string();
    std::vector<SweepRow> rows;
    for (const auto& file : files) {
        SweepRow row;
        row.config = file.filename().string();
        try {
            ExperimentConfig cfg = parse_config_file(file.string());
            resolve_and_validate(cfg);
            row.model = cfg.model;
            std::cout << "=== " << row.config << " (" << cfg.model << ") ===\n";
            RunOutcome out = run_experiment(cfg, true);
            row.param_count = out.param_count;
            row.test_auc = out.report.test_auc;
            row.status = "ok";
        } catch (const std::exception& e) {
            std::string reason = e.what();
            std::replace(reason.begin(), reason.end(), ',', ';');
            std::replace(reason.begin(), reason.end(), '\n', ' ');
            row.status = "failed: " + reason;
            std::cerr << "sweep: " << row.config << " failed: " << e.what() << "\n";
        }
        rows.push_back(std::move(row));
    }
    write_sweep_csv(output, rows);
    std::cout << "sweep results written to " << output << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qjet: classical and quantum graph networks for jet tagging"};
    app.require_subcommand(1);

    auto* ingest = app.add_subcommand("ingest", "Convert a JSONL jet file into a QJET1 cache");
    std::string in_path, out_path;
    std::size_t min_particles = 10, nodes = 3;
    bool wrap_phi = false;
    ingest->add_option("--input", in_path, "input JSONL file")->required();
    ingest->add_option("--output", out_path, "output cache file")->required();
    ingest->add_option("--min-particles", min_particles, "drop jets with fewer particles");
    ingest->add_option("--nodes", nodes, "leading-pT particles kept per jet");
    ingest->add_flag("--wrap-phi", wrap_phi, "wrap the azimuthal difference into [-pi, pi]");

    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic jet sample");
    std::size_t synth_n = 1000;
    std::uint64_t synth_seed = 7;
    std::string synth_out;
    synth->add_option("--n", synth_n, "jet count")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->required();
    synth->add_option("--output", synth_out, "output JSONL file")->required();

    auto* train = app.add_subcommand("train", "Train a model from a config file");
    std::string train_cfg_path;
    train->add_option("--config", train_cfg_path, "flat key = value config file")->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    std::string eval_ck, eval_data, eval_cfg;
    eval->add_option("--checkpoint", eval_ck, "QJCK1 checkpoint")->required();
    eval->add_option("--data", eval_data, "JSONL or cache path (defaults to the config's)");
    eval->add_option("--config", eval_cfg,
                     "config file (defaults to config.resolved next to the checkpoint)");

    auto* sweep = app.add_subcommand("sweep", "Train every config in a directory");
    std::string sweep_dir, sweep_out, sweep_emit, sweep_base;
    sweep->add_option("--configs", sweep_dir, "directory of .cfg files");
    sweep->add_option("--output", sweep_out, "output CSV (default <configs>/auc_vs_params.csv)");
    sweep->add_option("--emit-presets", sweep_emit,
                      "write nearest-|Theta| preset configs into this directory and exit");
    sweep->add_option("--base", sweep_base, "base config for preset emission");

    try {
        app.parse(argc, argv);
        if (ingest->parsed()) return cmd_ingest(in_path, out_path, min_particles, nodes, wrap_phi);
        if (synth->parsed()) {
            write_jsonl(synth_out, synth_jets(synth_n, synth_seed));
            std::cout << "wrote " << synth_n << " jets to " << synth_out << "\n";
            return 0;
        }
        if (train->parsed()) {
            ExperimentConfig cfg = parse_config_file(train_cfg_path);
            resolve_and_validate(cfg);
            RunOutcome out = run_experiment(cfg, true);
            std::cout << "best epoch " << out.report.best_epoch << "\n"
                      << "final test AUC " << fmt17(out.report.test_auc) << "\n";
            return 0;
        }
        if (eval->parsed()) return cmd_eval(eval_ck, eval_data, eval_cfg);
        if (sweep->parsed()) {
            if (sweep_dir.empty() && sweep_emit.empty())
                throw ValidationError("sweep: need --configs or --emit-presets");
            return cmd_sweep(sweep_dir, sweep_out, sweep_emit, sweep_base);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
