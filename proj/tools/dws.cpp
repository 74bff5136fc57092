// Command-line front end for the distributed-sensing / split-learning
// simulator: dataset generation, scheme training, evaluation, overhead
// tables, signal diagnostics, and full experiment sweeps.

#include <CLI11.hpp>
#include <iostream>

#include "dws/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"FMCW-ISAC distributed sensing and split-learning simulator"};
    app.require_subcommand(1);

    std::string config_path, scheme, checkpoint, out_dir, profile;
    std::vector<uint64_t> seeds;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key=value lines)");
        cmd->add_option("--out", out_dir, "output directory override");
        cmd->add_option("--profile", profile, "profile override: full | reduced");
        cmd->add_option("--seed,--seeds", seeds, "seed list override");
    };

    auto* gen = app.add_subcommand("gen-data", "generate and persist a dataset");
    add_common(gen);
    auto* train = app.add_subcommand("train", "train one scheme over all seeds");
    add_common(train);
    train->add_option("--scheme", scheme, "scheme name")->required();
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test set");
    add_common(eval);
    eval->add_option("--scheme", scheme, "scheme name")->required();
    eval->add_option("--checkpoint", checkpoint, "checkpoint path")->required();
    auto* overhead = app.add_subcommand("overhead", "per-scheme comm/compute overhead table");
    add_common(overhead);
    auto* demo = app.add_subcommand("signal-demo", "write DSP diagnostic arrays");
    add_common(demo);
    auto* sweep = app.add_subcommand("sweep", "run the full scheme x seed matrix");
    add_common(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        dws::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = dws::load_config(config_path);
        if (!profile.empty()) cfg.apply_profile(profile);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!seeds.empty()) cfg.seeds = seeds;
        cfg.validate();

        if (gen->parsed()) {
            dws::cmd_gen_data(cfg);
        } else if (train->parsed()) {
            dws::cmd_train(cfg, scheme);
        } else if (eval->parsed()) {
            dws::cmd_eval(cfg, checkpoint, scheme);
        } else if (overhead->parsed()) {
            dws::cmd_overhead(cfg);
        } else if (demo->parsed()) {
            dws::cmd_signal_demo(cfg);
        } else if (sweep->parsed()) {
            dws::cmd_sweep(cfg);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error (invalid input): " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
