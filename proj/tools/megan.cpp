// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include "megan/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"MEGAN: mixture-of-experts GAN on synthetic 2-D mixtures"};
    app.set_version_flag("--version", megan::kVersion);
    app.require_subcommand(1);

    megan::CliOptions train_opts, eval_opts, plot_opts;

    const auto add_common = [](CLI::App* cmd, megan::CliOptions& opts) {
        cmd->add_option("--config", opts.config_path, "config file with `key = value` lines");
        cmd->add_option("--set", opts.sets, "override a config key, key=value (repeatable)");
        cmd->add_option("--out", opts.out, "output root directory");
        return cmd->add_option("--seed", opts.seed,
                               "master seed; derives every rng stream deterministically");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train a model and emit run artifacts");
    CLI::Option* train_seed = add_common(train_cmd, train_opts);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("checkpoint", eval_opts.checkpoint, "checkpoint file to load")
        ->required();
    CLI::Option* eval_seed = add_common(eval_cmd, eval_opts);

    CLI::App* plot_cmd = app.add_subcommand("plot", "render scatter and curve plots for a run");
    plot_cmd->add_option("run_dir", plot_opts.run_dir, "run directory with CSV and checkpoints")
        ->required();
    plot_cmd->add_option("--set", plot_opts.sets, "override a config key (repeatable)");
    plot_cmd->add_option("--out", plot_opts.out, "directory for the plot files");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(train_cmd)) {
        train_opts.has_seed = train_seed->count() > 0;
        return megan::run_train(train_opts);
    }
    if (app.got_subcommand(eval_cmd)) {
        eval_opts.has_seed = eval_seed->count() > 0;
        return megan::run_eval(eval_opts);
    }
    plot_opts.has_seed = false;
    return megan::run_plot(plot_opts);
}
