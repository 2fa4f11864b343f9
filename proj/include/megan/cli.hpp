// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_CLI_HPP
#define MEGAN_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "megan/config.hpp"
#include "megan/metrics.hpp"

namespace megan {

inline constexpr char kVersion[] = "megan 0.1.0";

/// Parsed command-line state shared by the subcommands.
struct CliOptions {
    std::string config_path;        // --config
    std::vector<std::string> sets;  // --set key=value, repeatable
    std::string out;                // --out
    bool has_seed = false;
    std::uint64_t seed = 0;  // --seed, master value for every stream
    std::string checkpoint;  // eval positional
    std::string run_dir;     // plot positional
};

/// Exit codes: 0 success, 2 configuration problem (named key/path/shape),
/// 3 training abort on non-finite loss, 1 anything else.
int run_train(const CliOptions& opts);
int run_eval(const CliOptions& opts);
int run_plot(const CliOptions& opts);

/// defaults, then --config file, then --set pairs, then --seed derivation.
Config build_config(const CliOptions& opts);

/// --out beats config `out.dir`, which beats $MEGAN_OUT, then ./runs.
std::string resolve_out_root(const CliOptions& opts, const Config& cfg);

/// Creates root/run_<utc-stamp>[_k], never reusing an existing directory.
std::string make_run_dir(const std::string& root);

/// Deterministic flat key-value rendering of an evaluation outcome; the same
/// bytes go to stdout and eval_report.txt.
std::string render_eval_report(const EvalReport& report, const ModeAssignmentMatrix& matrix,
                               std::size_t samples);

/// Writes eval_report.txt + mode_matrix.csv and appends eval_summary.csv.
void write_eval_artifacts(const std::string& dir, const EvalReport& report,
                          const ModeAssignmentMatrix& matrix, std::size_t samples);

/// Distinct per-generator plot color.
std::string color_for(std::size_t index);

/// scatter.svg: generated samples colored by generator with mode centers and
/// one legend-swatch entry per generator. curves.svg: losses, p_i, tau.
void write_scatter_svg(const std::string& path, const std::vector<double>& points,
                       const std::vector<std::size_t>& gens, std::size_t n,
                       const MixtureSpec& spec);
void write_curves_svg(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

}  // namespace megan

#endif
