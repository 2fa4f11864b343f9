// SPDX-License-Identifier: Apache-2.0
#include "megan/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "megan/checkpoint.hpp"
#include "megan/train.hpp"

namespace megan {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string stamp_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "run_%Y%m%d_%H%M%S", &tm);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

void write_config_resolved(const std::string& path, const Config& cfg) {
    std::ostringstream os;
    for (const auto& [key, value] : cfg.entries()) os << key << " = " << value << "\n";
    write_text(path, os.str());
}

void write_manifest_head(const std::string& path, const Config& cfg,
                         const std::string& run_dir, const char* command) {
    std::ostringstream os;
    os << "version = " << kVersion << "\n";
    os << "command = " << command << "\n";
    os << "run_dir = " << run_dir << "\n";
    os << "started_utc = " << utc_now() << "\n";
    os << "outputs = config_resolved.txt metrics.csv checkpoints eval_report.txt "
          "mode_matrix.csv eval_summary.csv\n";
    os << "[config]\n";
    for (const auto& [key, value] : cfg.entries()) os << key << " = " << value << "\n";
    write_text(path, os.str());
}

void append_manifest_tail(const std::string& path, const RunArtifacts& art) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to manifest: " + path);
    out << "[result]\n";
    out << "finished_utc = " << utc_now() << "\n";
    out << "iters_run = " << art.iters_run << "\n";
    out << "metrics_csv = " << art.metrics_csv << "\n";
    for (const std::string& c : art.checkpoints) out << "checkpoint = " << c << "\n";
}

/// Loads the architecture from config and the weights from a checkpoint file.
Models models_from_checkpoint(const TrainConfig& tc, const std::string& ckpt_path) {
    Rng init(tc.seed_init);
    Models models = build_models(tc.model, init);
    models.load_state_dict(load_checkpoint(ckpt_path));
    return models;
}

std::pair<EvalReport, ModeAssignmentMatrix> eval_checkpoint(const TrainConfig& tc,
                                                            const std::string& ckpt_path,
                                                            std::size_t samples) {
    Models models = models_from_checkpoint(tc, ckpt_path);
    const MixtureSpec spec = make_spec(tc.data_kind, tc.data_modes, tc.data_scale,
                                       tc.data_sigma);
    Rng rng(tc.seed_eval);
    return evaluate(models, spec, samples, rng);
}

}  // namespace

Config build_config(const CliOptions& opts) {
    Config cfg;
    if (!opts.config_path.empty()) cfg.load_file(opts.config_path);
    for (const std::string& kv : opts.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.has_seed) cfg.set_master_seed(opts.seed);
    return cfg;
}

std::string resolve_out_root(const CliOptions& opts, const Config& cfg) {
    if (!opts.out.empty()) return opts.out;
    if (!cfg.out_dir().empty()) return cfg.out_dir();
    if (const char* env = std::getenv("MEGAN_OUT"); env && *env) return env;
    return "./runs";
}

std::string make_run_dir(const std::string& root) {
    fs::create_directories(root);
    const std::string base = (fs::path(root) / stamp_now()).string();
    std::string candidate = base;
    for (int k = 2; fs::exists(candidate); ++k) candidate = base + "_" + std::to_string(k);
    fs::create_directories(candidate);
    return candidate;
}

std::string render_eval_report(const EvalReport& report, const ModeAssignmentMatrix& matrix,
                               std::size_t samples) {
    std::ostringstream os;
    os << "samples = " << samples << "\n";
    os << "modes_covered = " << report.modes_covered << "\n";
    os << "specialization_purity = " << format_double(report.specialization_purity) << "\n";
    os << "high_quality_fraction = " << format_double(report.high_quality_fraction) << "\n";
    os << "diversity_proxy = " << format_double(report.diversity_proxy) << "\n";
    os << "outliers = " << matrix.outliers << "\n";
    for (std::size_t i = 0; i < report.usage.size(); ++i)
        os << "usage_" << (i + 1) << " = " << format_double(report.usage[i]) << "\n";
    const SpecializationEntropy se = specialization_entropy(matrix);
    for (std::size_t i = 0; i < se.entropy.size(); ++i)
        os << "entropy_" << (i + 1) << " = " << format_double(se.entropy[i]) << "\n";
    for (std::size_t i = 0; i < se.unused.size(); ++i)
        os << "unused_" << (i + 1) << " = " << (se.unused[i] ? "true" : "false") << "\n";
    return os.str();
}

void write_eval_artifacts(const std::string& dir, const EvalReport& report,
                          const ModeAssignmentMatrix& matrix, std::size_t samples) {
    write_text(dir + "/eval_report.txt", render_eval_report(report, matrix, samples));

    std::ostringstream mat;
    mat << "mode";
    for (std::size_t i = 1; i <= matrix.n; ++i) mat << ",gen_" << i;
    mat << "\n";
    for (std::size_t j = 0; j < matrix.modes; ++j) {
        mat << j;
        for (std::size_t i = 0; i < matrix.n; ++i) mat << ',' << matrix.at(j, i);
        mat << "\n";
    }
    write_text(dir + "/mode_matrix.csv", mat.str());

    const std::string summary_path = dir + "/eval_summary.csv";
    const bool fresh = !fs::exists(summary_path);
    std::ofstream out(summary_path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to eval summary: " + summary_path);
    if (fresh) {
        out << "samples,modes_covered,specialization_purity,high_quality_fraction,"
               "diversity_proxy,outliers";
        for (std::size_t i = 1; i <= matrix.n; ++i) out << ",usage_" << i;
        out << "\n";
    }
    out << samples << ',' << report.modes_covered << ','
        << format_double(report.specialization_purity) << ','
        << format_double(report.high_quality_fraction) << ','
        << format_double(report.diversity_proxy) << ',' << matrix.outliers;
    for (double u : report.usage) out << ',' << format_double(u);
    out << "\n";
}

int run_train(const CliOptions& opts) {
    try {
        const Config cfg = build_config(opts);
        const TrainConfig tc = cfg.to_train_config();
        tc.validate();
        const std::string run_dir = make_run_dir(resolve_out_root(opts, cfg));
        write_config_resolved(run_dir + "/config_resolved.txt", cfg);
        write_manifest_head(run_dir + "/manifest.txt", cfg, run_dir, "train");
        std::printf("run_dir = %s\n", run_dir.c_str());

        const RunArtifacts art = train(tc, run_dir);

        const std::string ckpt =
            art.final_checkpoint.empty() ? art.checkpoints.front() : art.final_checkpoint;
        const std::size_t samples = tc.eval_samples;
        const auto [report, matrix] = eval_checkpoint(tc, ckpt, samples);
        write_eval_artifacts(run_dir, report, matrix, samples);
        append_manifest_tail(run_dir + "/manifest.txt", art);
        std::printf("iters_run = %llu\n", static_cast<unsigned long long>(art.iters_run));
        std::printf("modes_covered = %zu\n", report.modes_covered);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const TrainAbort& e) {
        std::fprintf(stderr, "training aborted: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int run_eval(const CliOptions& opts) {
    try {
        const Config cfg = build_config(opts);
        const TrainConfig tc = cfg.to_train_config();
        const std::size_t samples = tc.eval_samples;
        const auto [report, matrix] = eval_checkpoint(tc, opts.checkpoint, samples);

        const std::string dir = !opts.out.empty()
                                    ? opts.out
                                    : fs::path(opts.checkpoint).parent_path().string();
        const std::string target = dir.empty() ? "." : dir;
        fs::create_directories(target);
        write_eval_artifacts(target, report, matrix, samples);
        std::fputs(render_eval_report(report, matrix, samples).c_str(), stdout);
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        // A missing or unreadable checkpoint is a usage problem, not a crash.
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int run_plot(const CliOptions& opts) {
    try {
        const std::string run_dir = opts.run_dir;
        const std::string csv_path = run_dir + "/metrics.csv";
        const std::string cfg_path = run_dir + "/config_resolved.txt";
        if (!fs::exists(csv_path)) throw ConfigError("missing metrics CSV: " + csv_path);
        if (!fs::exists(cfg_path)) throw ConfigError("missing resolved config: " + cfg_path);
        std::string ckpt = run_dir + "/ckpt_final.bin";
        if (!fs::exists(ckpt)) ckpt = run_dir + "/ckpt_init.bin";
        if (!fs::exists(ckpt))
            throw ConfigError("no checkpoint (ckpt_final.bin or ckpt_init.bin) in " + run_dir);

        Config cfg;
        cfg.load_file(cfg_path);
        for (const std::string& kv : opts.sets) {
            const std::size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        const TrainConfig tc = cfg.to_train_config();

        // Regenerate eval-mode samples for the scatter.
        Models models = models_from_checkpoint(tc, ckpt);
        const MixtureSpec spec = make_spec(tc.data_kind, tc.data_modes, tc.data_scale,
                                           tc.data_sigma);
        Rng rng(tc.seed_eval);
        const std::size_t s = tc.eval_samples;
        const std::size_t n = models.bank.n();
        std::vector<double> points;
        points.reserve(s * 2);
        std::vector<std::size_t> gens;
        gens.reserve(s);
        constexpr std::size_t kChunk = 256;
        std::size_t done = 0;
        while (done < s) {
            const std::size_t take = std::min(kChunk, s - done);
            Tensor z = sample_latent(take, tc.model.d_z, rng);
            std::vector<Tensor> features, outputs;
            for (const Generator& g : models.bank.generators) {
                Generator::Out out = g.forward(z);
                features.push_back(out.f);
                outputs.push_back(out.o);
            }
            Tensor selection;
            if (models.gate) {
                Tensor logits = models.gate->assignment(z, features, NetMode::Eval);
                selection = gumbel_max(logits, sample_gumbel(logits.shape(), rng));
            } else {
                selection = Tensor::full({take, 1}, 1.0);
            }
            Tensor fake = compose_fake(selection, outputs);
            for (std::size_t r = 0; r < take; ++r) {
                std::size_t gen = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (selection.at(r, i) == 1.0) gen = i;
                gens.push_back(gen);
                points.push_back(fake.at(r, 0));
                points.push_back(fake.at(r, 1));
            }
            done += take;
        }

        const std::string out_dir = opts.out.empty() ? run_dir : opts.out;
        fs::create_directories(out_dir);
        write_scatter_svg(out_dir + "/scatter.svg", points, gens, n, spec);

        // Training curves straight from the metric CSV.
        std::ifstream csv(csv_path);
        if (!csv) throw IoError("cannot read metrics CSV: " + csv_path);
        std::string line;
        std::vector<std::string> header;
        std::vector<std::vector<double>> rows;
        bool first = true;
        while (std::getline(csv, line)) {
            std::stringstream ss(line);
            std::string field;
            if (first) {
                while (std::getline(ss, field, ',')) header.push_back(field);
                first = false;
                continue;
            }
            std::vector<double> row;
            while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
            if (!row.empty()) rows.push_back(std::move(row));
        }
        write_curves_svg(out_dir + "/curves.svg", header, rows);
        std::printf("scatter = %s/scatter.svg\ncurves = %s/curves.svg\n", out_dir.c_str(),
                    out_dir.c_str());
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace megan
