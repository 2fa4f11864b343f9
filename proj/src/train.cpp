// SPDX-License-Identifier: Apache-2.0
#include "megan/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "megan/checkpoint.hpp"

namespace megan {

void TrainConfig::validate() const {
    if (b < 1) throw ConfigError("train.batch must be at least 1");
    if (lr_disc <= 0.0 || lr_gen <= 0.0 || lr_gate <= 0.0)
        throw ConfigError("learning rates must be positive");
    if (lambda_lb < 0.0) throw ConfigError("train.lambda_lb must be nonnegative");
    if (tau.initial <= 0.0 || tau.floor <= 0.0)
        throw ConfigError("temperature schedule values must be positive");
    if (log_every < 1 || ckpt_every < 1)
        throw ConfigError("train.log_every and train.ckpt_every must be at least 1");
    if (b < model.n_generators)
        std::fprintf(stderr,
                     "warning: batch %zu below generator count %zu; "
                     "per-batch balance target 1/n is unreachable at resolution 1/b\n",
                     b, model.n_generators);
}

namespace {

// The latent stream is derived from the data seed so one seed pins both the
// real batches and the z draws.
constexpr std::uint64_t kLatentTag = 0x6c6174656e74ULL;  // "latent"

double row_std_mean(const Tensor& logits) {
    const std::size_t b = logits.rows(), n = logits.cols();
    double total = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += logits.at(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double d = logits.at(r, c) - mean;
            var += d * d;
        }
        total += std::sqrt(var / static_cast<double>(n));
    }
    return total / static_cast<double>(b);
}

}  // namespace

TrainContext::TrainContext(const TrainConfig& cfg)
    : cfg_(cfg),
      rng_data_(cfg.seed_data),
      rng_latent_(splitmix64(cfg.seed_data ^ kLatentTag)),
      rng_gumbel_(cfg.seed_gumbel),
      rng_eval_(cfg.seed_eval) {
    cfg_.validate();
    Rng init_rng(cfg.seed_init);
    models_ = build_models(cfg.model, init_rng);
    opt_disc_ = std::make_unique<Adam>(models_.disc_params, cfg.lr_disc);
    opt_gen_ = std::make_unique<Adam>(models_.gen_params, cfg.lr_gen);
    opt_gate_ = std::make_unique<Adam>(models_.gate_params, cfg.lr_gate);
}

TrainContext::FakeBatch TrainContext::make_fake(double tau_now) {
    FakeBatch fb;
    fb.z = sample_latent(cfg_.b, cfg_.model.d_z, rng_latent_);
    for (const Generator& g : models_.bank.generators) {
        Generator::Out out = g.forward(fb.z);
        fb.features.push_back(out.f);
        fb.outputs.push_back(out.o);
    }
    if (models_.gate) {
        fb.sel = gating_forward(*models_.gate, fb.z, fb.features, tau_now, rng_gumbel_,
                                NetMode::Train);
    } else {
        fb.sel.y_hard = Tensor::full({cfg_.b, 1}, 1.0);
        fb.sel.tau = tau_now;
    }
    return fb;
}

double TrainContext::finite_or_abort(const Tensor& loss, const char* phase,
                                     std::uint64_t iter) {
    const double v = loss.item();
    if (!std::isfinite(v))
        throw TrainAbort("non-finite loss in " + std::string(phase) + " phase at iteration " +
                         std::to_string(iter));
    return v;
}

StepReport TrainContext::step(const RealBatch& real, std::uint64_t iter) {
    const double tau_now = cfg_.tau.at(iter);
    StepReport report;
    report.iter = iter;
    report.tau = tau_now;

    FakeBatch fb = make_fake(tau_now);
    Tensor fake_live = compose_fake(fb.sel.y_hard, fb.outputs);

    // Phase 1: discriminator on the adversarial loss, fake batch detached.
    {
        Tensor d_real = models_.disc.forward(real.points);
        Tensor d_fake = models_.disc.forward(detach(fake_live));
        Tensor loss = disc_loss(d_real, d_fake);
        report.loss_d = finite_or_abort(loss, "discriminator", iter);
        opt_disc_->zero_grad();
        backward(loss);
        opt_disc_->step();
    }

    // Phase 2: generators on the adversarial loss. The selection is detached,
    // so each row's gradient reaches exactly the generator that produced it.
    {
        if (cfg_.resample_per_phase) fb = make_fake(tau_now);
        Tensor fake_gen = compose_fake(detach(fb.sel.y_hard), fb.outputs);
        Tensor loss = gen_loss(models_.disc.forward(fake_gen));
        report.loss_g = finite_or_abort(loss, "generator", iter);
        opt_gen_->zero_grad();
        backward(loss);
        opt_gen_->step();
    }

    // Phase 3: gating on adversarial + lambda * load-balancing, recomputed on
    // the same fake batch with the live straight-through selection.
    if (models_.gate) {
        if (cfg_.resample_per_phase) {
            fb = make_fake(tau_now);
            fake_live = compose_fake(fb.sel.y_hard, fb.outputs);
        }
        Tensor adv = gen_loss(models_.disc.forward(fake_live));
        auto [lb, stats] = load_balancing_loss(fb.sel);
        Tensor loss = gating_loss(adv, lb, cfg_.lambda_lb);
        report.loss_gate_adv = finite_or_abort(adv, "gating", iter);
        report.loss_lb = finite_or_abort(lb, "gating", iter);
        finite_or_abort(loss, "gating", iter);
        opt_gate_->zero_grad();
        backward(loss);
        opt_gate_->step();

        report.p = stats.p;
        report.logit_row_std_mean = row_std_mean(fb.sel.logits);
    } else {
        report.loss_gate_adv = 0.0;
        report.loss_lb = 0.0;
        report.p = {1.0};
        report.logit_row_std_mean = 0.0;
    }
    return report;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunArtifacts train(const TrainConfig& cfg, const std::string& out_dir) {
    TrainContext ctx(cfg);
    RunArtifacts artifacts;

    const std::string init_path = out_dir + "/ckpt_init.bin";
    save_checkpoint(init_path, ctx.models().state_dict());
    artifacts.checkpoints.push_back(init_path);

    const std::string csv_path = out_dir + "/metrics.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw IoError("cannot open metrics CSV for writing: " + csv_path);
    csv << "iter,tau,loss_d,loss_g,loss_gate_adv,loss_lb";
    for (std::size_t i = 1; i <= cfg.model.n_generators; ++i) csv << ",p_" << i;
    csv << ",logit_row_std_mean\n";

    const MixtureSpec spec = make_spec(cfg.data_kind, cfg.data_modes, cfg.data_scale,
                                       cfg.data_sigma);
    for (std::uint64_t iter = 0; iter < cfg.max_iters; ++iter) {
        RealBatch real = sample_real(spec, cfg.b, ctx.data_rng());
        StepReport report = ctx.step(real, iter);

        if ((iter + 1) % cfg.log_every == 0) {
            csv << report.iter << ',' << format_double(report.tau) << ','
                << format_double(report.loss_d) << ',' << format_double(report.loss_g) << ','
                << format_double(report.loss_gate_adv) << ',' << format_double(report.loss_lb);
            for (double p : report.p) csv << ',' << format_double(p);
            csv << ',' << format_double(report.logit_row_std_mean) << '\n';
        }
        if ((iter + 1) % cfg.ckpt_every == 0 && iter + 1 != cfg.max_iters) {
            const std::string path = out_dir + "/ckpt_" + std::to_string(iter + 1) + ".bin";
            save_checkpoint(path, ctx.models().state_dict());
            artifacts.checkpoints.push_back(path);
        }
    }
    csv.flush();
    if (!csv) throw IoError("write failure on metrics CSV: " + csv_path);

    if (cfg.max_iters > 0) {
        const std::string final_path = out_dir + "/ckpt_final.bin";
        save_checkpoint(final_path, ctx.models().state_dict());
        artifacts.checkpoints.push_back(final_path);
        artifacts.final_checkpoint = final_path;
    }
    artifacts.metrics_csv = csv_path;
    artifacts.iters_run = cfg.max_iters;
    return artifacts;
}

}  // namespace megan
