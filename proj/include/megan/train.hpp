// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_TRAIN_HPP
#define MEGAN_TRAIN_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "megan/data.hpp"
#include "megan/gumbel.hpp"
#include "megan/losses.hpp"
#include "megan/nets.hpp"
#include "megan/optim.hpp"

namespace megan {

/// Everything one training run needs. Defaults follow the reference recipe:
/// batch 64, balance weight 100, annealed temperature from 0.5.
struct TrainConfig {
    ModelConfig model;

    MixtureSpec::Kind data_kind = MixtureSpec::Kind::Ring;
    std::size_t data_modes = 8;
    double data_scale = 2.0;  // ring radius or grid spacing
    double data_sigma = 0.05;

    std::size_t b = 64;
    double lambda_lb = 100.0;
    TemperatureSchedule tau;
    double lr_disc = 2e-4;
    double lr_gen = 2e-4;
    double lr_gate = 1e-4;
    std::uint64_t max_iters = 15000;
    std::uint64_t log_every = 100;
    std::uint64_t ckpt_every = 5000;
    bool resample_per_phase = false;
    std::size_t eval_samples = 2000;

    std::uint64_t seed_data = 1;
    std::uint64_t seed_init = 2;
    std::uint64_t seed_gumbel = 3;
    std::uint64_t seed_eval = 4;

    /// Range checks; warns on b < n (per-batch balance target 1/n is then
    /// unreachable at resolution 1/b).
    void validate() const;
};

/// Everything measured during one step, ready for the metric CSV.
struct StepReport {
    std::uint64_t iter = 0;
    double tau = 0.0;
    double loss_d = 0.0;
    double loss_g = 0.0;
    double loss_gate_adv = 0.0;
    double loss_lb = 0.0;
    std::vector<double> p;  // per-generator batch usage
    double logit_row_std_mean = 0.0;
};

/// Owns models, optimizers, and rng streams for one run; step() executes one
/// iteration of the three-phase update (discriminator, generators, gating).
class TrainContext {
public:
    explicit TrainContext(const TrainConfig& cfg);

    /// One full iteration against the given real batch; `iter` is 0-based.
    StepReport step(const RealBatch& real, std::uint64_t iter);

    Models& models() { return models_; }
    const TrainConfig& config() const { return cfg_; }
    Rng& data_rng() { return rng_data_; }
    Rng& eval_rng() { return rng_eval_; }

private:
    struct FakeBatch {
        Tensor z;
        std::vector<Tensor> features;
        std::vector<Tensor> outputs;
        SelectionBatch sel;  // undefined tensors when there is no gate
    };
    FakeBatch make_fake(double tau_now);
    static double finite_or_abort(const Tensor& loss, const char* phase, std::uint64_t iter);

    TrainConfig cfg_;
    Models models_;
    std::unique_ptr<Adam> opt_disc_, opt_gen_, opt_gate_;
    Rng rng_data_;
    Rng rng_latent_;
    Rng rng_gumbel_;
    Rng rng_eval_;
};

/// Paths produced by a completed run.
struct RunArtifacts {
    std::string metrics_csv;
    std::vector<std::string> checkpoints;
    std::string final_checkpoint;  // empty when max_iters == 0
    std::uint64_t iters_run = 0;
};

/// Runs the full loop: initial checkpoint, max_iters steps, CSV rows every
/// log_every iterations, periodic checkpoints. out_dir must already exist.
RunArtifacts train(const TrainConfig& cfg, const std::string& out_dir);

/// Fixed-precision float formatting used for every CSV field: round-trips
/// doubles exactly, so reruns are byte-comparable.
std::string format_double(double v);

}  // namespace megan

#endif
