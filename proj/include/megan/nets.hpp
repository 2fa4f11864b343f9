// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_NETS_HPP
#define MEGAN_NETS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "megan/checkpoint.hpp"
#include "megan/gumbel.hpp"
#include "megan/rng.hpp"
#include "megan/tensor.hpp"

namespace megan {

/// Fully connected layer; weight [in x out], bias optional (the gating
/// feature encoders go without one).
struct Linear {
    Tensor weight;
    Tensor bias;  // undefined handle when the layer has no bias

    Tensor operator()(const Tensor& x) const {
        Tensor h = matmul(x, weight);
        return bias.defined() ? add_bias(h, bias) : h;
    }
};

/// Latent-to-sample MLP: z -> fc1 -> relu -> fc2 -> relu (feature tap f)
/// -> fc3 -> o in R^2. The tap sits at the second hidden layer.
struct Generator {
    Linear fc1, fc2, fc3;

    struct Out {
        Tensor f;  // [b x k_hidden], post-relu feature tap
        Tensor o;  // [b x 2]
    };
    Out forward(const Tensor& z) const;
};

/// The n independent generators G_1..G_n.
struct GeneratorBank {
    std::vector<Generator> generators;

    std::size_t n() const { return generators.size(); }
};

/// 2 -> hidden -> hidden -> 1 scorer with LeakyReLU(0.2) hidden activations;
/// emits raw (pre-sigmoid) scores.
struct Discriminator {
    Linear fc1, fc2, fc3;

    Tensor forward(const Tensor& x) const;
};

/// Assignment module and selection head: per-generator bias-free encoders
/// h_i = relu(W_i f_i), then a three-layer trunk with batchnorm+relu on the
/// concatenation [z, h_1..h_n], emitting one logit per generator.
struct GatingNetwork {
    std::vector<Linear> encoders;  // n maps, k_hidden -> m, no bias
    Linear fc1, fc2, fc3;
    Tensor bn1_gamma, bn1_beta, bn2_gamma, bn2_beta;
    BatchNormState bn1_state, bn2_state;

    std::size_t n() const { return encoders.size(); }

    /// Selection logits (the log pi); trains batchnorm stats in Train mode.
    Tensor assignment(const Tensor& z, const std::vector<Tensor>& features, NetMode mode);
};

/// Full assignment -> Gumbel-Softmax -> straight-through pipeline.
SelectionBatch gating_forward(GatingNetwork& gate, const Tensor& z,
                              const std::vector<Tensor>& features, double tau, Rng& rng,
                              NetMode mode);

/// Routes each row to its selected generator: forward copies the chosen
/// generator's row bit-for-bit; backward sends the upstream row to the chosen
/// output and the per-generator inner products to the selection weights.
Tensor compose_fake(const Tensor& selection, const std::vector<Tensor>& outputs);

/// Architecture hyperparameters (config keys under model.*).
struct ModelConfig {
    std::size_t n_generators = 5;
    std::size_t d_z = 32;
    std::size_t k_hidden = 256;
    std::size_t m = 100;
    std::size_t trunk_width = 128;
    std::size_t d_hidden = 128;
};

/// The three trainable components plus their parameter groups. The gating
/// network exists only for n >= 2; a single-generator baseline bypasses it.
struct Models {
    ModelConfig cfg;
    GeneratorBank bank;
    std::optional<GatingNetwork> gate;
    Discriminator disc;

    std::vector<Parameter> gen_params;
    std::vector<Parameter> gate_params;
    std::vector<Parameter> disc_params;

    std::vector<Parameter> all_params() const;
    /// Parameters plus batchnorm running statistics, checkpoint-ready.
    std::vector<CheckpointEntry> state_dict() const;
    /// Restores from entries; any name/shape mismatch raises ConfigError
    /// naming the parameter and both shapes.
    void load_state_dict(const std::vector<CheckpointEntry>& entries);
};

/// Builds and initializes all networks: weights N(0, 0.02), biases zero,
/// batchnorm gamma 1 / beta 0. Consumes the init rng in a fixed order.
Models build_models(const ModelConfig& cfg, Rng& rng);

/// Latent batch z ~ N(0, I) of shape [b x d_z].
Tensor sample_latent(std::size_t b, std::size_t d_z, Rng& rng);

}  // namespace megan

#endif
