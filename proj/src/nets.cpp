// SPDX-License-Identifier: Apache-2.0
#include "megan/nets.hpp"

#include <algorithm>
#include <cmath>

namespace megan {

namespace {

Tensor normal_init(Shape shape, Rng& rng, double stddev) {
    std::vector<double> v(shape_size(shape));
    for (double& x : v) x = stddev * rng.normal();
    return Tensor::from_values(std::move(shape), std::move(v), /*requires_grad=*/true);
}

Linear make_linear(std::size_t in, std::size_t out, bool with_bias, Rng& rng,
                   const std::string& prefix, std::vector<Parameter>& reg) {
    Linear layer;
    layer.weight = normal_init({in, out}, rng, 0.02);
    layer.weight.set_name(prefix + ".weight");
    reg.push_back({layer.weight, prefix + ".weight"});
    if (with_bias) {
        layer.bias = Tensor::zeros({out}, /*requires_grad=*/true);
        layer.bias.set_name(prefix + ".bias");
        reg.push_back({layer.bias, prefix + ".bias"});
    }
    return layer;
}

Tensor affine_param(std::size_t d, double value, const std::string& name,
                    std::vector<Parameter>& reg) {
    Tensor t = Tensor::full({d}, value, /*requires_grad=*/true);
    t.set_name(name);
    reg.push_back({t, name});
    return t;
}

}  // namespace

Generator::Out Generator::forward(const Tensor& z) const {
    Tensor h1 = relu(fc1(z));
    Tensor f = relu(fc2(h1));
    return {f, fc3(f)};
}

Tensor Discriminator::forward(const Tensor& x) const {
    Tensor h1 = leaky_relu(fc1(x), 0.2);
    Tensor h2 = leaky_relu(fc2(h1), 0.2);
    return fc3(h2);
}

Tensor GatingNetwork::assignment(const Tensor& z, const std::vector<Tensor>& features,
                                 NetMode mode) {
    if (features.size() != encoders.size())
        throw ContractError("gating: expected " + std::to_string(encoders.size()) +
                            " feature tensors, got " + std::to_string(features.size()));
    std::vector<Tensor> parts;
    parts.reserve(1 + encoders.size());
    parts.push_back(z);
    for (std::size_t i = 0; i < encoders.size(); ++i)
        parts.push_back(relu(encoders[i](features[i])));
    Tensor h = concat_cols(parts);
    h = relu(batchnorm(fc1(h), bn1_gamma, bn1_beta, bn1_state, mode));
    h = relu(batchnorm(fc2(h), bn2_gamma, bn2_beta, bn2_state, mode));
    return fc3(h);
}

SelectionBatch gating_forward(GatingNetwork& gate, const Tensor& z,
                              const std::vector<Tensor>& features, double tau, Rng& rng,
                              NetMode mode) {
    Tensor logits = gate.assignment(z, features, mode);
    GumbelNoise noise = sample_gumbel(logits.shape(), rng);
    Tensor y = gumbel_softmax(logits, noise, tau);
    Tensor y_hard = straight_through(y);
    return SelectionBatch{logits, y, y_hard, tau};
}

Tensor compose_fake(const Tensor& selection, const std::vector<Tensor>& outputs) {
    if (selection.shape().size() != 2)
        throw ShapeError("compose_fake: selection must be [b x n], got " +
                         shape_str(selection.shape()));
    const std::size_t b = selection.rows(), n = selection.cols();
    if (outputs.size() != n)
        throw ShapeError("compose_fake: " + std::to_string(n) + " selection columns vs " +
                         std::to_string(outputs.size()) + " generator outputs");
    const std::size_t d = outputs.front().cols();
    for (const Tensor& o : outputs)
        if (o.shape().size() != 2 || o.rows() != b || o.cols() != d)
            throw ShapeError("compose_fake: output shape " + shape_str(o.shape()) +
                             " does not match [" + std::to_string(b) + "x" + std::to_string(d) +
                             "]");

    const auto sel = selection.values();
    std::vector<double> out(b * d);
    std::vector<std::size_t> chosen(b);
    for (std::size_t r = 0; r < b; ++r) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (sel[r * n + i] > sel[r * n + best]) best = i;
        chosen[r] = best;
        const auto ov = outputs[best].values();
        for (std::size_t c = 0; c < d; ++c) out[r * d + c] = ov[r * d + c];
    }

    std::vector<Tensor> parents;
    parents.reserve(1 + n);
    parents.push_back(selection);
    for (const Tensor& o : outputs) parents.push_back(o);
    detail::Node* sel_node = selection.node();
    std::vector<detail::Node*> out_nodes;
    out_nodes.reserve(n);
    for (const Tensor& o : outputs) out_nodes.push_back(o.node());

    return Tensor::make_op(
        {b, d}, std::move(out), std::move(parents),
        [sel_node, out_nodes, b, n, d, chosen = std::move(chosen)](detail::Node& self) {
            const double* g = self.grad.data();
            // d FI / d o_i = g_i per row: the chosen row gets the upstream row,
            // unselected generators get exactly nothing.
            for (std::size_t r = 0; r < b; ++r) {
                detail::Node* on = out_nodes[chosen[r]];
                if (!on->requires_grad) continue;
                on->ensure_grad();
                const double w = sel_node->values[r * n + chosen[r]];
                for (std::size_t c = 0; c < d; ++c)
                    on->grad[r * d + c] += w * g[r * d + c];
            }
            // d FI / d g_i = <upstream row, o_i row>: every column receives its
            // inner product, which is the straight-through path to the logits.
            if (sel_node->requires_grad) {
                sel_node->ensure_grad();
                for (std::size_t r = 0; r < b; ++r)
                    for (std::size_t i = 0; i < n; ++i) {
                        const auto& ov = out_nodes[i]->values;
                        double dot = 0.0;
                        for (std::size_t c = 0; c < d; ++c)
                            dot += g[r * d + c] * ov[r * d + c];
                        sel_node->grad[r * n + i] += dot;
                    }
            }
        });
}

std::vector<Parameter> Models::all_params() const {
    std::vector<Parameter> all = gen_params;
    all.insert(all.end(), gate_params.begin(), gate_params.end());
    all.insert(all.end(), disc_params.begin(), disc_params.end());
    return all;
}

std::vector<CheckpointEntry> Models::state_dict() const {
    std::vector<CheckpointEntry> entries;
    for (const Parameter& p : all_params())
        entries.push_back({p.name, p.tensor.shape(),
                           std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())});
    if (gate) {
        const auto add_stats = [&entries](const std::string& prefix, const BatchNormState& st) {
            entries.push_back({prefix + ".running_mean", {st.running_mean.size()}, st.running_mean});
            entries.push_back({prefix + ".running_var", {st.running_var.size()}, st.running_var});
        };
        add_stats("gate.trunk.bn1", gate->bn1_state);
        add_stats("gate.trunk.bn2", gate->bn2_state);
    }
    return entries;
}

void Models::load_state_dict(const std::vector<CheckpointEntry>& entries) {
    const std::vector<CheckpointEntry> want = state_dict();
    if (entries.size() != want.size())
        throw ConfigError("checkpoint holds " + std::to_string(entries.size()) +
                          " entries, model needs " + std::to_string(want.size()));
    for (std::size_t k = 0; k < want.size(); ++k) {
        if (entries[k].name != want[k].name)
            throw ConfigError("checkpoint entry '" + entries[k].name + "' where '" +
                              want[k].name + "' was expected");
        if (!same_shape(entries[k].shape, want[k].shape))
            throw ConfigError("checkpoint entry '" + entries[k].name + "' has shape " +
                              shape_str(entries[k].shape) + ", model expects " +
                              shape_str(want[k].shape));
    }
    std::size_t k = 0;
    for (Parameter& p : gen_params) {
        auto v = p.tensor.values_mut();
        std::copy(entries[k].values.begin(), entries[k].values.end(), v.begin());
        ++k;
    }
    for (Parameter& p : gate_params) {
        auto v = p.tensor.values_mut();
        std::copy(entries[k].values.begin(), entries[k].values.end(), v.begin());
        ++k;
    }
    for (Parameter& p : disc_params) {
        auto v = p.tensor.values_mut();
        std::copy(entries[k].values.begin(), entries[k].values.end(), v.begin());
        ++k;
    }
    if (gate) {
        gate->bn1_state.running_mean = entries[k++].values;
        gate->bn1_state.running_var = entries[k++].values;
        gate->bn2_state.running_mean = entries[k++].values;
        gate->bn2_state.running_var = entries[k++].values;
    }
}

Models build_models(const ModelConfig& cfg, Rng& rng) {
    if (cfg.n_generators < 1)
        throw ConfigError("model.n_generators must be at least 1, got " +
                          std::to_string(cfg.n_generators));
    Models m;
    m.cfg = cfg;

    for (std::size_t i = 0; i < cfg.n_generators; ++i) {
        const std::string p = "gen." + std::to_string(i);
        Generator g;
        g.fc1 = make_linear(cfg.d_z, cfg.k_hidden, true, rng, p + ".fc1", m.gen_params);
        g.fc2 = make_linear(cfg.k_hidden, cfg.k_hidden, true, rng, p + ".fc2", m.gen_params);
        g.fc3 = make_linear(cfg.k_hidden, 2, true, rng, p + ".fc3", m.gen_params);
        m.bank.generators.push_back(std::move(g));
    }

    if (cfg.n_generators >= 2) {
        GatingNetwork gate;
        for (std::size_t i = 0; i < cfg.n_generators; ++i)
            gate.encoders.push_back(make_linear(cfg.k_hidden, cfg.m, false, rng,
                                                "gate.enc." + std::to_string(i), m.gate_params));
        const std::size_t trunk_in = cfg.d_z + cfg.n_generators * cfg.m;
        gate.fc1 = make_linear(trunk_in, cfg.trunk_width, true, rng, "gate.trunk.fc1",
                               m.gate_params);
        gate.bn1_gamma = affine_param(cfg.trunk_width, 1.0, "gate.trunk.bn1.gamma", m.gate_params);
        gate.bn1_beta = affine_param(cfg.trunk_width, 0.0, "gate.trunk.bn1.beta", m.gate_params);
        gate.fc2 = make_linear(cfg.trunk_width, cfg.trunk_width, true, rng, "gate.trunk.fc2",
                               m.gate_params);
        gate.bn2_gamma = affine_param(cfg.trunk_width, 1.0, "gate.trunk.bn2.gamma", m.gate_params);
        gate.bn2_beta = affine_param(cfg.trunk_width, 0.0, "gate.trunk.bn2.beta", m.gate_params);
        gate.fc3 = make_linear(cfg.trunk_width, cfg.n_generators, true, rng, "gate.trunk.fc3",
                               m.gate_params);
        gate.bn1_state = {std::vector<double>(cfg.trunk_width, 0.0),
                          std::vector<double>(cfg.trunk_width, 1.0)};
        gate.bn2_state = {std::vector<double>(cfg.trunk_width, 0.0),
                          std::vector<double>(cfg.trunk_width, 1.0)};
        m.gate = std::move(gate);
    }

    m.disc.fc1 = make_linear(2, cfg.d_hidden, true, rng, "disc.fc1", m.disc_params);
    m.disc.fc2 = make_linear(cfg.d_hidden, cfg.d_hidden, true, rng, "disc.fc2", m.disc_params);
    m.disc.fc3 = make_linear(cfg.d_hidden, 1, true, rng, "disc.fc3", m.disc_params);
    return m;
}

Tensor sample_latent(std::size_t b, std::size_t d_z, Rng& rng) {
    std::vector<double> v(b * d_z);
    for (double& x : v) x = rng.normal();
    return Tensor::from_values({b, d_z}, std::move(v));
}

}  // namespace megan
