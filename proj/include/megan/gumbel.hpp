// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_GUMBEL_HPP
#define MEGAN_GUMBEL_HPP

#include <cstdint>

#include "megan/rng.hpp"
#include "megan/tensor.hpp"

namespace megan {

/// A batch of Gumbel(0,1) draws, a_i = -log(-log u_i), held as a constant
/// tensor. Uniform endpoint draws are rejected, so every entry is finite.
struct GumbelNoise {
    Tensor a;
};

/// Per-row categorical routing state: selection logits (log pi), the soft
/// relaxed sample y, the hard one-hot rows actually used downstream, and the
/// temperature both were produced at.
struct SelectionBatch {
    Tensor logits;  // [b x n]
    Tensor y;       // [b x n], rows are probability vectors
    Tensor y_hard;  // [b x n], rows exactly one-hot
    double tau = 1.0;
};

/// Maps one uniform draw in (0,1) to a Gumbel(0,1) variate.
double gumbel_from_u(double u);

/// I.i.d. Gumbel(0,1) noise of the given shape.
GumbelNoise sample_gumbel(const Shape& shape, Rng& rng);

/// Exact categorical sampling: per row, one_hot(argmax(logits + a)).
/// Ties break to the lowest index. The result is a constant (no gradient).
Tensor gumbel_max(const Tensor& logits, const GumbelNoise& noise);

/// Temperature-controlled relaxation: softmax((logits + a) / tau) by rows,
/// differentiable with respect to logits.
Tensor gumbel_softmax(const Tensor& logits, const GumbelNoise& noise, double tau);

/// Straight-through wrapper: forward emits exactly one_hot(argmax(y)) per row;
/// backward passes the upstream gradient through unchanged, so logits receive
/// the soft sample's gradient.
Tensor straight_through(const Tensor& y);

/// Annealing schedule tau(iter) = initial * exp(-rate * iter), clamped below.
struct TemperatureSchedule {
    double initial = 0.5;
    double rate = 0.001;
    double floor = 0.01;

    double at(std::uint64_t iter) const;
};

/// The default schedule evaluated at `iter`.
double temperature(std::uint64_t iter);

}  // namespace megan

#endif
