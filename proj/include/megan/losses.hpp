// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_LOSSES_HPP
#define MEGAN_LOSSES_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "megan/gumbel.hpp"
#include "megan/tensor.hpp"

namespace megan {

/// Hard per-batch routing statistics alongside the differentiable loss value.
struct LoadBalanceStats {
    std::vector<std::uint64_t> counts;  // rows routed to each generator
    std::vector<double> p;              // counts / b
    double loss = 0.0;                  // sum_i (p_i - 1/n)^2 from the counts
};

/// Squared deviation of per-generator selection frequencies from 1/n.
/// The differentiable node is built from column means of the one-hot rows
/// (equal in value to the count fractions; the straight-through backward
/// carries its gradient to the logits). The stats hold the hand-count value.
std::pair<Tensor, LoadBalanceStats> load_balancing_loss(const SelectionBatch& selection);

/// Non-saturating discriminator loss on raw scores:
/// mean softplus(-d_real) + mean softplus(d_fake).
Tensor disc_loss(const Tensor& d_real, const Tensor& d_fake);

/// Non-saturating generator-side loss: mean softplus(-d_fake).
Tensor gen_loss(const Tensor& d_fake);

/// Total gating objective: adv + lambda_lb * lb.
Tensor gating_loss(const Tensor& adv, const Tensor& lb, double lambda_lb);

}  // namespace megan

#endif
