// SPDX-License-Identifier: Apache-2.0
#include "megan/losses.hpp"

namespace megan {

std::pair<Tensor, LoadBalanceStats> load_balancing_loss(const SelectionBatch& selection) {
    const Tensor& g = selection.y_hard;
    const std::size_t b = g.rows(), n = g.cols();
    const double target = 1.0 / static_cast<double>(n);

    Tensor p_node = column_means(g);
    Tensor loss = sum(square(add(p_node, -target)));

    LoadBalanceStats stats;
    stats.counts.assign(n, 0);
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t i = 0; i < n; ++i)
            if (g.at(r, i) == 1.0) ++stats.counts[i];
    stats.p.resize(n);
    // Mirrors the differentiable computation order so the two values agree
    // to the last bit: column sum, divide by b, subtract 1/n, square, sum.
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stats.p[i] = static_cast<double>(stats.counts[i]) / static_cast<double>(b);
        const double d = stats.p[i] + -target;
        acc += d * d;
    }
    stats.loss = acc;
    return {loss, stats};
}

Tensor disc_loss(const Tensor& d_real, const Tensor& d_fake) {
    return add(mean(softplus(neg(d_real))), mean(softplus(d_fake)));
}

Tensor gen_loss(const Tensor& d_fake) { return mean(softplus(neg(d_fake))); }

Tensor gating_loss(const Tensor& adv, const Tensor& lb, double lambda_lb) {
    return add(adv, mul(lb, lambda_lb));
}

}  // namespace megan
