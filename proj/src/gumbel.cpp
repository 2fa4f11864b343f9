// SPDX-License-Identifier: Apache-2.0
#include "megan/gumbel.hpp"

#include <algorithm>
#include <cmath>

namespace megan {

double gumbel_from_u(double u) { return -std::log(-std::log(u)); }

GumbelNoise sample_gumbel(const Shape& shape, Rng& rng) {
    std::vector<double> a(shape_size(shape));
    for (double& v : a) v = gumbel_from_u(rng.uniform_open());
    return GumbelNoise{Tensor::from_values(shape, std::move(a))};
}

namespace {

// Index of the row maximum; strict comparison keeps the lowest index on ties.
std::size_t row_argmax(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (row[i] > row[best]) best = i;
    return best;
}

}  // namespace

Tensor gumbel_max(const Tensor& logits, const GumbelNoise& noise) {
    if (!same_shape(logits.shape(), noise.a.shape()))
        throw ShapeError("gumbel_max: logits " + shape_str(logits.shape()) +
                         " vs noise " + shape_str(noise.a.shape()));
    const std::size_t b = logits.rows(), n = logits.cols();
    const auto lv = logits.values();
    const auto av = noise.a.values();
    std::vector<double> out(b * n, 0.0);
    std::vector<double> perturbed(n);
    for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t i = 0; i < n; ++i) perturbed[i] = lv[r * n + i] + av[r * n + i];
        out[r * n + row_argmax(perturbed.data(), n)] = 1.0;
    }
    return Tensor::from_values({b, n}, std::move(out));
}

Tensor gumbel_softmax(const Tensor& logits, const GumbelNoise& noise, double tau) {
    if (tau <= 0.0)
        throw ContractError("gumbel_softmax: tau must be positive, got " + std::to_string(tau));
    if (!same_shape(logits.shape(), noise.a.shape()))
        throw ShapeError("gumbel_softmax: logits " + shape_str(logits.shape()) +
                         " vs noise " + shape_str(noise.a.shape()));
    return softmax(mul(add(logits, noise.a), 1.0 / tau), 1);
}

Tensor straight_through(const Tensor& y) {
    if (y.shape().size() != 2)
        throw ShapeError("straight_through expects [b x n], got " + shape_str(y.shape()));
    const std::size_t b = y.rows(), n = y.cols();
    const auto yv = y.values();
    std::vector<double> out(b * n, 0.0);
    for (std::size_t r = 0; r < b; ++r)
        out[r * n + row_argmax(yv.data() + r * n, n)] = 1.0;

    detail::Node* yn = y.node();
    return Tensor::make_op({b, n}, std::move(out), {y}, [yn](detail::Node& self) {
        if (!yn->requires_grad) return;
        yn->ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i) yn->grad[i] += self.grad[i];
    });
}

double TemperatureSchedule::at(std::uint64_t iter) const {
    return std::max(floor, initial * std::exp(-rate * static_cast<double>(iter)));
}

double temperature(std::uint64_t iter) { return TemperatureSchedule{}.at(iter); }

}  // namespace megan
