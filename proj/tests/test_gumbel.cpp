// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "megan/gumbel.hpp"
#include "support/gradcheck.hpp"

using namespace megan;
using namespace megan::testing;

namespace {

std::vector<double> softmax_direct(const std::vector<double>& l) {
    const double mx = *std::max_element(l.begin(), l.end());
    std::vector<double> p(l.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) denom += (p[i] = std::exp(l[i] - mx));
    for (double& v : p) v /= denom;
    return p;
}

// Empirical selection frequencies of gumbel_max for one logit vector.
std::vector<double> selection_freqs(const std::vector<double>& logit_row, std::size_t draws,
                                    Rng& rng) {
    const std::size_t n = logit_row.size();
    const std::size_t rows = 10000;
    std::vector<double> tiled(rows * n);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < n; ++i) tiled[r * n + i] = logit_row[i];
    Tensor logits = Tensor::from_values({rows, n}, std::move(tiled));

    std::vector<double> counts(n, 0.0);
    std::size_t done = 0;
    while (done < draws) {
        const std::size_t take = std::min(rows, draws - done);
        GumbelNoise noise = sample_gumbel({rows, n}, rng);
        Tensor sel = gumbel_max(logits, noise);
        for (std::size_t r = 0; r < take; ++r)
            for (std::size_t i = 0; i < n; ++i) counts[i] += sel.at(r, i);
        done += take;
    }
    for (double& c : counts) c /= static_cast<double>(draws);
    return counts;
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double tv = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tv += std::fabs(a[i] - b[i]);
    return 0.5 * tv;
}

double mean_row_entropy(const Tensor& y) {
    double total = 0.0;
    for (std::size_t r = 0; r < y.rows(); ++r) {
        double h = 0.0;
        for (std::size_t c = 0; c < y.cols(); ++c) {
            const double p = y.at(r, c);
            if (p > 0.0) h -= p * std::log(p);
        }
        total += h;
    }
    return total / static_cast<double>(y.rows());
}

}  // namespace

TEST_CASE("gumbel variate from u = 0.5 matches direct evaluation") {
    CHECK(std::fabs(gumbel_from_u(0.5) - 0.36651292058166432) < 1e-12);
    CHECK(std::fabs(gumbel_from_u(0.5) - (-std::log(std::log(2.0)))) < 1e-15);
}

TEST_CASE("gumbel noise is always finite") {
    Rng rng(101);
    GumbelNoise noise = sample_gumbel({1000, 100}, rng);
    for (double v : noise.a.values()) CHECK(std::isfinite(v));
}

TEST_CASE("gumbel noise mean approaches the Euler-Mascheroni constant") {
    Rng rng(103);
    double total = 0.0;
    const std::size_t n = 1000000;
    for (std::size_t i = 0; i < n; ++i) total += gumbel_from_u(rng.uniform_open());
    CHECK(std::fabs(total / n - 0.5772156649) < 0.01);
}

TEST_CASE("gumbel_max concentrates on a dominant logit") {
    Rng rng(107);
    auto freqs = selection_freqs({10.0, 0.0, 0.0}, 1000000, rng);
    const double p0 = 1.0 / (1.0 + 2.0 * std::exp(-10.0));  // softmax([10,0,0])[0]
    CHECK(std::fabs(freqs[0] - p0) < 5e-4);
    CHECK(freqs[0] > 0.9994);
}

TEST_CASE("gumbel_max with one category always selects it") {
    Rng rng(109);
    GumbelNoise noise = sample_gumbel({64, 1}, rng);
    Tensor sel = gumbel_max(Tensor::zeros({64, 1}), noise);
    for (double v : sel.values()) CHECK(v == 1.0);
}

TEST_CASE("gumbel_max is uniform on tied logits (chi-squared)") {
    Rng rng(113);
    auto freqs = selection_freqs({0.0, 0.0, 0.0, 0.0}, 1000000, rng);
    double chi2 = 0.0;
    for (double f : freqs) {
        CHECK(std::fabs(f - 0.25) < 0.005);
        const double obs = f * 1000000.0, expd = 250000.0;
        chi2 += (obs - expd) * (obs - expd) / expd;
    }
    CHECK(chi2 < 11.345);  // dof 3 critical value at p = 0.01
}

TEST_CASE("gumbel_max frequencies match softmax in total variation") {
    Rng rng(127);
    const std::vector<std::vector<double>> cases = {
        {0.7, -0.3},
        {1.2, 0.0, -0.5, 0.3, 0.9},
        {0.1, -0.2, 0.4, 0.0, -0.6, 0.8, -0.1, 0.2, 0.5, -0.4},
    };
    for (const auto& l : cases) {
        auto freqs = selection_freqs(l, 1000000, rng);
        CHECK(tv_distance(freqs, softmax_direct(l)) < 0.005);
    }
}

TEST_CASE("gumbel_softmax limits: uniform at huge tau, near one-hot at tiny tau") {
    Rng rng(131);
    Tensor logits = random_leaf({100, 4}, rng, -1.5, 1.5);
    GumbelNoise noise = sample_gumbel({100, 4}, rng);

    Tensor y_hot = gumbel_softmax(logits, noise, 1e6);
    for (std::size_t r = 0; r < 100; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(std::fabs(y_hot.at(r, c) - 0.25) < 1e-3);

    Tensor y_cold = gumbel_softmax(logits, noise, 0.01);
    std::size_t distinct_rows = 0;
    for (std::size_t r = 0; r < 100; ++r) {
        // Rows whose perturbed logits are well separated approximate the hard sample.
        std::vector<double> pert(4);
        for (std::size_t c = 0; c < 4; ++c) pert[c] = logits.at(r, c) + noise.a.at(r, c);
        std::sort(pert.begin(), pert.end());
        if (pert[3] - pert[2] < 0.1) continue;
        ++distinct_rows;
        double mx = 0.0;
        for (std::size_t c = 0; c < 4; ++c) mx = std::max(mx, y_cold.at(r, c));
        CHECK(mx > 0.999);
    }
    CHECK(distinct_rows > 50);
}

TEST_CASE("gumbel_softmax rejects nonpositive tau") {
    Rng rng(137);
    GumbelNoise noise = sample_gumbel({2, 3}, rng);
    Tensor logits = Tensor::zeros({2, 3});
    CHECK_THROWS_AS(gumbel_softmax(logits, noise, 0.0), ContractError);
    CHECK_THROWS_AS(gumbel_softmax(logits, noise, -1.0), ContractError);
}

TEST_CASE("gumbel_softmax gradient wrt logits matches finite differences") {
    Rng rng(139);
    Tensor logits = random_leaf({3, 5}, rng, -1.0, 1.0);
    GumbelNoise noise = sample_gumbel({3, 5}, rng);
    Tensor probe = random_probe({3, 5}, rng);
    std::vector<Tensor> leaves{logits};
    auto r = grad_check([=] { return sum(mul(gumbel_softmax(logits, noise, 0.7), probe)); },
                        leaves);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("straight_through forward is the hard argmax") {
    Tensor y = Tensor::from_values({1, 3}, {0.2, 0.5, 0.3});
    Tensor h = straight_through(y);
    CHECK(h.at(0, 0) == 0.0);
    CHECK(h.at(0, 1) == 1.0);
    CHECK(h.at(0, 2) == 0.0);

    Tensor hot = Tensor::from_values({1, 4}, {0.0, 0.0, 1.0, 0.0});
    Tensor h2 = straight_through(hot);
    for (std::size_t i = 0; i < 4; ++i) CHECK(h2.at(i) == hot.at(i));

    // Ties break to the lowest index.
    Tensor tie = Tensor::from_values({1, 3}, {0.4, 0.4, 0.2});
    CHECK(straight_through(tie).at(0, 0) == 1.0);
}

TEST_CASE("straight_through output is exactly one-hot at every temperature") {
    Rng rng(149);
    for (double tau : {10.0, 1.0, 0.1, 0.01}) {
        Tensor logits = random_leaf({50, 6}, rng, -2.0, 2.0);
        GumbelNoise noise = sample_gumbel({50, 6}, rng);
        Tensor h = straight_through(gumbel_softmax(logits, noise, tau));
        for (std::size_t r = 0; r < 50; ++r) {
            double row_sum = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                const double v = h.at(r, c);
                CHECK((v == 0.0 || v == 1.0));
                row_sum += v;
            }
            CHECK(row_sum == 1.0);
        }
    }
}

TEST_CASE("straight_through gradient is bit-identical to the soft path") {
    Rng rng(151);
    for (int rep = 0; rep < 20; ++rep) {
        const double tau = 0.05 + rng.uniform() * 2.0;
        Tensor logits = random_leaf({8, 5}, rng, -2.0, 2.0);
        GumbelNoise noise = sample_gumbel({8, 5}, rng);
        Tensor probe = random_probe({8, 5}, rng);

        logits.zero_grad();
        backward(sum(mul(gumbel_softmax(logits, noise, tau), probe)));
        std::vector<double> soft_grad(logits.grad().begin(), logits.grad().end());

        logits.zero_grad();
        backward(sum(mul(straight_through(gumbel_softmax(logits, noise, tau)), probe)));
        for (std::size_t i = 0; i < soft_grad.size(); ++i)
            CHECK(std::bit_cast<std::uint64_t>(soft_grad[i]) ==
                  std::bit_cast<std::uint64_t>(logits.grad()[i]));
    }
}

TEST_CASE("row-constant logit shifts leave the selection unchanged") {
    Rng rng(157);
    Tensor logits = random_leaf({20, 4}, rng, -1.0, 1.0);
    GumbelNoise noise = sample_gumbel({20, 4}, rng);
    Tensor y1 = gumbel_softmax(logits, noise, 0.5);

    std::vector<double> shifted(logits.values().begin(), logits.values().end());
    for (std::size_t r = 0; r < 20; ++r)
        for (std::size_t c = 0; c < 4; ++c) shifted[r * 4 + c] += 3.7;
    Tensor y2 = gumbel_softmax(Tensor::from_values({20, 4}, std::move(shifted)), noise, 0.5);

    for (std::size_t i = 0; i < y1.size(); ++i) CHECK(std::fabs(y1.at(i) - y2.at(i)) < 1e-12);
    Tensor h1 = straight_through(y1), h2 = straight_through(y2);
    for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1.at(i) == h2.at(i));
}

TEST_CASE("mean soft-sample entropy falls as the schedule cools") {
    Rng rng(163);
    Tensor logits = random_leaf({2000, 4}, rng, -1.0, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (std::uint64_t iter : {0ULL, 500ULL, 1000ULL, 2000ULL, 4000ULL}) {
        GumbelNoise noise = sample_gumbel({2000, 4}, rng);
        const double h = mean_row_entropy(gumbel_softmax(logits, noise, temperature(iter)));
        CHECK(h <= prev * 1.05);  // monotone trend, 5% Monte Carlo allowance
        prev = h;
    }
}

TEST_CASE("temperature schedule values") {
    CHECK(temperature(0) == 0.5);
    CHECK(std::fabs(temperature(1000) - 0.5 * std::exp(-1.0)) < 1e-15);
    CHECK(std::fabs(temperature(1000) - 0.18394) < 1e-5);
    CHECK(temperature(1000000) == 0.01);

    TemperatureSchedule custom{1.0, 0.01, 0.05};
    CHECK(custom.at(0) == 1.0);
    CHECK(std::fabs(custom.at(100) - std::exp(-1.0)) < 1e-15);
    CHECK(custom.at(100000) == 0.05);
}
