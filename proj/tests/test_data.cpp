// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "megan/data.hpp"

using namespace megan;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("ring layout places modes on the circle") {
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Ring, 8, 2.0, 0.05);
    REQUIRE(spec.M() == 8);
    CHECK(spec.centers[0][0] == 2.0);
    CHECK(spec.centers[0][1] == 0.0);
    for (std::size_t j = 0; j < 8; ++j) {
        const double theta = 2.0 * kPi * static_cast<double>(j) / 8.0;
        CHECK(std::fabs(spec.centers[j][0] - 2.0 * std::cos(theta)) < 1e-15);
        CHECK(std::fabs(spec.centers[j][1] - 2.0 * std::sin(theta)) < 1e-15);
        const double r = std::hypot(spec.centers[j][0], spec.centers[j][1]);
        CHECK(std::fabs(r - 2.0) < 1e-12);
    }
    // Two modes sit antipodally.
    MixtureSpec two = make_spec(MixtureSpec::Kind::Ring, 2, 2.0, 0.1);
    CHECK(std::fabs(two.centers[0][0] - 2.0) < 1e-12);
    CHECK(std::fabs(two.centers[1][0] + 2.0) < 1e-12);
    CHECK(std::fabs(two.centers[0][1]) < 1e-12);
    CHECK(std::fabs(two.centers[1][1]) < 1e-12);
    CHECK(std::fabs(min_center_distance(two) - 4.0) < 1e-12);
}

TEST_CASE("grid layout is a centered row-major lattice") {
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Grid, 9, 1.5, 0.05);
    REQUIRE(spec.M() == 9);
    CHECK(spec.centers[0][0] == -1.5);  // (col 0, row 0)
    CHECK(spec.centers[0][1] == -1.5);
    CHECK(spec.centers[1][0] == 0.0);
    CHECK(spec.centers[4][0] == 0.0);  // middle cell at the origin
    CHECK(spec.centers[4][1] == 0.0);
    CHECK(spec.centers[8][0] == 1.5);
    CHECK(spec.centers[8][1] == 1.5);
    CHECK(min_center_distance(spec) == 1.5);
}

TEST_CASE("spec validation rejects broken mixtures") {
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Ring, 1, 2.0, 0.05), ConfigError);
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Grid, 24, 2.0, 0.05), ConfigError);
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Ring, 8, -1.0, 0.05), ConfigError);
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Ring, 8, 2.0, -0.01), ConfigError);
    // Separability: sigma must stay below half the minimum center distance.
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Ring, 8, 2.0, 0.8), ConfigError);
    CHECK_THROWS_AS(make_spec(MixtureSpec::Kind::Grid, 9, 1.0, 0.5), ConfigError);
    CHECK_NOTHROW(make_spec(MixtureSpec::Kind::Grid, 9, 1.0, 0.49));
}

TEST_CASE("zero-sigma sampling returns exact centers with true labels") {
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Ring, 8, 2.0, 0.0);
    Rng rng(31);
    RealBatch batch = sample_real(spec, 64, rng);
    REQUIRE(batch.mode_labels.size() == 64);
    for (std::size_t r = 0; r < 64; ++r) {
        const std::size_t j = batch.mode_labels[r];
        REQUIRE(j < 8);
        CHECK(batch.points.at(r, 0) == spec.centers[j][0]);
        CHECK(batch.points.at(r, 1) == spec.centers[j][1]);
    }
    CHECK_FALSE(batch.points.requires_grad());
}

TEST_CASE("mode frequencies are uniform and sampling is deterministic") {
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Grid, 4, 2.0, 0.05);
    Rng rng(37);
    const std::size_t b = 40000;
    RealBatch batch = sample_real(spec, b, rng);
    std::vector<std::size_t> counts(4, 0);
    for (std::size_t j : batch.mode_labels) counts[j]++;
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(std::fabs(counts[j] / static_cast<double>(b) - 0.25) < 0.01);

    Rng r1(91), r2(91);
    RealBatch a = sample_real(spec, 256, r1);
    RealBatch c = sample_real(spec, 256, r2);
    CHECK(a.mode_labels == c.mode_labels);
    for (std::size_t i = 0; i < a.points.size(); ++i)
        CHECK(a.points.values()[i] == c.points.values()[i]);
}

TEST_CASE("per-mode scatter matches the isotropic sigma") {
    const double sigma = 0.05;
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Ring, 8, 2.0, sigma);
    Rng rng(41);
    const std::size_t b = 50000;
    RealBatch batch = sample_real(spec, b, rng);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t r = 0; r < b; ++r) {
        const auto& c = spec.centers[batch.mode_labels[r]];
        const double dx = batch.points.at(r, 0) - c[0];
        const double dy = batch.points.at(r, 1) - c[1];
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double var = sigma * sigma;
    CHECK(std::fabs(sxx / b - var) < 0.1 * var);
    CHECK(std::fabs(syy / b - var) < 0.1 * var);
    CHECK(std::fabs(sxy / b) < 0.1 * var);
}

TEST_CASE("nearest mode recovers centers, labels, and breaks ties low") {
    MixtureSpec spec = make_spec(MixtureSpec::Kind::Ring, 8, 2.0, 0.05);
    std::vector<double> center_pts;
    for (const auto& c : spec.centers) {
        center_pts.push_back(c[0]);
        center_pts.push_back(c[1]);
    }
    Tensor pts = Tensor::from_values({8, 2}, std::move(center_pts));
    const auto self = nearest_mode(spec, pts);
    for (std::size_t j = 0; j < 8; ++j) CHECK(self[j] == j);

    // Sampled labels agree with the geometric assignment at small sigma.
    Rng rng(43);
    RealBatch batch = sample_real(spec, 2000, rng);
    CHECK(nearest_mode(spec, batch.points) == batch.mode_labels);

    // A 2x2 grid gives exact four-way and two-way ties at the midpoints.
    MixtureSpec grid = make_spec(MixtureSpec::Kind::Grid, 4, 2.0, 0.05);
    Tensor mid = Tensor::from_values({3, 2}, {0.0, 0.0, 0.0, -1.0, 1.0, 0.0});
    const auto tie = nearest_mode(grid, mid);
    CHECK(tie[0] == 0);  // all four centers equidistant
    CHECK(tie[1] == 0);  // between centers 0 and 1
    CHECK(tie[2] == 1);  // between centers 1 and 3

    CHECK_THROWS_AS(nearest_mode(spec, Tensor::zeros({4, 3})), ShapeError);
}
