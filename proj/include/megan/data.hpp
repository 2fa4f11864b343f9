// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_DATA_HPP
#define MEGAN_DATA_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "megan/rng.hpp"
#include "megan/tensor.hpp"

namespace megan {

/// Synthetic 2-D Gaussian mixture with exact mode ground truth. Centers are
/// laid out deterministically: ring modes at angle 2*pi*j/M on a circle, grid
/// modes on a sqrt(M) x sqrt(M) lattice centered at the origin.
struct MixtureSpec {
    enum class Kind { Ring, Grid };

    Kind kind = Kind::Ring;
    std::size_t modes = 8;
    double scale = 2.0;  // ring radius or grid spacing
    double sigma = 0.05;
    std::vector<std::array<double, 2>> centers;

    std::size_t M() const { return centers.size(); }
};

/// Builds a spec and validates the separability invariants: M >= 2, distinct
/// centers, sigma below half the minimum inter-center distance. Grid mode
/// counts must be perfect squares.
MixtureSpec make_spec(MixtureSpec::Kind kind, std::size_t modes, double scale, double sigma);

/// Smallest distance between two distinct centers.
double min_center_distance(const MixtureSpec& spec);

/// A mini-batch of real samples. Labels are ground truth for metrics only
/// and never reach any model.
struct RealBatch {
    Tensor points;  // [b x 2], constant
    std::vector<std::size_t> mode_labels;
};

/// Mode index uniform over M, then center + sigma * N(0, I2).
RealBatch sample_real(const MixtureSpec& spec, std::size_t b, Rng& rng);

/// Euclidean-nearest center per point; ties break to the lowest index.
std::vector<std::size_t> nearest_mode(const MixtureSpec& spec, const Tensor& points);

}  // namespace megan

#endif
