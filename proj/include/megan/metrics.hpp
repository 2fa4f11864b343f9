// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_METRICS_HPP
#define MEGAN_METRICS_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "megan/data.hpp"
#include "megan/nets.hpp"

namespace megan {

/// Counts of evaluation samples per (true data mode x generator). Only
/// high-quality samples (within 3 sigma of their nearest center) enter the
/// matrix; the rest are tracked as outliers, so total() + outliers equals the
/// evaluation sample count.
struct ModeAssignmentMatrix {
    std::size_t modes = 0;
    std::size_t n = 0;
    std::vector<std::uint64_t> counts;  // modes x n, row-major
    std::uint64_t outliers = 0;

    std::uint64_t at(std::size_t mode, std::size_t gen) const { return counts[mode * n + gen]; }
    std::uint64_t& at(std::size_t mode, std::size_t gen) { return counts[mode * n + gen]; }
    std::uint64_t total() const;
    std::uint64_t row_total(std::size_t mode) const;
    std::uint64_t col_total(std::size_t gen) const;
};

struct EvalReport {
    std::size_t modes_covered = 0;
    std::vector<double> usage;               // matrix column sums / s
    double specialization_purity = 0.0;      // averaged over covered modes
    double high_quality_fraction = 0.0;
    double diversity_proxy = 0.0;            // mean pairwise distance of generated samples
};

/// Modes whose row total meets the coverage threshold.
std::size_t covered_modes(const ModeAssignmentMatrix& matrix, double cover_threshold);

/// Mean dominant-generator share over covered modes; 0 when none are covered.
/// Invariant under permuting generator columns.
double matrix_purity(const ModeAssignmentMatrix& matrix, double cover_threshold);

/// Draws s latents, routes them through the gating network in eval mode
/// (exact categorical sampling under the given rng; batchnorm uses running
/// stats), generates samples, and scores coverage/specialization against the
/// mixture ground truth. A mode counts as covered with at least s/(10 M)
/// high-quality samples.
std::pair<EvalReport, ModeAssignmentMatrix> evaluate(Models& models, const MixtureSpec& spec,
                                                     std::size_t s, Rng& rng);

/// Per-generator entropy (nats) over modes; a generator with no samples gets
/// entropy 0 and its `unused` flag set.
struct SpecializationEntropy {
    std::vector<double> entropy;
    std::vector<bool> unused;
};
SpecializationEntropy specialization_entropy(const ModeAssignmentMatrix& matrix);

}  // namespace megan

#endif
