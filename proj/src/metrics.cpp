// SPDX-License-Identifier: Apache-2.0
#include "megan/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace megan {

std::uint64_t ModeAssignmentMatrix::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts) t += c;
    return t;
}

std::uint64_t ModeAssignmentMatrix::row_total(std::size_t mode) const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < n; ++i) t += at(mode, i);
    return t;
}

std::uint64_t ModeAssignmentMatrix::col_total(std::size_t gen) const {
    std::uint64_t t = 0;
    for (std::size_t j = 0; j < modes; ++j) t += at(j, gen);
    return t;
}

std::size_t covered_modes(const ModeAssignmentMatrix& matrix, double cover_threshold) {
    std::size_t covered = 0;
    for (std::size_t j = 0; j < matrix.modes; ++j)
        if (static_cast<double>(matrix.row_total(j)) >= cover_threshold) ++covered;
    return covered;
}

double matrix_purity(const ModeAssignmentMatrix& matrix, double cover_threshold) {
    double purity_sum = 0.0;
    std::size_t covered = 0;
    for (std::size_t j = 0; j < matrix.modes; ++j) {
        const std::uint64_t row = matrix.row_total(j);
        if (static_cast<double>(row) < cover_threshold) continue;
        ++covered;
        std::uint64_t best = 0;
        for (std::size_t i = 0; i < matrix.n; ++i) best = std::max(best, matrix.at(j, i));
        purity_sum += static_cast<double>(best) / static_cast<double>(row);
    }
    return covered ? purity_sum / static_cast<double>(covered) : 0.0;
}

std::pair<EvalReport, ModeAssignmentMatrix> evaluate(Models& models, const MixtureSpec& spec,
                                                     std::size_t s, Rng& rng) {
    if (s < 100)
        throw ContractError("evaluate: need at least 100 samples, got " + std::to_string(s));
    const std::size_t n = models.bank.n();
    const std::size_t d_z = models.cfg.d_z;
    constexpr std::size_t kChunk = 256;

    ModeAssignmentMatrix matrix;
    matrix.modes = spec.M();
    matrix.n = n;
    matrix.counts.assign(spec.M() * n, 0);

    std::vector<double> all_points;
    all_points.reserve(s * 2);
    std::vector<std::uint64_t> routed(n, 0);

    std::size_t done = 0;
    while (done < s) {
        const std::size_t take = std::min(kChunk, s - done);
        Tensor z = sample_latent(take, d_z, rng);

        std::vector<Tensor> features, outputs;
        features.reserve(n);
        outputs.reserve(n);
        for (const Generator& g : models.bank.generators) {
            Generator::Out out = g.forward(z);
            features.push_back(out.f);
            outputs.push_back(out.o);
        }

        Tensor selection;
        if (models.gate) {
            // Eval routing: exact categorical sampling. argmax((l + a)/tau) is
            // temperature-independent, so the hard sample is drawn directly.
            Tensor logits = models.gate->assignment(z, features, NetMode::Eval);
            GumbelNoise noise = sample_gumbel(logits.shape(), rng);
            selection = gumbel_max(logits, noise);
        } else {
            selection = Tensor::full({take, 1}, 1.0);
        }
        Tensor fake = compose_fake(selection, outputs);

        const auto nearest = nearest_mode(spec, fake);
        for (std::size_t r = 0; r < take; ++r) {
            std::size_t gen = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (selection.at(r, i) == 1.0) gen = i;
            ++routed[gen];
            all_points.push_back(fake.at(r, 0));
            all_points.push_back(fake.at(r, 1));

            const std::size_t j = nearest[r];
            const double dx = fake.at(r, 0) - spec.centers[j][0];
            const double dy = fake.at(r, 1) - spec.centers[j][1];
            if (std::sqrt(dx * dx + dy * dy) <= 3.0 * spec.sigma)
                ++matrix.at(j, gen);
            else
                ++matrix.outliers;
        }
        done += take;
    }

    EvalReport report;
    report.usage.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        report.usage[i] = static_cast<double>(matrix.col_total(i)) / static_cast<double>(s);
    report.high_quality_fraction =
        static_cast<double>(s - matrix.outliers) / static_cast<double>(s);

    const double cover_threshold = static_cast<double>(s) / (10.0 * static_cast<double>(spec.M()));
    report.modes_covered = covered_modes(matrix, cover_threshold);
    report.specialization_purity = matrix_purity(matrix, cover_threshold);

    // Mean pairwise distance over every generated sample (outliers included).
    double dist_sum = 0.0;
    std::uint64_t pairs = 0;
    for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b2 = a + 1; b2 < s; ++b2) {
            const double dx = all_points[a * 2] - all_points[b2 * 2];
            const double dy = all_points[a * 2 + 1] - all_points[b2 * 2 + 1];
            dist_sum += std::sqrt(dx * dx + dy * dy);
            ++pairs;
        }
    report.diversity_proxy = pairs ? dist_sum / static_cast<double>(pairs) : 0.0;
    return {report, matrix};
}

SpecializationEntropy specialization_entropy(const ModeAssignmentMatrix& matrix) {
    SpecializationEntropy result;
    result.entropy.assign(matrix.n, 0.0);
    result.unused.assign(matrix.n, false);
    for (std::size_t i = 0; i < matrix.n; ++i) {
        const std::uint64_t col = matrix.col_total(i);
        if (col == 0) {
            result.unused[i] = true;
            continue;
        }
        double h = 0.0;
        for (std::size_t j = 0; j < matrix.modes; ++j) {
            const std::uint64_t c = matrix.at(j, i);
            if (c == 0) continue;
            const double q = static_cast<double>(c) / static_cast<double>(col);
            h -= q * std::log(q);
        }
        result.entropy[i] = h;
    }
    return result;
}

}  // namespace megan
