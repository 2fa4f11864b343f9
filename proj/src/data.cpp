// SPDX-License-Identifier: Apache-2.0
#include "megan/data.hpp"

#include <cmath>
#include <limits>

namespace megan {

MixtureSpec make_spec(MixtureSpec::Kind kind, std::size_t modes, double scale, double sigma) {
    if (modes < 2)
        throw ConfigError("data.modes must be at least 2, got " + std::to_string(modes));
    if (scale <= 0.0) throw ConfigError("mixture scale must be positive");
    if (sigma < 0.0) throw ConfigError("data.sigma must be nonnegative");

    MixtureSpec spec;
    spec.kind = kind;
    spec.modes = modes;
    spec.scale = scale;
    spec.sigma = sigma;

    if (kind == MixtureSpec::Kind::Ring) {
        spec.centers.reserve(modes);
        for (std::size_t j = 0; j < modes; ++j) {
            const double theta = 2.0 * 3.14159265358979323846 * static_cast<double>(j) /
                                 static_cast<double>(modes);
            spec.centers.push_back({scale * std::cos(theta), scale * std::sin(theta)});
        }
    } else {
        const auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(modes))));
        if (side * side != modes)
            throw ConfigError("data.modes = " + std::to_string(modes) +
                              " is not a perfect square (grid layout)");
        const double offset = (static_cast<double>(side) - 1.0) / 2.0;
        spec.centers.reserve(modes);
        for (std::size_t row = 0; row < side; ++row)
            for (std::size_t col = 0; col < side; ++col)
                spec.centers.push_back({(static_cast<double>(col) - offset) * scale,
                                        (static_cast<double>(row) - offset) * scale});
    }

    const double d_min = min_center_distance(spec);
    if (d_min <= 0.0) throw ConfigError("mixture centers are not pairwise distinct");
    if (sigma >= 0.5 * d_min)
        throw ConfigError("data.sigma = " + std::to_string(sigma) +
                          " breaks separability (half min center distance " +
                          std::to_string(0.5 * d_min) + ")");
    return spec;
}

double min_center_distance(const MixtureSpec& spec) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.centers.size(); ++i)
        for (std::size_t j = i + 1; j < spec.centers.size(); ++j) {
            const double dx = spec.centers[i][0] - spec.centers[j][0];
            const double dy = spec.centers[i][1] - spec.centers[j][1];
            best = std::min(best, std::sqrt(dx * dx + dy * dy));
        }
    return best;
}

RealBatch sample_real(const MixtureSpec& spec, std::size_t b, Rng& rng) {
    if (b < 1) throw ContractError("sample_real: batch size must be at least 1");
    std::vector<double> pts(b * 2);
    std::vector<std::size_t> labels(b);
    for (std::size_t r = 0; r < b; ++r) {
        const auto mode = static_cast<std::size_t>(rng.uniform_int(spec.M()));
        labels[r] = mode;
        pts[r * 2 + 0] = spec.centers[mode][0] + spec.sigma * rng.normal();
        pts[r * 2 + 1] = spec.centers[mode][1] + spec.sigma * rng.normal();
    }
    return RealBatch{Tensor::from_values({b, 2}, std::move(pts)), std::move(labels)};
}

std::vector<std::size_t> nearest_mode(const MixtureSpec& spec, const Tensor& points) {
    if (points.shape().size() != 2 || points.cols() != 2)
        throw ShapeError("nearest_mode expects [s x 2] points, got " + shape_str(points.shape()));
    const std::size_t s = points.rows();
    std::vector<std::size_t> out(s);
    for (std::size_t r = 0; r < s; ++r) {
        const double x = points.at(r, 0), y = points.at(r, 1);
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < spec.M(); ++j) {
            const double dx = x - spec.centers[j][0];
            const double dy = y - spec.centers[j][1];
            const double d2 = dx * dx + dy * dy;
            if (d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        out[r] = best_j;
    }
    return out;
}

}  // namespace megan
