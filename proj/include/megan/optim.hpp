// SPDX-License-Identifier: Apache-2.0
#ifndef MEGAN_OPTIM_HPP
#define MEGAN_OPTIM_HPP

#include <cstdint>
#include <vector>

#include "megan/tensor.hpp"

namespace megan {

/// Adam with the conventional constants (beta1 0.9, beta2 0.999, eps 1e-8).
/// Each instance owns one parameter group; step() touches only that group,
/// which is what keeps the three training phases isolated.
class Adam {
public:
    Adam(std::vector<Parameter> params, double lr,
         double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    /// Applies one update in place from the parameters' current gradients.
    /// A parameter with no populated gradient is a contract error.
    void step();

    /// Zeroes the gradients of this group.
    void zero_grad();

    double lr() const { return lr_; }
    std::uint64_t steps_taken() const { return t_; }
    const std::vector<Parameter>& params() const { return params_; }

private:
    std::vector<Parameter> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
};

}  // namespace megan

#endif
