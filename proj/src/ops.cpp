// SPDX-License-Identifier: Apache-2.0
//
// Forward kernels and exact backward rules for every differentiable
// operation in the engine. All kernels are sequential and deterministic
// for a fixed input.
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "megan/tensor.hpp"

namespace megan {

namespace {

using detail::Node;

constexpr double kExpOverflow = 709.782712893384;  // largest x with finite exp(x)

void require_matrix(const Tensor& t, const char* what) {
    if (!t.defined() || t.shape().size() != 2)
        throw ShapeError(std::string(what) + " expects a 2-D tensor, got " +
                         (t.defined() ? shape_str(t.shape()) : std::string("<empty>")));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!same_shape(a.shape(), b.shape()))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
}

// c[m x q] += a[m x p] * b[p x q], c zero-initialized by the caller.
void gemm(const double* a, const double* b, double* c,
          std::size_t m, std::size_t p, std::size_t q) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * p;
        double* crow = c + i * q;
        for (std::size_t k = 0; k < p; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b + k * q;
            for (std::size_t j = 0; j < q; ++j) crow[j] += aik * brow[j];
        }
    }
}

// Shared scaffold for elementwise unary ops with backward dy/dx computed
// from (x, y) pairs.
template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd bwd_factor) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    const auto xv = x.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(xv[i], i);
    Node* xn = x.node();
    return Tensor::make_op(x.shape(), std::move(out), {x}, [xn, bwd_factor](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t i = 0; i < self.values.size(); ++i)
            xn->grad[i] += self.grad[i] * bwd_factor(xn->values[i], self.values[i]);
    });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.rows(), p = a.cols(), q = b.cols();
    if (b.rows() != p)
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    std::vector<double> out(m * q, 0.0);
    gemm(a.values().data(), b.values().data(), out.data(), m, p, q);

    Node* an = a.node();
    Node* bn = b.node();
    return Tensor::make_op({m, q}, std::move(out), {a, b}, [an, bn, m, p, q](Node& self) {
        const double* g = self.grad.data();
        if (an->requires_grad) {
            an->ensure_grad();
            // a.grad += g * b^T
            const double* bv = bn->values.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g + i * q;
                double* arow = an->grad.data() + i * p;
                for (std::size_t k = 0; k < p; ++k) {
                    const double* brow = bv + k * q;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < q; ++j) acc += grow[j] * brow[j];
                    arow[k] += acc;
                }
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            // b.grad += a^T * g
            const double* av = an->values.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = av + i * p;
                const double* grow = g + i * q;
                for (std::size_t k = 0; k < p; ++k) {
                    const double aik = arow[k];
                    if (aik == 0.0) continue;
                    double* brow = bn->grad.data() + k * q;
                    for (std::size_t j = 0; j < q; ++j) brow[j] += aik * grow[j];
                }
            }
        }
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require_matrix(x, "add_bias");
    if (bias.shape().size() != 1 || bias.size() != x.cols())
        throw ShapeError("add_bias: bias " + shape_str(bias.shape()) +
                         " does not match columns of " + shape_str(x.shape()));
    const std::size_t b = x.rows(), q = x.cols();
    std::vector<double> out(b * q);
    const auto xv = x.values();
    const auto bv = bias.values();
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] = xv[i * q + j] + bv[j];

    Node* xn = x.node();
    Node* bn = bias.node();
    return Tensor::make_op({b, q}, std::move(out), {x, bias}, [xn, bn, b, q](Node& self) {
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (std::size_t i = 0; i < b * q; ++i) xn->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < b; ++i)
                for (std::size_t j = 0; j < q; ++j) bn->grad[j] += self.grad[i * q + j];
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t b = parts.front().rows();
    std::size_t total = 0;
    for (const Tensor& t : parts) {
        require_matrix(t, "concat_cols");
        if (t.rows() != b)
            throw ShapeError("concat_cols: row mismatch " + shape_str(parts.front().shape()) +
                             " vs " + shape_str(t.shape()));
        total += t.cols();
    }
    std::vector<double> out(b * total);
    std::size_t offset = 0;
    for (const Tensor& t : parts) {
        const std::size_t c = t.cols();
        const auto tv = t.values();
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < c; ++j) out[i * total + offset + j] = tv[i * c + j];
        offset += c;
    }

    std::vector<Node*> nodes;
    std::vector<std::size_t> widths;
    for (const Tensor& t : parts) {
        nodes.push_back(t.node());
        widths.push_back(t.cols());
    }
    return Tensor::make_op({b, total}, std::move(out), parts,
                           [nodes, widths, b, total](Node& self) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            Node* p = nodes[k];
            const std::size_t c = widths[k];
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < c; ++j)
                        p->grad[i * c + j] += self.grad[i * total + offset + j];
            }
            offset += c;
        }
    });
}

Tensor column_means(const Tensor& x) {
    require_matrix(x, "column_means");
    const std::size_t b = x.rows(), n = x.cols();
    std::vector<double> out(n, 0.0);
    const auto xv = x.values();
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += xv[i * n + j];
    for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(b);

    Node* xn = x.node();
    return Tensor::make_op({n}, std::move(out), {x}, [xn, b, n](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        const double inv_b = 1.0 / static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < n; ++j) xn->grad[i * n + j] += self.grad[j] * inv_b;
    });
}

Tensor relu(const Tensor& x) {
    // Subgradient at exactly 0 is 0.
    return unary_op(
        x, [](double v, std::size_t) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
    return unary_op(
        x,
        [negative_slope](double v, std::size_t) { return v > 0.0 ? v : negative_slope * v; },
        [negative_slope](double v, double) { return v > 0.0 ? 1.0 : negative_slope; });
}

namespace {
double stable_sigmoid(double v) {
    if (v >= 0.0) {
        const double e = std::exp(-v);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
    return unary_op(
        x, [](double v, std::size_t) { return stable_sigmoid(v); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(const Tensor& x) {
    return unary_op(
        x,
        [](double v, std::size_t) {
            return std::max(v, 0.0) + std::log1p(std::exp(-std::fabs(v)));
        },
        [](double v, double) { return stable_sigmoid(v); });
}

Tensor softmax(const Tensor& x, int axis) {
    require_matrix(x, "softmax");
    if (axis != 0 && axis != 1)
        throw ContractError("softmax: axis must be 0 or 1, got " + std::to_string(axis));
    const std::size_t rows = x.rows(), cols = x.cols();
    const std::size_t slices = (axis == 1) ? rows : cols;
    const std::size_t len = (axis == 1) ? cols : rows;
    const std::size_t stride = (axis == 1) ? 1 : cols;
    const std::size_t slice_stride = (axis == 1) ? cols : 1;

    std::vector<double> out(rows * cols);
    const auto xv = x.values();
    for (std::size_t s = 0; s < slices; ++s) {
        const double* in = xv.data() + s * slice_stride;
        double* o = out.data() + s * slice_stride;
        double mx = in[0];
        for (std::size_t i = 1; i < len; ++i) mx = std::max(mx, in[i * stride]);
        double denom = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double e = std::exp(in[i * stride] - mx);
            o[i * stride] = e;
            denom += e;
        }
        for (std::size_t i = 0; i < len; ++i) o[i * stride] /= denom;
    }

    Node* xn = x.node();
    return Tensor::make_op({rows, cols}, std::move(out), {x},
                           [xn, slices, len, stride, slice_stride](Node& self) {
        if (!xn->requires_grad) return;
        xn->ensure_grad();
        for (std::size_t s = 0; s < slices; ++s) {
            const double* y = self.values.data() + s * slice_stride;
            const double* g = self.grad.data() + s * slice_stride;
            double dot = 0.0;
            for (std::size_t i = 0; i < len; ++i) dot += g[i * stride] * y[i * stride];
            double* xg = xn->grad.data() + s * slice_stride;
            for (std::size_t i = 0; i < len; ++i)
                xg[i * stride] += y[i * stride] * (g[i * stride] - dot);
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] + bv[i];
    Node* an = a.node();
    Node* bn = b.node();
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i) bn->grad[i] += self.grad[i];
        }
    });
}

Tensor add(const Tensor& a, double s) {
    return unary_op(
        a, [s](double v, std::size_t) { return v + s; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] - bv[i];
    Node* an = a.node();
    Node* bn = b.node();
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i) an->grad[i] += self.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i) bn->grad[i] -= self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, double s) { return add(a, -s); }

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    const std::size_t n = a.size();
    std::vector<double> out(n);
    const auto av = a.values(), bv = b.values();
    for (std::size_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
    Node* an = a.node();
    Node* bn = b.node();
    return Tensor::make_op(a.shape(), std::move(out), {a, b}, [an, bn](Node& self) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i)
                an->grad[i] += self.grad[i] * bn->values[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < self.values.size(); ++i)
                bn->grad[i] += self.grad[i] * an->values[i];
        }
    });
}

Tensor mul(const Tensor& a, double s) {
    return unary_op(
        a, [s](double v, std::size_t) { return v * s; }, [s](double, double) { return s; });
}

Tensor neg(const Tensor& a) {
    return unary_op(
        a, [](double v, std::size_t) { return -v; }, [](double, double) { return -1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(
        a,
        [](double v, std::size_t i) {
            if (v > kExpOverflow)
                throw DomainError("exp: overflow at index " + std::to_string(i) +
                                  " (value " + std::to_string(v) + ")");
            return std::exp(v);
        },
        [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op(
        a,
        [](double v, std::size_t i) {
            if (v <= 0.0)
                throw DomainError("log: nonpositive input at index " + std::to_string(i) +
                                  " (value " + std::to_string(v) + ")");
            return std::log(v);
        },
        [](double v, double) { return 1.0 / v; });
}

Tensor square(const Tensor& a) {
    return unary_op(
        a, [](double v, std::size_t) { return v * v; },
        [](double v, double) { return 2.0 * v; });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.values()) total += v;
    Node* an = a.node();
    return Tensor::make_op({1}, {total}, {a}, [an](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const double g = self.grad[0];
        for (double& gi : an->grad) gi += g;
    });
}

Tensor mean(const Tensor& a) {
    const std::size_t n = a.size();
    double total = 0.0;
    for (double v : a.values()) total += v;
    Node* an = a.node();
    return Tensor::make_op({1}, {total / static_cast<double>(n)}, {a}, [an, n](Node& self) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        const double g = self.grad[0] / static_cast<double>(n);
        for (double& gi : an->grad) gi += g;
    });
}

Tensor detach(const Tensor& x) {
    return Tensor::from_values(x.shape(), std::vector<double>(x.values().begin(), x.values().end()));
}

Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                 BatchNormState& state, NetMode mode) {
    require_matrix(x, "batchnorm");
    const std::size_t b = x.rows(), d = x.cols();
    if (gamma.shape().size() != 1 || gamma.size() != d || beta.shape().size() != 1 ||
        beta.size() != d)
        throw ShapeError("batchnorm: gamma/beta must have shape {" + std::to_string(d) +
                         "}, got " + shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
    if (state.running_mean.size() != d || state.running_var.size() != d)
        throw ContractError("batchnorm: running stats not sized for " + std::to_string(d) +
                            " columns");

    constexpr double kEps = 1e-5;
    constexpr double kMomentum = 0.1;
    const auto xv = x.values();
    const auto gv = gamma.values();
    const auto bv = beta.values();
    std::vector<double> out(b * d);

    Node* xn = x.node();
    Node* gn = gamma.node();
    Node* bn = beta.node();

    if (mode == NetMode::Train) {
        if (b < 2)
            throw ContractError("batchnorm: degenerate batch of " + std::to_string(b) +
                                " rows in train mode");
        std::vector<double> mu(d, 0.0), var(d, 0.0), invstd(d);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) mu[j] += xv[i * d + j];
        for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(b);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double c = xv[i * d + j] - mu[j];
                var[j] += c * c;
            }
        for (std::size_t j = 0; j < d; ++j) {
            var[j] /= static_cast<double>(b);
            invstd[j] = 1.0 / std::sqrt(var[j] + kEps);
        }
        std::vector<double> xhat(b * d);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                const double h = (xv[i * d + j] - mu[j]) * invstd[j];
                xhat[i * d + j] = h;
                out[i * d + j] = gv[j] * h + bv[j];
            }
        // Running stats track the unbiased variance.
        const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
        for (std::size_t j = 0; j < d; ++j) {
            state.running_mean[j] = (1.0 - kMomentum) * state.running_mean[j] + kMomentum * mu[j];
            state.running_var[j] =
                (1.0 - kMomentum) * state.running_var[j] + kMomentum * var[j] * unbias;
        }

        return Tensor::make_op(
            {b, d}, std::move(out), {x, gamma, beta},
            [xn, gn, bn, b, d, invstd = std::move(invstd), xhat = std::move(xhat)](Node& self) {
                const double* g = self.grad.data();
                std::vector<double> sum_dy(d, 0.0), sum_dy_xhat(d, 0.0);
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d; ++j) {
                        sum_dy[j] += g[i * d + j];
                        sum_dy_xhat[j] += g[i * d + j] * xhat[i * d + j];
                    }
                if (gn->requires_grad) {
                    gn->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) gn->grad[j] += sum_dy_xhat[j];
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j) bn->grad[j] += sum_dy[j];
                }
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    const double inv_b = 1.0 / static_cast<double>(b);
                    for (std::size_t i = 0; i < b; ++i)
                        for (std::size_t j = 0; j < d; ++j) {
                            const double dxhat = g[i * d + j] * gn->values[j];
                            const double term = static_cast<double>(b) * dxhat - sum_dy[j] * gn->values[j] -
                                                xhat[i * d + j] * sum_dy_xhat[j] * gn->values[j];
                            xn->grad[i * d + j] += invstd[j] * inv_b * term;
                        }
                }
            });
    }

    // Eval mode: affine transform by the running statistics.
    std::vector<double> invstd(d);
    for (std::size_t j = 0; j < d; ++j) invstd[j] = 1.0 / std::sqrt(state.running_var[j] + kEps);
    std::vector<double> rm = state.running_mean;
    std::vector<double> xhat(b * d);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xv[i * d + j] - rm[j]) * invstd[j];
            xhat[i * d + j] = h;
            out[i * d + j] = gv[j] * h + bv[j];
        }
    return Tensor::make_op(
        {b, d}, std::move(out), {x, gamma, beta},
        [xn, gn, bn, b, d, invstd = std::move(invstd), xhat = std::move(xhat)](Node& self) {
            const double* g = self.grad.data();
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d; ++j) gn->grad[j] += g[i * d + j] * xhat[i * d + j];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d; ++j) bn->grad[j] += g[i * d + j];
            }
            if (xn->requires_grad) {
                xn->ensure_grad();
                for (std::size_t i = 0; i < b; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        xn->grad[i * d + j] += g[i * d + j] * gn->values[j] * invstd[j];
            }
        });
}

}  // namespace megan
