#include "tdformer/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "tdformer/decomposition.hpp"
#include "tdformer/numerics.hpp"

namespace tdf::ad {

Var Tape::constant(RealMatrix value) {
    nodes_.push_back(Node{std::move(value), {}, false, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(RealMatrix value) {
    nodes_.push_back(Node{std::move(value), {}, true, false, {}});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(RealMatrix value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    for (const Var& in : inputs) needs = needs || nodes_[in.id_].requires_grad;
    nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : nullptr});
    return Var(this, nodes_.size() - 1);
}

void Tape::set_backward(const Var& v, Backward backward) {
    Node& n = nodes_[v.id_];
    if (n.requires_grad) n.backward = std::move(backward);
}

RealMatrix Tape::grad(const Var& v) const {
    const Node& n = nodes_[v.id_];
    if (n.has_grad) return n.grad;
    return RealMatrix(n.value.rows(), n.value.cols());
}

void Tape::accumulate(const Var& v, const RealMatrix& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
    } else {
        n.grad += g;
    }
}

void Tape::accumulate(const Var& v, RealMatrix&& g) {
    Node& n = nodes_[v.id_];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
        n.grad = std::move(g);
        n.has_grad = true;
    } else {
        n.grad += g;
    }
}

void Tape::backward(const Var& root) {
    if (value(root).rows() != 1 || value(root).cols() != 1) {
        throw Error(ErrorKind::shape, "backward: root must be 1x1, got " +
                                          value(root).shape_string());
    }
    for (Node& n : nodes_) {
        n.has_grad = false;
        n.grad = RealMatrix();
    }
    accumulate(root, RealMatrix(1, 1, 1.0));
    for (std::size_t i = root.id_ + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        // Closures only write to earlier nodes, so the gradient can be lent out.
        RealMatrix g = std::move(n.grad);
        n.backward(*this, g);
        n.grad = std::move(g);
    }
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::shape, what);
}

void require_row(const Var& a, const Var& row, const char* op) {
    require(row.rows() == 1 && row.cols() == a.cols(),
            std::string(op) + ": row vector " + row.value().shape_string() +
                " does not broadcast over " + a.value().shape_string());
}

void require_col(const Var& a, const Var& col, const char* op) {
    require(col.cols() == 1 && col.rows() == a.rows(),
            std::string(op) + ": column vector " + col.value().shape_string() +
                " does not broadcast over " + a.value().shape_string());
}

RealMatrix hadamard(const RealMatrix& a, const RealMatrix& b) {
    RealMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

RealMatrix column_sums(const RealMatrix& g) {
    RealMatrix out(1, g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) out(0, c) += g(r, c);
    return out;
}

RealMatrix row_sums(const RealMatrix& g) {
    RealMatrix out(g.rows(), 1);
    for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) out(r, 0) += g(r, c);
    return out;
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = a.tape();
    return t.record(tdf::matmul(a.value(), b.value()), {a, b},
                    [a, b](Tape& tape, const RealMatrix& g) {
                        if (tape.requires_grad(a)) tape.accumulate(a, matmul_nt(g, b.value()));
                        if (tape.requires_grad(b)) tape.accumulate(b, matmul_tn(a.value(), g));
                    });
}

Var matmul_nt(Var a, Var b) {
    Tape& t = a.tape();
    return t.record(tdf::matmul_nt(a.value(), b.value()), {a, b},
                    [a, b](Tape& tape, const RealMatrix& g) {
                        if (tape.requires_grad(a)) tape.accumulate(a, tdf::matmul(g, b.value()));
                        if (tape.requires_grad(b)) tape.accumulate(b, matmul_tn(g, a.value()));
                    });
}

Var add(Var a, Var b) {
    return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Tape& tape, const RealMatrix& g) {
        tape.accumulate(a, g);
        tape.accumulate(b, g);
    });
}

Var sub(Var a, Var b) {
    return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Tape& tape, const RealMatrix& g) {
        tape.accumulate(a, g);
        tape.accumulate(b, -1.0 * g);
    });
}

Var scale(Var a, double s) {
    return a.tape().record(s * a.value(), {a},
                           [a, s](Tape& tape, const RealMatrix& g) { tape.accumulate(a, s * g); });
}

Var add_row(Var a, Var row) {
    require_row(a, row, "add_row");
    RealMatrix out = a.value();
    const RealMatrix& r = row.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) += r(0, c);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& tape, const RealMatrix& g) {
        tape.accumulate(a, g);
        if (tape.requires_grad(row)) tape.accumulate(row, column_sums(g));
    });
}

Var sub_row(Var a, Var row) {
    require_row(a, row, "sub_row");
    RealMatrix out = a.value();
    const RealMatrix& r = row.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) -= r(0, c);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& tape, const RealMatrix& g) {
        tape.accumulate(a, g);
        if (tape.requires_grad(row)) tape.accumulate(row, -1.0 * column_sums(g));
    });
}

Var mul_row(Var a, Var row) {
    require_row(a, row, "mul_row");
    RealMatrix out = a.value();
    const RealMatrix& r = row.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) *= r(0, c);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& tape, const RealMatrix& g) {
        const RealMatrix& av = a.value();
        const RealMatrix& rv = row.value();
        if (tape.requires_grad(a)) {
            RealMatrix ga = g;
            for (std::size_t i = 0; i < ga.rows(); ++i)
                for (std::size_t c = 0; c < ga.cols(); ++c) ga(i, c) *= rv(0, c);
            tape.accumulate(a, std::move(ga));
        }
        if (tape.requires_grad(row)) tape.accumulate(row, column_sums(hadamard(g, av)));
    });
}

Var div_row(Var a, Var row) {
    require_row(a, row, "div_row");
    RealMatrix out = a.value();
    const RealMatrix& r = row.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) /= r(0, c);
    return a.tape().record(std::move(out), {a, row}, [a, row](Tape& tape, const RealMatrix& g) {
        const RealMatrix& av = a.value();
        const RealMatrix& rv = row.value();
        if (tape.requires_grad(a)) {
            RealMatrix ga = g;
            for (std::size_t i = 0; i < ga.rows(); ++i)
                for (std::size_t c = 0; c < ga.cols(); ++c) ga(i, c) /= rv(0, c);
            tape.accumulate(a, std::move(ga));
        }
        if (tape.requires_grad(row)) {
            RealMatrix gr(1, rv.cols());
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t c = 0; c < g.cols(); ++c)
                    gr(0, c) -= g(i, c) * av(i, c) / (rv(0, c) * rv(0, c));
            tape.accumulate(row, std::move(gr));
        }
    });
}

Var add_col(Var a, Var col) {
    require_col(a, col, "add_col");
    RealMatrix out = a.value();
    const RealMatrix& cv = col.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) += cv(i, 0);
    return a.tape().record(std::move(out), {a, col}, [a, col](Tape& tape, const RealMatrix& g) {
        tape.accumulate(a, g);
        if (tape.requires_grad(col)) tape.accumulate(col, row_sums(g));
    });
}

Var mul_col(Var a, Var col) {
    require_col(a, col, "mul_col");
    RealMatrix out = a.value();
    const RealMatrix& cv = col.value();
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) *= cv(i, 0);
    return a.tape().record(std::move(out), {a, col}, [a, col](Tape& tape, const RealMatrix& g) {
        const RealMatrix& av = a.value();
        const RealMatrix& cv = col.value();
        if (tape.requires_grad(a)) {
            RealMatrix ga = g;
            for (std::size_t i = 0; i < ga.rows(); ++i)
                for (std::size_t c = 0; c < ga.cols(); ++c) ga(i, c) *= cv(i, 0);
            tape.accumulate(a, std::move(ga));
        }
        if (tape.requires_grad(col)) tape.accumulate(col, row_sums(hadamard(g, av)));
    });
}

Var relu(Var a) {
    RealMatrix out = a.value();
    for (double& v : out.values()) v = std::max(v, 0.0);
    return a.tape().record(std::move(out), {a}, [a](Tape& tape, const RealMatrix& g) {
        RealMatrix ga = g;
        const RealMatrix& av = a.value();
        for (std::size_t i = 0; i < ga.size(); ++i)
            if (!(av.values()[i] > 0.0)) ga.values()[i] = 0.0;
        tape.accumulate(a, std::move(ga));
    });
}

Var square(Var a) {
    return a.tape().record(hadamard(a.value(), a.value()), {a},
                           [a](Tape& tape, const RealMatrix& g) {
                               tape.accumulate(a, 2.0 * hadamard(g, a.value()));
                           });
}

Var sqrt_floor(Var a, double floor) {
    RealMatrix out = a.value();
    for (double& v : out.values()) v = std::max(std::sqrt(std::max(v, 0.0)), floor);
    return a.tape().record(std::move(out), {a}, [a, floor](Tape& tape, const RealMatrix& g) {
        RealMatrix ga = g;
        const RealMatrix& av = a.value();
        for (std::size_t i = 0; i < ga.size(); ++i) {
            const double root = std::sqrt(std::max(av.values()[i], 0.0));
            ga.values()[i] = root > floor ? g.values()[i] / (2.0 * root) : 0.0;
        }
        tape.accumulate(a, std::move(ga));
    });
}

Var clamp_min(Var a, double floor) {
    RealMatrix out = a.value();
    for (double& v : out.values()) v = std::max(v, floor);
    return a.tape().record(std::move(out), {a}, [a, floor](Tape& tape, const RealMatrix& g) {
        RealMatrix ga = g;
        const RealMatrix& av = a.value();
        for (std::size_t i = 0; i < ga.size(); ++i) {
            if (!(av.values()[i] > floor)) ga.values()[i] = 0.0;
        }
        tape.accumulate(a, std::move(ga));
    });
}

Var col_mean(Var a) {
    const double n = static_cast<double>(a.rows());
    RealMatrix out = (1.0 / n) * column_sums(a.value());
    return a.tape().record(std::move(out), {a}, [a, n](Tape& tape, const RealMatrix& g) {
        RealMatrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < ga.rows(); ++i)
            for (std::size_t c = 0; c < ga.cols(); ++c) ga(i, c) = g(0, c) / n;
        tape.accumulate(a, std::move(ga));
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
    require(begin + count <= a.rows(), "slice_rows: range exceeds " + a.value().shape_string());
    RealMatrix out(count, a.cols());
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t c = 0; c < a.cols(); ++c) out(i, c) = a.value()(begin + i, c);
    return a.tape().record(std::move(out), {a}, [a, begin, count](Tape& tape, const RealMatrix& g) {
        RealMatrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t c = 0; c < ga.cols(); ++c) ga(begin + i, c) = g(i, c);
        tape.accumulate(a, std::move(ga));
    });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
    require(begin + count <= a.cols(), "slice_cols: range exceeds " + a.value().shape_string());
    RealMatrix out(a.rows(), count);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t c = 0; c < count; ++c) out(i, c) = a.value()(i, begin + c);
    return a.tape().record(std::move(out), {a}, [a, begin, count](Tape& tape, const RealMatrix& g) {
        RealMatrix ga(a.rows(), a.cols());
        for (std::size_t i = 0; i < ga.rows(); ++i)
            for (std::size_t c = 0; c < count; ++c) ga(i, begin + c) = g(i, c);
        tape.accumulate(a, std::move(ga));
    });
}

Var vstack(Var top, Var bottom) {
    require(top.cols() == bottom.cols(), "vstack: column mismatch " + top.value().shape_string() +
                                             " vs " + bottom.value().shape_string());
    const std::size_t n_top = top.rows();
    RealMatrix out(n_top + bottom.rows(), top.cols());
    std::copy(top.value().values().begin(), top.value().values().end(), out.values().begin());
    std::copy(bottom.value().values().begin(), bottom.value().values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(top.value().size()));
    return top.tape().record(std::move(out), {top, bottom},
                             [top, bottom, n_top](Tape& tape, const RealMatrix& g) {
                                 const std::size_t cols = g.cols();
                                 if (tape.requires_grad(top)) {
                                     RealMatrix gt(n_top, cols);
                                     std::copy_n(g.values().begin(), gt.size(),
                                                 gt.values().begin());
                                     tape.accumulate(top, std::move(gt));
                                 }
                                 if (tape.requires_grad(bottom)) {
                                     RealMatrix gb(g.rows() - n_top, cols);
                                     std::copy_n(g.values().begin() +
                                                     static_cast<std::ptrdiff_t>(n_top * cols),
                                                 gb.size(), gb.values().begin());
                                     tape.accumulate(bottom, std::move(gb));
                                 }
                             });
}

Var softmax_rows(Var a) {
    Tape& t = a.tape();
    Var out = t.record(tdf::softmax_rows(a.value()), {a}, nullptr);
    t.set_backward(out, [a, out](Tape& tape, const RealMatrix& g) {
        const RealMatrix& y = out.value();
        RealMatrix ga(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) = y(r, c) * (g(r, c) - dot);
        }
        tape.accumulate(a, std::move(ga));
    });
    return out;
}

Var poly_norm_rows(Var a, int degree) {
    Tape& t = a.tape();
    Var out = t.record(tdf::poly_norm_rows(a.value(), degree), {a}, nullptr);
    t.set_backward(out, [a, out, degree](Tape& tape, const RealMatrix& g) {
        const RealMatrix& y = out.value();
        const RealMatrix& x = a.value();
        RealMatrix ga(y.rows(), y.cols());
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
            for (std::size_t c = 0; c < y.cols(); ++c)
                ga(r, c) = static_cast<double>(degree) * y(r, c) * (g(r, c) - dot) / x(r, c);
        }
        tape.accumulate(a, std::move(ga));
    });
    return out;
}

Var layer_norm(Var a, Var gain, Var bias, double eps) {
    require_row(a, gain, "layer_norm gain");
    require_row(a, bias, "layer_norm bias");
    const RealMatrix& x = a.value();
    const std::size_t n = x.cols();
    RealMatrix xhat(x.rows(), n);
    RealMatrix inv_std(x.rows(), 1);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double mean = 0.0;
        for (std::size_t c = 0; c < n; ++c) mean += x(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
        var /= static_cast<double>(n);
        inv_std(r, 0) = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = 0; c < n; ++c) xhat(r, c) = (x(r, c) - mean) * inv_std(r, 0);
    }
    RealMatrix out(x.rows(), n);
    const RealMatrix& gv = gain.value();
    const RealMatrix& bv = bias.value();
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c) out(r, c) = xhat(r, c) * gv(0, c) + bv(0, c);

    return a.tape().record(
        std::move(out), {a, gain, bias},
        [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
            Tape& tape, const RealMatrix& g) {
            const RealMatrix& gv = gain.value();
            const std::size_t n = g.cols();
            if (tape.requires_grad(gain)) tape.accumulate(gain, column_sums(hadamard(g, xhat)));
            if (tape.requires_grad(bias)) tape.accumulate(bias, column_sums(g));
            if (!tape.requires_grad(a)) return;
            RealMatrix ga(g.rows(), n);
            for (std::size_t r = 0; r < g.rows(); ++r) {
                double sum_d = 0.0;
                double sum_dx = 0.0;
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = g(r, c) * gv(0, c);
                    sum_d += d;
                    sum_dx += d * xhat(r, c);
                }
                const double inv_n = 1.0 / static_cast<double>(n);
                for (std::size_t c = 0; c < n; ++c) {
                    const double d = g(r, c) * gv(0, c);
                    ga(r, c) = inv_std(r, 0) * (d - inv_n * sum_d - xhat(r, c) * inv_n * sum_dx);
                }
            }
            tape.accumulate(a, std::move(ga));
        });
}

Var dft_real(Var x) {
    return x.tape().record(real_part(tdf::dft(x.value())), {x}, [x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, real_part(tdf::dft(g)));
    });
}

Var dft_imag(Var x) {
    return x.tape().record(imag_part(tdf::dft(x.value())), {x}, [x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, imag_part(tdf::dft(g)));
    });
}

std::pair<Var, Var> dft_parts(Var x) {
    auto [fr, fi] = tdf::dft_parts(x.value());
    Tape& t = x.tape();
    const Var re = t.record(std::move(fr), {x}, [x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, tdf::dft_parts(g).first);
    });
    const Var im = t.record(std::move(fi), {x}, [x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, tdf::dft_parts(g).second);
    });
    return {re, im};
}

Var idft(Var re, Var im) {
    require(re.value().same_shape(im.value()), "idft: real and imaginary parts differ in shape");
    return re.tape().record(tdf::idft_real(re.value(), im.value()), {re, im},
                            [re, im](Tape& tape, const RealMatrix& g) {
                                auto [gr, gi] = tdf::dft_parts(g);
                                tape.accumulate(re, std::move(gr));
                                tape.accumulate(im, std::move(gi));
                            });
}

Var modulus(Var re, Var im) {
    require(re.value().same_shape(im.value()), "modulus: real and imaginary parts differ in shape");
    RealMatrix out(re.rows(), re.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.values()[i] = std::hypot(re.value().values()[i], im.value().values()[i]);
    Tape& t = re.tape();
    Var m = t.record(std::move(out), {re, im}, nullptr);
    t.set_backward(m, [re, im, m](Tape& tape, const RealMatrix& g) {
        const RealMatrix& mv = m.value();
        RealMatrix gr(mv.rows(), mv.cols());
        RealMatrix gi(mv.rows(), mv.cols());
        for (std::size_t i = 0; i < mv.size(); ++i) {
            const double mag = mv.values()[i];
            if (mag == 0.0) continue;
            gr.values()[i] = g.values()[i] * re.value().values()[i] / mag;
            gi.values()[i] = g.values()[i] * im.value().values()[i] / mag;
        }
        tape.accumulate(re, std::move(gr));
        tape.accumulate(im, std::move(gi));
    });
    return m;
}

Var left_multiply(std::shared_ptr<const RealMatrix> m, Var x) {
    RealMatrix out = tdf::matmul(*m, x.value());
    return x.tape().record(std::move(out), {x}, [m, x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, matmul_tn(*m, g));
    });
}

Var left_multiply_t(std::shared_ptr<const RealMatrix> m, Var x) {
    RealMatrix out = matmul_tn(*m, x.value());
    return x.tape().record(std::move(out), {x}, [m, x](Tape& tape, const RealMatrix& g) {
        tape.accumulate(x, tdf::matmul(*m, g));
    });
}

Var moving_average(Var x, std::size_t kernel) {
    return x.tape().record(tdf::moving_average(x.value(), kernel), {x},
                           [x, kernel](Tape& tape, const RealMatrix& g) {
                               // Transpose of the replicate-padded averaging operator.
                               const auto n = static_cast<std::ptrdiff_t>(g.rows());
                               const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
                               const double w = 1.0 / static_cast<double>(kernel);
                               RealMatrix gx(g.rows(), g.cols());
                               for (std::ptrdiff_t t = 0; t < n; ++t) {
                                   for (std::ptrdiff_t j = -half; j <= half; ++j) {
                                       const auto src = static_cast<std::size_t>(
                                           std::clamp<std::ptrdiff_t>(t + j, 0, n - 1));
                                       for (std::size_t c = 0; c < g.cols(); ++c)
                                           gx(src, c) += w * g(static_cast<std::size_t>(t), c);
                                   }
                               }
                               tape.accumulate(x, std::move(gx));
                           });
}

Var mse(Var pred, const RealMatrix& target) {
    require_same_shape(pred.value(), target, "mse");
    const double n = static_cast<double>(target.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = pred.value().values()[i] - target.values()[i];
        acc += d * d;
    }
    return pred.tape().record(RealMatrix(1, 1, acc / n), {pred},
                              [pred, target, n](Tape& tape, const RealMatrix& g) {
                                  RealMatrix gp = pred.value() - target;
                                  for (double& v : gp.values()) v *= 2.0 * g(0, 0) / n;
                                  tape.accumulate(pred, gp);
                              });
}

}  // namespace tdf::ad
