#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <utility>

#include "tdformer/matrix.hpp"

namespace tdf::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
public:
    Var() = default;

    const RealMatrix& value() const;
    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records matrix operations for reverse-mode differentiation. Each node holds
/// its forward value and a closure that pushes the incoming gradient to its
/// inputs. Nodes that depend on no parameter skip their backward step.
class Tape {
public:
    using Backward = std::function<void(Tape&, const RealMatrix& grad_out)>;

    Var constant(RealMatrix value);
    Var parameter(RealMatrix value);
    Var record(RealMatrix value, std::initializer_list<Var> inputs, Backward backward);
    /// Attaches a backward closure after recording, for ops whose gradient
    /// reads their own output.
    void set_backward(const Var& v, Backward backward);

    const RealMatrix& value(const Var& v) const { return nodes_[v.id_].value; }
    bool requires_grad(const Var& v) const { return nodes_[v.id_].requires_grad; }

    /// Gradient accumulated at `v` by the last backward(); zeros if none arrived.
    RealMatrix grad(const Var& v) const;

    /// Seeds d(root)/d(root) = 1 for a 1×1 root and propagates to every node.
    void backward(const Var& root);

    /// Used by backward closures.
    void accumulate(const Var& v, const RealMatrix& g);
    void accumulate(const Var& v, RealMatrix&& g);

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        RealMatrix value;
        RealMatrix grad;
        bool requires_grad = false;
        bool has_grad = false;
        Backward backward;
    };

    std::deque<Node> nodes_;
};

inline const RealMatrix& Var::value() const { return tape_->value(*this); }

// Dense algebra
Var matmul(Var a, Var b);
/// a · bᵀ
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);

// Broadcasting. A row vector is 1×C, a column vector is R×1.
Var add_row(Var a, Var row);
Var sub_row(Var a, Var row);
Var mul_row(Var a, Var row);
Var div_row(Var a, Var row);
Var add_col(Var a, Var col);
Var mul_col(Var a, Var col);

// Elementwise
Var relu(Var a);
Var square(Var a);
/// max(√a, floor) elementwise; the gradient is zero where the floor binds.
Var sqrt_floor(Var a, double floor);
/// max(a, floor) elementwise; the gradient is zero where the floor binds.
Var clamp_min(Var a, double floor);

// Reductions and reshaping
Var col_mean(Var a);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var vstack(Var top, Var bottom);

// Normalisation
Var softmax_rows(Var a);
Var poly_norm_rows(Var a, int degree);
/// Row-wise layer normalisation with per-column gain and bias (both 1×C).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

// Transforms. Gradients use the adjoint transform rather than unrolled
// butterflies.
Var dft_real(Var x);
Var dft_imag(Var x);
/// (dft_real(x), dft_imag(x)) from a single transform.
std::pair<Var, Var> dft_parts(Var x);
/// Re(Wᴴ (re + i·im)).
Var idft(Var re, Var im);
Var modulus(Var re, Var im);
/// m · x for a constant matrix m (wavelet analysis).
Var left_multiply(std::shared_ptr<const RealMatrix> m, Var x);
/// mᵀ · x for a constant matrix m (wavelet synthesis).
Var left_multiply_t(std::shared_ptr<const RealMatrix> m, Var x);
Var moving_average(Var x, std::size_t kernel);

// Objective
/// Mean squared error against a constant target; 1×1 result.
Var mse(Var pred, const RealMatrix& target);

}  // namespace tdf::ad
