#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "qjet/errors.hpp"

// Dense 2-D real and complex tensors with reverse-mode automatic
// differentiation. Every tensor is a rows x cols matrix (scalars are 1x1).
// Complex values are stored as split (re, im) planes and differentiated in
// the real-composition convention: re and im are independent real
// parameters, and a node's complex adjoint is dL/d re + i dL/d im.
//
// Graphs are built implicitly: each op allocates a node holding its parents
// (shared_ptr DAG) and a backward closure. A graph is confined to the thread
// that built it; independent graphs on different threads are fine. Leaves
// outlive graphs, so trainable parameters persist across forward passes.
namespace qjet::ad {

struct Shape {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t size() const { return rows * cols; }
    bool operator==(const Shape&) const = default;
};

struct Node {
    Shape shape;
    std::vector<double> re;       // values (real part for complex nodes)
    std::vector<double> im;       // empty for real nodes
    std::vector<double> gre, gim; // adjoints, allocated on demand
    bool complex_valued = false;
    bool requires_grad = false;   // leaf wants its gradient kept
    bool needs_grad = false;      // this or some ancestor requires grad
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void()> backward; // propagate this->g* into parents' g*

    std::size_t size() const { return shape.size(); }
    void ensure_grad();
    void clear_grad();
};

enum class Activation { Softplus, Tanh, Relu, Identity };

class Tensor {
  public:
    Tensor() = default;

    static Tensor leaf(Shape s, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor zeros(Shape s, bool requires_grad = false);
    static Tensor full(Shape s, double v, bool requires_grad = false);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    std::size_t rows() const { return n_->shape.rows; }
    std::size_t cols() const { return n_->shape.cols; }
    std::size_t size() const { return n_->size(); }
    bool requires_grad() const { return n_->requires_grad; }

    const std::vector<double>& values() const { return n_->re; }
    double at(std::size_t r, std::size_t c) const { return n_->re[r * cols() + c]; }
    double item() const; // 1x1 only

    bool has_grad() const { return !n_->gre.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad() { n_->clear_grad(); }

    // Leaf-only mutation used by the optimizer and checkpoint restore.
    std::vector<double>& values_mut();

    std::shared_ptr<Node> node() const { return n_; }
    static Tensor wrap(std::shared_ptr<Node> n) { Tensor t; t.n_ = std::move(n); return t; }

  private:
    std::shared_ptr<Node> n_;
};

class ComplexTensor {
  public:
    ComplexTensor() = default;

    static ComplexTensor leaf(Shape s, std::vector<double> re, std::vector<double> im,
                              bool requires_grad = false);
    static ComplexTensor zeros(Shape s, bool requires_grad = false);
    static ComplexTensor identity(std::size_t n);
    // i * I, handy for the Cayley transform.
    static ComplexTensor i_identity(std::size_t n);

    bool defined() const { return n_ != nullptr; }
    const Shape& shape() const { return n_->shape; }
    std::size_t rows() const { return n_->shape.rows; }
    std::size_t cols() const { return n_->shape.cols; }
    std::size_t size() const { return n_->size(); }
    bool requires_grad() const { return n_->requires_grad; }

    const std::vector<double>& real_values() const { return n_->re; }
    const std::vector<double>& imag_values() const { return n_->im; }
    std::complex<double> at(std::size_t r, std::size_t c) const {
        const std::size_t i = r * cols() + c;
        return {n_->re[i], n_->im[i]};
    }

    bool has_grad() const { return !n_->gre.empty(); }
    const std::vector<double>& grad_re() const;
    const std::vector<double>& grad_im() const;
    void zero_grad() { n_->clear_grad(); }

    std::vector<double>& real_values_mut();
    std::vector<double>& imag_values_mut();

    std::shared_ptr<Node> node() const { return n_; }
    static ComplexTensor wrap(std::shared_ptr<Node> n) {
        ComplexTensor t;
        t.n_ = std::move(n);
        return t;
    }

  private:
    std::shared_ptr<Node> n_;
};

// ---- real ops -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b); // elementwise
Tensor add_const(const Tensor& a, double c);
Tensor mul_const(const Tensor& a, double c);
// Broadcast a 1x1 tensor across all of `a`, gradient to both.
Tensor add_scalar(const Tensor& a, const Tensor& s);
Tensor mul_scalar(const Tensor& a, const Tensor& s);
// out(r x c) = a + row vector b(1 x c) broadcast over rows.
Tensor add_rowvec(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor activation(const Tensor& a, Activation kind);
Tensor sqrt_elem(const Tensor& a); // elementwise, inputs must be >= 0
Tensor recip(const Tensor& a);     // elementwise 1/x, inputs must be nonzero

Tensor sum_all(const Tensor& a);  // 1x1
Tensor mean_all(const Tensor& a); // 1x1
// axis 0 collapses rows (result 1 x c), axis 1 collapses cols (result r x 1).
Tensor sum_axis(const Tensor& a, int axis);
Tensor mean_axis(const Tensor& a, int axis);

Tensor concat_rows(const std::vector<Tensor>& parts); // vertical stack
Tensor concat_cols(const std::vector<Tensor>& parts); // horizontal stack
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1); // [r0, r1)
Tensor select_cols(const Tensor& a, const std::vector<std::size_t>& idx);
Tensor reshape(const Tensor& a, Shape s);

// Fused numerically-stable -log softmax(logits)[label]; logits may be any
// shape with size >= 2 read in row-major order.
Tensor softmax_cross_entropy(const Tensor& logits, int label);

// ---- complex ops ----------------------------------------------------------

ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor csub(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b); // elementwise
ComplexTensor cmatmul(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor kron(const ComplexTensor& a, const ComplexTensor& b);
ComplexTensor adjoint(const ComplexTensor& a);   // conjugate transpose
ComplexTensor ctranspose(const ComplexTensor& a);
ComplexTensor conj(const ComplexTensor& a);

// Multiply by a complex constant (no gradient to the constant).
ComplexTensor cscale(const ComplexTensor& a, std::complex<double> c);
// Broadcast-multiply by a real 1x1 tensor, gradient to both operands.
ComplexTensor cmul_scalar(const ComplexTensor& a, const Tensor& s);

ComplexTensor complex_from_parts(const Tensor& re, const Tensor& im);
Tensor creal(const ComplexTensor& a);
Tensor cimag(const ComplexTensor& a);
Tensor cmodulus(const ComplexTensor& a); // |z| elementwise, grads to re and im
ComplexTensor csum_all(const ComplexTensor& a); // 1x1

// Inverse via LU with partial pivoting. Gradient uses d(A^-1) = -A^-1 dA A^-1.
// Throws NumericalError when a pivot vanishes or the 1-norm condition
// estimate exceeds `cond_limit`.
ComplexTensor cinverse(const ComplexTensor& a, double cond_limit = 1e12);

// exp(-i * scale * h) for Hermitian h, via scaling-and-squaring over a
// degree-13 Taylor polynomial (truncation < 1e-12 once the scaled norm is
// <= 0.5). Composed from differentiable primitives, so gradients flow to
// both h (re and im) and scale. Throws ContractViolation when h deviates
// from Hermitian by more than 1e-10.
ComplexTensor expm_minus_i(const ComplexTensor& h, const Tensor& scale);

// ---- backward engine ------------------------------------------------------

// Reverse-mode sweep from a scalar (1x1) loss. Accumulates into the grad
// buffers of every requires_grad leaf; repeated calls keep accumulating
// until zero_grad(). Throws ContractViolation for a non-scalar loss.
void backward(const Tensor& loss);

} // namespace qjet::ad
