#include "qjet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "qjet/kernels.hpp"

namespace qjet::ad {

namespace {

const kernels::KernelTable& kt() { return kernels::active(); }

std::shared_ptr<Node> make_node(Shape s, bool complex_valued,
                                std::vector<std::shared_ptr<Node>> parents) {
    auto n = std::make_shared<Node>();
    n->shape = s;
    n->complex_valued = complex_valued;
    n->re.assign(s.size(), 0.0);
    if (complex_valued) n->im.assign(s.size(), 0.0);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->needs_grad) {
            n->needs_grad = true;
            break;
        }
    }
    return n;
}

void check_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (!(a == b)) {
        throw DimensionError(std::string(op) + ": shape mismatch (" +
                             std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                             std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
    }
}

void check_matmul(const Shape& a, const Shape& b, const char* op) {
    if (a.cols != b.rows) {
        throw DimensionError(std::string(op) + ": inner dimensions disagree (" +
                             std::to_string(a.cols) + " vs " + std::to_string(b.rows) + ")");
    }
}

void check_scalar(const Shape& s, const char* op) {
    if (s.size() != 1) {
        throw ContractViolation(std::string(op) + ": expected a 1x1 tensor, got " +
                                std::to_string(s.rows) + "x" + std::to_string(s.cols));
    }
}

void accumulate(std::vector<double>& g, const std::vector<double>& src) {
    kt().axpy(1.0, src.data(), g.data(), src.size());
}

// B^T for real buffers.
std::vector<double> transposed(const std::vector<double>& a, std::size_t r, std::size_t c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
    return out;
}

struct CBuf {
    std::vector<double> re, im;
};

// A^dagger for split-complex buffers.
CBuf adjoint_buf(const std::vector<double>& re, const std::vector<double>& im,
                 std::size_t r, std::size_t c) {
    CBuf out;
    out.re.resize(re.size());
    out.im.resize(re.size());
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out.re[j * r + i] = re[i * c + j];
            out.im[j * r + i] = -im[i * c + j];
        }
    }
    return out;
}

} // namespace

void Node::ensure_grad() {
    if (gre.empty()) gre.assign(size(), 0.0);
    if (complex_valued && gim.empty()) gim.assign(size(), 0.0);
}

void Node::clear_grad() {
    gre.clear();
    gim.clear();
}

// ---- Tensor ----------------------------------------------------------------

Tensor Tensor::leaf(Shape s, std::vector<double> values, bool requires_grad) {
    if (values.size() != s.size())
        throw DimensionError("Tensor::leaf: values length " + std::to_string(values.size()) +
                             " != shape size " + std::to_string(s.size()));
    auto n = make_node(s, false, {});
    n->re = std::move(values);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return wrap(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return leaf({1, 1}, {v}, requires_grad);
}

Tensor Tensor::zeros(Shape s, bool requires_grad) {
    return leaf(s, std::vector<double>(s.size(), 0.0), requires_grad);
}

Tensor Tensor::full(Shape s, double v, bool requires_grad) {
    return leaf(s, std::vector<double>(s.size(), v), requires_grad);
}

double Tensor::item() const {
    check_scalar(n_->shape, "Tensor::item");
    return n_->re[0];
}

const std::vector<double>& Tensor::grad() const {
    if (n_->gre.empty()) throw ContractViolation("Tensor::grad: no gradient accumulated");
    return n_->gre;
}

std::vector<double>& Tensor::values_mut() {
    if (!n_->parents.empty())
        throw ContractViolation("Tensor::values_mut: only leaves are mutable");
    return n_->re;
}

// ---- ComplexTensor ---------------------------------------------------------

ComplexTensor ComplexTensor::leaf(Shape s, std::vector<double> re, std::vector<double> im,
                                  bool requires_grad) {
    if (re.size() != s.size() || im.size() != s.size())
        throw DimensionError("ComplexTensor::leaf: re/im length does not match shape");
    auto n = make_node(s, true, {});
    n->re = std::move(re);
    n->im = std::move(im);
    n->requires_grad = requires_grad;
    n->needs_grad = requires_grad;
    return wrap(n);
}

ComplexTensor ComplexTensor::zeros(Shape s, bool requires_grad) {
    return leaf(s, std::vector<double>(s.size(), 0.0), std::vector<double>(s.size(), 0.0),
                requires_grad);
}

ComplexTensor ComplexTensor::identity(std::size_t n) {
    std::vector<double> re(n * n, 0.0), im(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) re[i * n + i] = 1.0;
    return leaf({n, n}, std::move(re), std::move(im));
}

ComplexTensor ComplexTensor::i_identity(std::size_t n) {
    std::vector<double> re(n * n, 0.0), im(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) im[i * n + i] = 1.0;
    return leaf({n, n}, std::move(re), std::move(im));
}

const std::vector<double>& ComplexTensor::grad_re() const {
    if (n_->gre.empty()) throw ContractViolation("ComplexTensor::grad_re: no gradient");
    return n_->gre;
}

const std::vector<double>& ComplexTensor::grad_im() const {
    if (n_->gim.empty()) throw ContractViolation("ComplexTensor::grad_im: no gradient");
    return n_->gim;
}

std::vector<double>& ComplexTensor::real_values_mut() {
    if (!n_->parents.empty())
        throw ContractViolation("ComplexTensor::real_values_mut: only leaves are mutable");
    return n_->re;
}

std::vector<double>& ComplexTensor::imag_values_mut() {
    if (!n_->parents.empty())
        throw ContractViolation("ComplexTensor::imag_values_mut: only leaves are mutable");
    return n_->im;
}

// ---- real ops --------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a.shape(), b.shape(), "add");
    auto n = make_node(a.shape(), false, {a.node(), b.node()});
    kt().add(a.values().data(), b.values().data(), n->re.data(), n->size());
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            accumulate(pa->gre, self->gre);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            accumulate(pb->gre, self->gre);
        }
    };
    return Tensor::wrap(n);
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a.shape(), b.shape(), "sub");
    auto n = make_node(a.shape(), false, {a.node(), b.node()});
    kt().sub(a.values().data(), b.values().data(), n->re.data(), n->size());
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            accumulate(pa->gre, self->gre);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            kt().axpy(-1.0, self->gre.data(), pb->gre.data(), self->gre.size());
        }
    };
    return Tensor::wrap(n);
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a.shape(), b.shape(), "mul");
    auto n = make_node(a.shape(), false, {a.node(), b.node()});
    kt().mul(a.values().data(), b.values().data(), n->re.data(), n->size());
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
        const std::size_t m = self->gre.size();
        if (pa->needs_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) pa->gre[i] += self->gre[i] * pb->re[i];
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) pb->gre[i] += self->gre[i] * pa->re[i];
        }
    };
    return Tensor::wrap(n);
}

Tensor add_const(const Tensor& a, double c) {
    auto n = make_node(a.shape(), false, {a.node()});
    for (std::size_t i = 0; i < n->size(); ++i) n->re[i] = a.values()[i] + c;
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        accumulate(pa->gre, self->gre);
    };
    return Tensor::wrap(n);
}

Tensor mul_const(const Tensor& a, double c) {
    auto n = make_node(a.shape(), false, {a.node()});
    for (std::size_t i = 0; i < n->size(); ++i) n->re[i] = a.values()[i] * c;
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, c] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        kt().axpy(c, self->gre.data(), pa->gre.data(), self->gre.size());
    };
    return Tensor::wrap(n);
}

Tensor add_scalar(const Tensor& a, const Tensor& s) {
    check_scalar(s.shape(), "add_scalar");
    auto n = make_node(a.shape(), false, {a.node(), s.node()});
    const double sv = s.values()[0];
    for (std::size_t i = 0; i < n->size(); ++i) n->re[i] = a.values()[i] + sv;
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* ps = s.node().get();
    n->backward = [self, pa, ps] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            accumulate(pa->gre, self->gre);
        }
        if (ps->needs_grad) {
            ps->ensure_grad();
            double acc = 0.0;
            for (double g : self->gre) acc += g;
            ps->gre[0] += acc;
        }
    };
    return Tensor::wrap(n);
}

Tensor mul_scalar(const Tensor& a, const Tensor& s) {
    check_scalar(s.shape(), "mul_scalar");
    auto n = make_node(a.shape(), false, {a.node(), s.node()});
    const double sv = s.values()[0];
    for (std::size_t i = 0; i < n->size(); ++i) n->re[i] = a.values()[i] * sv;
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* ps = s.node().get();
    n->backward = [self, pa, ps] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            kt().axpy(ps->re[0], self->gre.data(), pa->gre.data(), self->gre.size());
        }
        if (ps->needs_grad) {
            ps->ensure_grad();
            double acc = 0.0;
            for (std::size_t i = 0; i < self->gre.size(); ++i) acc += self->gre[i] * pa->re[i];
            ps->gre[0] += acc;
        }
    };
    return Tensor::wrap(n);
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
    if (b.rows() != 1 || b.cols() != a.cols())
        throw DimensionError("add_rowvec: expected 1x" + std::to_string(a.cols()) +
                             " row vector");
    auto n = make_node(a.shape(), false, {a.node(), b.node()});
    const std::size_t r = a.rows(), c = a.cols();
    for (std::size_t i = 0; i < r; ++i)
        kt().add(a.values().data() + i * c, b.values().data(), n->re.data() + i * c, c);
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb, r, c] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            accumulate(pa->gre, self->gre);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < r; ++i)
                kt().axpy(1.0, self->gre.data() + i * c, pb->gre.data(), c);
        }
    };
    return Tensor::wrap(n);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_matmul(a.shape(), b.shape(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), c = b.cols();
    auto n = make_node({m, c}, false, {a.node(), b.node()});
    kt().matmul_acc(a.values().data(), b.values().data(), n->re.data(), m, k, c);
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb, m, k, c] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            // gA += gC * B^T
            auto bt = transposed(pb->re, k, c);
            kt().matmul_acc(self->gre.data(), bt.data(), pa->gre.data(), m, c, k);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            // gB += A^T * gC
            auto at = transposed(pa->re, m, k);
            kt().matmul_acc(at.data(), self->gre.data(), pb->gre.data(), k, m, c);
        }
    };
    return Tensor::wrap(n);
}

Tensor transpose(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    auto n = make_node({c, r}, false, {a.node()});
    n->re = transposed(a.values(), r, c);
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, r, c] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < r; ++j) pa->gre[j * c + i] += self->gre[i * r + j];
    };
    return Tensor::wrap(n);
}

namespace {

double softplus_val(double x) {
    // log(1 + e^x) without overflow.
    if (x > 35.0) return x;
    if (x < -35.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid_val(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Tensor activation(const Tensor& a, Activation kind) {
    auto n = make_node(a.shape(), false, {a.node()});
    const auto& x = a.values();
    switch (kind) {
    case Activation::Softplus:
        for (std::size_t i = 0; i < x.size(); ++i) n->re[i] = softplus_val(x[i]);
        break;
    case Activation::Tanh:
        for (std::size_t i = 0; i < x.size(); ++i) n->re[i] = std::tanh(x[i]);
        break;
    case Activation::Relu:
        for (std::size_t i = 0; i < x.size(); ++i) n->re[i] = x[i] > 0 ? x[i] : 0.0;
        break;
    case Activation::Identity:
        n->re = x;
        break;
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, kind] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        const std::size_t m = self->gre.size();
        switch (kind) {
        case Activation::Softplus:
            for (std::size_t i = 0; i < m; ++i)
                pa->gre[i] += self->gre[i] * sigmoid_val(pa->re[i]);
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < m; ++i)
                pa->gre[i] += self->gre[i] * (1.0 - self->re[i] * self->re[i]);
            break;
        case Activation::Relu:
            for (std::size_t i = 0; i < m; ++i)
                if (pa->re[i] > 0) pa->gre[i] += self->gre[i];
            break;
        case Activation::Identity:
            accumulate(pa->gre, self->gre);
            break;
        }
    };
    return Tensor::wrap(n);
}

Tensor sqrt_elem(const Tensor& a) {
    auto n = make_node(a.shape(), false, {a.node()});
    for (std::size_t i = 0; i < n->size(); ++i) {
        const double x = a.values()[i];
        if (x < 0.0)
            throw NumericalError("sqrt_elem: negative input " + std::to_string(x));
        n->re[i] = std::sqrt(x);
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < self->gre.size(); ++i) {
            const double s = self->re[i];
            if (s > 1e-150) pa->gre[i] += self->gre[i] * 0.5 / s;
        }
    };
    return Tensor::wrap(n);
}

Tensor recip(const Tensor& a) {
    auto n = make_node(a.shape(), false, {a.node()});
    for (std::size_t i = 0; i < n->size(); ++i) {
        const double x = a.values()[i];
        if (std::abs(x) < 1e-300)
            throw NumericalError("recip: input too close to zero");
        n->re[i] = 1.0 / x;
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < self->gre.size(); ++i)
            pa->gre[i] -= self->gre[i] * self->re[i] * self->re[i];
    };
    return Tensor::wrap(n);
}

Tensor sum_all(const Tensor& a) {
    auto n = make_node({1, 1}, false, {a.node()});
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    n->re[0] = acc;
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        const double g = self->gre[0];
        for (double& gv : pa->gre) gv += g;
    };
    return Tensor::wrap(n);
}

Tensor mean_all(const Tensor& a) {
    return mul_const(sum_all(a), 1.0 / static_cast<double>(a.size()));
}

Tensor sum_axis(const Tensor& a, int axis) {
    if (axis != 0 && axis != 1) throw DimensionError("sum_axis: axis must be 0 or 1");
    const std::size_t r = a.rows(), c = a.cols();
    const Shape out = axis == 0 ? Shape{1, c} : Shape{r, 1};
    auto n = make_node(out, false, {a.node()});
    if (axis == 0) {
        for (std::size_t i = 0; i < r; ++i)
            kt().axpy(1.0, a.values().data() + i * c, n->re.data(), c);
    } else {
        for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += a.values()[i * c + j];
            n->re[i] = acc;
        }
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, r, c, axis] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        if (axis == 0) {
            for (std::size_t i = 0; i < r; ++i)
                kt().axpy(1.0, self->gre.data(), pa->gre.data() + i * c, c);
        } else {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) pa->gre[i * c + j] += self->gre[i];
        }
    };
    return Tensor::wrap(n);
}

Tensor mean_axis(const Tensor& a, int axis) {
    const double denom = axis == 0 ? static_cast<double>(a.rows())
                                   : static_cast<double>(a.cols());
    return mul_const(sum_axis(a, axis), 1.0 / denom);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no parts");
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& p : parts) {
        if (p.cols() != c) throw DimensionError("concat_rows: column counts differ");
        r += p.rows();
        parents.push_back(p.node());
    }
    auto n = make_node({r, c}, false, std::move(parents));
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.values().begin(), p.values().end(), n->re.begin() + off);
        off += p.size();
    }
    Node* self = n.get();
    n->backward = [self] {
        std::size_t off = 0;
        for (const auto& p : self->parents) {
            const std::size_t sz = p->size();
            if (p->needs_grad) {
                p->ensure_grad();
                kt().axpy(1.0, self->gre.data() + off, p->gre.data(), sz);
            }
            off += sz;
        }
    };
    return Tensor::wrap(n);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no parts");
    const std::size_t r = parts[0].rows();
    std::size_t c = 0;
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& p : parts) {
        if (p.rows() != r) throw DimensionError("concat_cols: row counts differ");
        c += p.cols();
        parents.push_back(p.node());
    }
    auto n = make_node({r, c}, false, std::move(parents));
    std::size_t coff = 0;
    for (const auto& p : parts) {
        const std::size_t pc = p.cols();
        for (std::size_t i = 0; i < r; ++i)
            std::copy(p.values().begin() + i * pc, p.values().begin() + (i + 1) * pc,
                      n->re.begin() + i * c + coff);
        coff += pc;
    }
    Node* self = n.get();
    n->backward = [self, r, c] {
        std::size_t coff = 0;
        for (const auto& p : self->parents) {
            const std::size_t pc = p->shape.cols;
            if (p->needs_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < r; ++i)
                    kt().axpy(1.0, self->gre.data() + i * c + coff, p->gre.data() + i * pc, pc);
            }
            coff += pc;
        }
    };
    return Tensor::wrap(n);
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    if (r0 >= r1 || r1 > a.rows())
        throw DimensionError("slice_rows: bad range [" + std::to_string(r0) + ", " +
                             std::to_string(r1) + ") for " + std::to_string(a.rows()) + " rows");
    const std::size_t c = a.cols();
    auto n = make_node({r1 - r0, c}, false, {a.node()});
    std::copy(a.values().begin() + r0 * c, a.values().begin() + r1 * c, n->re.begin());
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, r0, c] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        kt().axpy(1.0, self->gre.data(), pa->gre.data() + r0 * c, self->gre.size());
    };
    return Tensor::wrap(n);
}

Tensor select_cols(const Tensor& a, const std::vector<std::size_t>& idx) {
    const std::size_t r = a.rows(), c = a.cols(), k = idx.size();
    for (std::size_t j : idx)
        if (j >= c) throw DimensionError("select_cols: index " + std::to_string(j) +
                                         " out of range");
    auto n = make_node({r, k}, false, {a.node()});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) n->re[i * k + j] = a.values()[i * c + idx[j]];
    Node* self = n.get();
    Node* pa = a.node().get();
    auto index = idx;
    n->backward = [self, pa, r, c, k, index] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < k; ++j)
                pa->gre[i * c + index[j]] += self->gre[i * k + j];
    };
    return Tensor::wrap(n);
}

Tensor reshape(const Tensor& a, Shape s) {
    if (s.size() != a.size()) throw DimensionError("reshape: element count changes");
    auto n = make_node(s, false, {a.node()});
    n->re = a.values();
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        accumulate(pa->gre, self->gre);
    };
    return Tensor::wrap(n);
}

Tensor softmax_cross_entropy(const Tensor& logits, int label) {
    const std::size_t k = logits.size();
    if (k < 2) throw DimensionError("softmax_cross_entropy: need at least 2 logits");
    if (label < 0 || static_cast<std::size_t>(label) >= k)
        throw ContractViolation("softmax_cross_entropy: label out of range");
    for (double v : logits.values())
        if (!std::isfinite(v))
            throw NumericalError("softmax_cross_entropy: non-finite logit");
    auto n = make_node({1, 1}, false, {logits.node()});
    const auto& l = logits.values();
    const double m = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (double v : l) z += std::exp(v - m);
    n->re[0] = std::log(z) - (l[label] - m);
    Node* self = n.get();
    Node* pl = logits.node().get();
    n->backward = [self, pl, label, m, z, k] {
        if (!pl->needs_grad) return;
        pl->ensure_grad();
        const double g = self->gre[0];
        for (std::size_t i = 0; i < k; ++i) {
            const double p = std::exp(pl->re[i] - m) / z;
            pl->gre[i] += g * (p - (static_cast<std::size_t>(label) == i ? 1.0 : 0.0));
        }
    };
    return Tensor::wrap(n);
}

// ---- complex ops -----------------------------------------------------------

ComplexTensor cadd(const ComplexTensor& a, const ComplexTensor& b) {
    check_same_shape(a.shape(), b.shape(), "cadd");
    auto n = make_node(a.shape(), true, {a.node(), b.node()});
    kt().add(a.real_values().data(), b.real_values().data(), n->re.data(), n->size());
    kt().add(a.imag_values().data(), b.imag_values().data(), n->im.data(), n->size());
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
        for (Node* p : {pa, pb}) {
            if (!p->needs_grad) continue;
            p->ensure_grad();
            accumulate(p->gre, self->gre);
            accumulate(p->gim, self->gim);
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor csub(const ComplexTensor& a, const ComplexTensor& b) {
    check_same_shape(a.shape(), b.shape(), "csub");
    auto n = make_node(a.shape(), true, {a.node(), b.node()});
    kt().sub(a.real_values().data(), b.real_values().data(), n->re.data(), n->size());
    kt().sub(a.imag_values().data(), b.imag_values().data(), n->im.data(), n->size());
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            accumulate(pa->gre, self->gre);
            accumulate(pa->gim, self->gim);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            kt().axpy(-1.0, self->gre.data(), pb->gre.data(), self->gre.size());
            kt().axpy(-1.0, self->gim.data(), pb->gim.data(), self->gim.size());
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor cmul(const ComplexTensor& a, const ComplexTensor& b) {
    check_same_shape(a.shape(), b.shape(), "cmul");
    auto n = make_node(a.shape(), true, {a.node(), b.node()});
    const std::size_t m = n->size();
    for (std::size_t i = 0; i < m; ++i) {
        const double ar = a.real_values()[i], ai = a.imag_values()[i];
        const double br = b.real_values()[i], bi = b.imag_values()[i];
        n->re[i] = ar * br - ai * bi;
        n->im[i] = ar * bi + ai * br;
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    // Holomorphic product: G_a = G_out * conj(b), G_b = conj(a) * G_out.
    n->backward = [self, pa, pb] {
        const std::size_t m = self->size();
        if (pa->needs_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double gr = self->gre[i], gi = self->gim[i];
                pa->gre[i] += gr * pb->re[i] + gi * pb->im[i];
                pa->gim[i] += -gr * pb->im[i] + gi * pb->re[i];
            }
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                const double gr = self->gre[i], gi = self->gim[i];
                pb->gre[i] += gr * pa->re[i] + gi * pa->im[i];
                pb->gim[i] += -gr * pa->im[i] + gi * pa->re[i];
            }
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor cmatmul(const ComplexTensor& a, const ComplexTensor& b) {
    check_matmul(a.shape(), b.shape(), "cmatmul");
    const std::size_t m = a.rows(), k = a.cols(), c = b.cols();
    auto n = make_node({m, c}, true, {a.node(), b.node()});
    kt().cmatmul_acc(a.real_values().data(), a.imag_values().data(),
                     b.real_values().data(), b.imag_values().data(),
                     n->re.data(), n->im.data(), m, k, c);
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb, m, k, c] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            // G_A += G_C * B^dagger
            auto bd = adjoint_buf(pb->re, pb->im, k, c);
            kt().cmatmul_acc(self->gre.data(), self->gim.data(), bd.re.data(), bd.im.data(),
                             pa->gre.data(), pa->gim.data(), m, c, k);
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            // G_B += A^dagger * G_C
            auto ad = adjoint_buf(pa->re, pa->im, m, k);
            kt().cmatmul_acc(ad.re.data(), ad.im.data(), self->gre.data(), self->gim.data(),
                             pb->gre.data(), pb->gim.data(), k, m, c);
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor kron(const ComplexTensor& a, const ComplexTensor& b) {
    const std::size_t ra = a.rows(), ca = a.cols(), rb = b.rows(), cb = b.cols();
    auto n = make_node({ra * rb, ca * cb}, true, {a.node(), b.node()});
    const std::size_t oc = ca * cb;
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < ca; ++j) {
            const double ar = a.real_values()[i * ca + j], ai = a.imag_values()[i * ca + j];
            for (std::size_t p = 0; p < rb; ++p)
                for (std::size_t q = 0; q < cb; ++q) {
                    const double br = b.real_values()[p * cb + q];
                    const double bi = b.imag_values()[p * cb + q];
                    const std::size_t o = (i * rb + p) * oc + (j * cb + q);
                    n->re[o] = ar * br - ai * bi;
                    n->im[o] = ar * bi + ai * br;
                }
        }
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backward = [self, pa, pb, ra, ca, rb, cb, oc] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            for (std::size_t i = 0; i < ra; ++i)
                for (std::size_t j = 0; j < ca; ++j) {
                    double accr = 0.0, acci = 0.0;
                    for (std::size_t p = 0; p < rb; ++p)
                        for (std::size_t q = 0; q < cb; ++q) {
                            const std::size_t o = (i * rb + p) * oc + (j * cb + q);
                            const double br = pb->re[p * cb + q], bi = pb->im[p * cb + q];
                            accr += self->gre[o] * br + self->gim[o] * bi;
                            acci += -self->gre[o] * bi + self->gim[o] * br;
                        }
                    pa->gre[i * ca + j] += accr;
                    pa->gim[i * ca + j] += acci;
                }
        }
        if (pb->needs_grad) {
            pb->ensure_grad();
            for (std::size_t p = 0; p < rb; ++p)
                for (std::size_t q = 0; q < cb; ++q) {
                    double accr = 0.0, acci = 0.0;
                    for (std::size_t i = 0; i < ra; ++i)
                        for (std::size_t j = 0; j < ca; ++j) {
                            const std::size_t o = (i * rb + p) * oc + (j * cb + q);
                            const double ar = pa->re[i * ca + j], ai = pa->im[i * ca + j];
                            accr += self->gre[o] * ar + self->gim[o] * ai;
                            acci += -self->gre[o] * ai + self->gim[o] * ar;
                        }
                    pb->gre[p * cb + q] += accr;
                    pb->gim[p * cb + q] += acci;
                }
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor adjoint(const ComplexTensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    auto n = make_node({c, r}, true, {a.node()});
    auto ad = adjoint_buf(a.real_values(), a.imag_values(), r, c);
    n->re = std::move(ad.re);
    n->im = std::move(ad.im);
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, r, c] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                pa->gre[j * c + i] += self->gre[i * r + j];
                pa->gim[j * c + i] -= self->gim[i * r + j];
            }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor ctranspose(const ComplexTensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    auto n = make_node({c, r}, true, {a.node()});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            n->re[j * r + i] = a.real_values()[i * c + j];
            n->im[j * r + i] = a.imag_values()[i * c + j];
        }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, r, c] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < c; ++i)
            for (std::size_t j = 0; j < r; ++j) {
                pa->gre[j * c + i] += self->gre[i * r + j];
                pa->gim[j * c + i] += self->gim[i * r + j];
            }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor conj(const ComplexTensor& a) {
    auto n = make_node(a.shape(), true, {a.node()});
    n->re = a.real_values();
    for (std::size_t i = 0; i < n->size(); ++i) n->im[i] = -a.imag_values()[i];
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        accumulate(pa->gre, self->gre);
        kt().axpy(-1.0, self->gim.data(), pa->gim.data(), self->gim.size());
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor cscale(const ComplexTensor& a, std::complex<double> c) {
    auto n = make_node(a.shape(), true, {a.node()});
    const double cr = c.real(), ci = c.imag();
    for (std::size_t i = 0; i < n->size(); ++i) {
        const double ar = a.real_values()[i], ai = a.imag_values()[i];
        n->re[i] = cr * ar - ci * ai;
        n->im[i] = cr * ai + ci * ar;
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa, cr, ci] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        // G_a = conj(c) * G_out
        for (std::size_t i = 0; i < self->size(); ++i) {
            const double gr = self->gre[i], gi = self->gim[i];
            pa->gre[i] += cr * gr + ci * gi;
            pa->gim[i] += -ci * gr + cr * gi;
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor cmul_scalar(const ComplexTensor& a, const Tensor& s) {
    check_scalar(s.shape(), "cmul_scalar");
    auto n = make_node(a.shape(), true, {a.node(), s.node()});
    const double sv = s.values()[0];
    for (std::size_t i = 0; i < n->size(); ++i) {
        n->re[i] = a.real_values()[i] * sv;
        n->im[i] = a.imag_values()[i] * sv;
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    Node* ps = s.node().get();
    n->backward = [self, pa, ps] {
        if (pa->needs_grad) {
            pa->ensure_grad();
            kt().axpy(ps->re[0], self->gre.data(), pa->gre.data(), self->gre.size());
            kt().axpy(ps->re[0], self->gim.data(), pa->gim.data(), self->gim.size());
        }
        if (ps->needs_grad) {
            ps->ensure_grad();
            double acc = 0.0;
            for (std::size_t i = 0; i < self->size(); ++i)
                acc += self->gre[i] * pa->re[i] + self->gim[i] * pa->im[i];
            ps->gre[0] += acc;
        }
    };
    return ComplexTensor::wrap(n);
}

ComplexTensor complex_from_parts(const Tensor& re, const Tensor& im) {
    check_same_shape(re.shape(), im.shape(), "complex_from_parts");
    auto n = make_node(re.shape(), true, {re.node(), im.node()});
    n->re = re.values();
    n->im = im.values();
    Node* self = n.get();
    Node* pr = re.node().get();
    Node* pi = im.node().get();
    n->backward = [self, pr, pi] {
        if (pr->needs_grad) {
            pr->ensure_grad();
            accumulate(pr->gre, self->gre);
        }
        if (pi->needs_grad) {
            pi->ensure_grad();
            accumulate(pi->gre, self->gim);
        }
    };
    return ComplexTensor::wrap(n);
}

Tensor creal(const ComplexTensor& a) {
    auto n = make_node(a.shape(), false, {a.node()});
    n->re = a.real_values();
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        accumulate(pa->gre, self->gre);
    };
    return Tensor::wrap(n);
}

Tensor cimag(const ComplexTensor& a) {
    auto n = make_node(a.shape(), false, {a.node()});
    n->re = a.imag_values();
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        accumulate(pa->gim, self->gre);
    };
    return Tensor::wrap(n);
}

Tensor cmodulus(const ComplexTensor& a) {
    auto n = make_node(a.shape(), false, {a.node()});
    for (std::size_t i = 0; i < n->size(); ++i) {
        const double re = a.real_values()[i], im = a.imag_values()[i];
        n->re[i] = std::sqrt(re * re + im * im);
    }
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < self->size(); ++i) {
            const double m = self->re[i];
            if (m <= 1e-150) continue; // gradient undefined at the origin
            pa->gre[i] += self->gre[i] * pa->re[i] / m;
            pa->gim[i] += self->gre[i] * pa->im[i] / m;
        }
    };
    return Tensor::wrap(n);
}

ComplexTensor csum_all(const ComplexTensor& a) {
    auto n = make_node({1, 1}, true, {a.node()});
    double sr = 0.0, si = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sr += a.real_values()[i];
        si += a.imag_values()[i];
    }
    n->re[0] = sr;
    n->im[0] = si;
    Node* self = n.get();
    Node* pa = a.node().get();
    n->backward = [self, pa] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        for (std::size_t i = 0; i < pa->size(); ++i) {
            pa->gre[i] += self->gre[0];
            pa->gim[i] += self->gim[0];
        }
    };
    return ComplexTensor::wrap(n);
}

namespace {

double cone_norm(const std::vector<double>& re, const std::vector<double>& im,
                 std::size_t n) {
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double col = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t o = i * n + j;
            col += std::sqrt(re[o] * re[o] + im[o] * im[o]);
        }
        best = std::max(best, col);
    }
    return best;
}

} // namespace

ComplexTensor cinverse(const ComplexTensor& a, double cond_limit) {
    if (a.rows() != a.cols()) throw DimensionError("cinverse: matrix must be square");
    const std::size_t n = a.rows();
    // Gauss-Jordan with partial pivoting on a working copy.
    std::vector<std::complex<double>> m(n * n), x(n * n, {0.0, 0.0});
    for (std::size_t i = 0; i < n * n; ++i)
        m[i] = {a.real_values()[i], a.imag_values()[i]};
    for (std::size_t i = 0; i < n; ++i) x[i * n + i] = 1.0;

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(m[k * n + k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double v = std::abs(m[r * n + k]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < 1e-300)
            throw NumericalError("cinverse: matrix is singular (pivot " +
                                 std::to_string(best) + " at column " + std::to_string(k) + ")");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(m[k * n + j], m[piv * n + j]);
                std::swap(x[k * n + j], x[piv * n + j]);
            }
        }
        const std::complex<double> d = m[k * n + k];
        for (std::size_t j = 0; j < n; ++j) {
            m[k * n + j] /= d;
            x[k * n + j] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == k) continue;
            const std::complex<double> f = m[r * n + k];
            if (f == std::complex<double>(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < n; ++j) {
                m[r * n + j] -= f * m[k * n + j];
                x[r * n + j] -= f * x[k * n + j];
            }
        }
    }

    auto node = make_node({n, n}, true, {a.node()});
    for (std::size_t i = 0; i < n * n; ++i) {
        node->re[i] = x[i].real();
        node->im[i] = x[i].imag();
    }

    const double cond = cone_norm(a.real_values(), a.imag_values(), n) *
                        cone_norm(node->re, node->im, n);
    if (!(cond <= cond_limit))
        throw NumericalError("cinverse: condition estimate " + std::to_string(cond) +
                             " exceeds limit " + std::to_string(cond_limit));

    Node* self = node.get();
    Node* pa = a.node().get();
    node->backward = [self, pa, n] {
        if (!pa->needs_grad) return;
        pa->ensure_grad();
        // G_A -= B^dagger G_B B^dagger with B = A^-1 (the node's values).
        auto bd = adjoint_buf(self->re, self->im, n, n);
        std::vector<double> t1r(n * n, 0.0), t1i(n * n, 0.0);
        kt().cmatmul_acc(bd.re.data(), bd.im.data(), self->gre.data(), self->gim.data(),
                         t1r.data(), t1i.data(), n, n, n);
        std::vector<double> t2r(n * n, 0.0), t2i(n * n, 0.0);
        kt().cmatmul_acc(t1r.data(), t1i.data(), bd.re.data(), bd.im.data(),
                         t2r.data(), t2i.data(), n, n, n);
        kt().axpy(-1.0, t2r.data(), pa->gre.data(), n * n);
        kt().axpy(-1.0, t2i.data(), pa->gim.data(), n * n);
    };
    return ComplexTensor::wrap(node);
}

ComplexTensor expm_minus_i(const ComplexTensor& h, const Tensor& scale) {
    if (h.rows() != h.cols()) throw DimensionError("expm_minus_i: matrix must be square");
    check_scalar(scale.shape(), "expm_minus_i scale");
    const std::size_t n = h.rows();
    double herm_dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            herm_dev = std::max(herm_dev,
                                std::abs(h.real_values()[i * n + j] - h.real_values()[j * n + i]));
            herm_dev = std::max(herm_dev,
                                std::abs(h.imag_values()[i * n + j] + h.imag_values()[j * n + i]));
        }
    if (herm_dev > 1e-10)
        throw ContractViolation("expm_minus_i: input deviates from Hermitian by " +
                                std::to_string(herm_dev));

    // M = -i * scale * h, then scale ||M||_1 below 1/2 by halving s times.
    ComplexTensor m = cscale(cmul_scalar(h, scale), {0.0, -1.0});
    const double nrm = cone_norm(m.real_values(), m.imag_values(), n);
    int s = 0;
    if (nrm > 0.5) s = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    s = std::min(s, 60);
    ComplexTensor t = s > 0 ? cscale(m, std::ldexp(1.0, -s)) : m;

    // Degree-13 Taylor polynomial via Horner: truncation below 1e-15 for
    // ||T|| <= 1/2, well inside the 1e-12 budget after squaring.
    const int order = 13;
    ComplexTensor eye = ComplexTensor::identity(n);
    ComplexTensor p = cadd(eye, cscale(t, 1.0 / order));
    for (int k = order - 1; k >= 1; --k)
        p = cadd(eye, cscale(cmatmul(t, p), 1.0 / k));
    for (int i = 0; i < s; ++i) p = cmatmul(p, p);
    return p;
}

// ---- backward engine --------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined()) throw ContractViolation("backward: undefined loss");
    check_scalar(loss.shape(), "backward loss");
    Node* root = loss.node().get();
    if (!root->needs_grad) return; // nothing reachable requires gradients

    // Iterative post-order DFS over the needs_grad subgraph.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->needs_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch per sweep; leaf grads accumulate across
    // sweeps until explicitly zeroed.
    for (Node* node : order)
        if (!node->parents.empty()) node->clear_grad();

    root->ensure_grad();
    root->gre[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && !node->gre.empty()) node->backward();
    }
}

} // namespace qjet::ad
