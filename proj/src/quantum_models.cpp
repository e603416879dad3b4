#include "qjet/quantum_models.hpp"

#include <cmath>

namespace qjet {

namespace {

using ad::ComplexTensor;
using ad::Tensor;

void check_edge_matrix(const std::vector<double>& a, std::size_t n, const char* op) {
    if (a.size() != n * n)
        throw DimensionError(std::string(op) + ": edge matrix size " +
                             std::to_string(a.size()) + " != n^2");
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i * n + i] != 0.0)
            throw ContractViolation(std::string(op) + ": edge matrix diagonal not zero");
        for (std::size_t j = i + 1; j < n; ++j)
            if (a[i * n + j] != a[j * n + i])
                throw ContractViolation(std::string(op) + ": edge matrix not symmetric");
    }
}

} // namespace

ComplexTensor pauli_x() {
    return ComplexTensor::leaf({2, 2}, {0, 1, 1, 0}, {0, 0, 0, 0});
}

ComplexTensor pauli_z() {
    return ComplexTensor::leaf({2, 2}, {1, 0, 0, -1}, {0, 0, 0, 0});
}

ComplexTensor lift_single_qubit(const ComplexTensor& op, std::size_t q, std::size_t n) {
    if (q < 1 || q > n)
        throw DimensionError("lift_single_qubit: position " + std::to_string(q) +
                             " outside 1.." + std::to_string(n));
    ComplexTensor out;
    for (std::size_t i = 1; i <= n; ++i) {
        ComplexTensor factor = (i == q) ? op : ComplexTensor::identity(2);
        out = out.defined() ? ad::kron(out, factor) : factor;
    }
    return out;
}

std::vector<double> coupling_hamiltonian_diagonal(const std::vector<double>& a,
                                                  std::size_t n) {
    check_edge_matrix(a, n, "coupling_hamiltonian");
    const std::size_t dim = std::size_t{1} << n;
    std::vector<double> diag(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool bi = (k >> (n - 1 - i)) & 1;
            for (std::size_t j = i + 1; j < n; ++j) {
                const bool bj = (k >> (n - 1 - j)) & 1;
                if (bi != bj) v += a[i * n + j];
            }
        }
        diag[k] = 0.5 * v;
    }
    return diag;
}

ComplexTensor build_coupling_hamiltonian(const std::vector<double>& a, std::size_t n) {
    const auto diag = coupling_hamiltonian_diagonal(a, n);
    const std::size_t dim = diag.size();
    std::vector<double> re(dim * dim, 0.0), im(dim * dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) re[k * dim + k] = diag[k];
    return ComplexTensor::leaf({dim, dim}, std::move(re), std::move(im));
}

ComplexTensor build_coupling_hamiltonian_literal(const std::vector<double>& a,
                                                 std::size_t n) {
    check_edge_matrix(a, n, "coupling_hamiltonian_literal");
    const std::size_t dim = std::size_t{1} << n;

    // (I - sigma^z)/2 lifted to each qubit.
    std::vector<ComplexTensor> number_ops;
    ComplexTensor half_proj = ComplexTensor::leaf({2, 2}, {0, 0, 0, 1}, {0, 0, 0, 0});
    for (std::size_t q = 1; q <= n; ++q)
        number_ops.push_back(lift_single_qubit(half_proj, q, n));

    ComplexTensor h = ComplexTensor::zeros({dim, dim});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (a[i * n + j] == 0.0) continue;
            ComplexTensor d = ad::csub(number_ops[i], number_ops[j]);
            h = ad::cadd(h, ad::cscale(ad::cmatmul(d, d), 0.5 * a[i * n + j]));
        }
    return h;
}

ComplexTensor build_transverse_hamiltonian(std::size_t n) {
    if (n < 1) throw DimensionError("build_transverse_hamiltonian: need n >= 1");
    ComplexTensor h;
    for (std::size_t q = 1; q <= n; ++q) {
        ComplexTensor term = lift_single_qubit(pauli_x(), q, n);
        h = h.defined() ? ad::cadd(h, term) : term;
    }
    return h;
}

ComplexTensor layer_unitary(const Tensor& gamma1, const Tensor& gamma2,
                            const ComplexTensor& h_c, const ComplexTensor& h_t) {
    ComplexTensor ham = ad::cadd(ad::cmul_scalar(h_c, gamma1), ad::cmul_scalar(h_t, gamma2));
    return ad::expm_minus_i(ham, Tensor::scalar(1.0));
}

ComplexTensor cayley(const ComplexTensor& theta) {
    if (theta.rows() != theta.cols())
        throw DimensionError("cayley: theta must be square");
    ComplexTensor herm = ad::cadd(theta, ad::adjoint(theta));
    ComplexTensor i_eye = ComplexTensor::i_identity(theta.rows());
    return ad::cmatmul(ad::csub(herm, i_eye), ad::cinverse(ad::cadd(herm, i_eye)));
}

ComplexTensor encode_state(const Tensor& h, const Mlp& encoder) {
    const std::size_t n = h.rows();
    Tensor qubits = encoder.forward(h); // n x 4, rows (Re0, Im0, Re1, Im1)
    if (qubits.cols() != 4)
        throw DimensionError("encode_state: encoder must emit 4 reals per node");
    ComplexTensor psi;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor row = ad::slice_rows(qubits, i, i + 1);
        Tensor re = ad::reshape(ad::select_cols(row, {0, 2}), {2, 1});
        Tensor im = ad::reshape(ad::select_cols(row, {1, 3}), {2, 1});
        ComplexTensor q = ad::complex_from_parts(re, im);
        psi = psi.defined() ? ad::kron(psi, q) : q;
    }
    Tensor pr = ad::creal(psi);
    Tensor pi = ad::cimag(psi);
    Tensor norm2 = ad::add(ad::sum_all(ad::mul(pr, pr)), ad::sum_all(ad::mul(pi, pi)));
    if (norm2.item() < 1e-280)
        throw NumericalError("encode_state: degenerate encoding, product state has zero norm");
    return ad::cmul_scalar(psi, ad::recip(ad::sqrt_elem(norm2)));
}

ComplexTensor eqgnn_pool(const ComplexTensor& psi) {
    return ad::cscale(ad::csum_all(psi), 1.0 / static_cast<double>(psi.size()));
}

QuantumModel::QuantumModel(const ModelSpec& spec, bool equivariant_pool)
    : nodes_(spec.nodes),
      dim_(std::size_t{1} << spec.nodes),
      layers_(spec.layers),
      equivariant_pool_(equivariant_pool),
      squared_modulus_(spec.squared_modulus),
      head_hidden_(spec.head_hidden),
      act_(spec.act) {
    if (spec.hidden != dim_)
        throw ValidationError("QuantumModel: hidden width must equal 2^nodes = " +
                              std::to_string(dim_) + ", got " + std::to_string(spec.hidden));
    std::mt19937_64 rng(spec.seed);

    encoder_ = Mlp(kFeatureCount, spec.encoder_hidden, 4, act_, rng);
    encoder_.collect("encoder", params_);

    // gamma in [0, 0.1], theta near zero so U_theta starts near -I.
    if (layers_ > 0) {
        std::uniform_real_distribution<double> gamma_dist(0.0, 0.1);
        std::vector<double> g(layers_ * 2);
        for (double& v : g) v = gamma_dist(rng);
        gamma_ = Tensor::leaf({layers_, 2}, std::move(g), true);
        params_.push_back({"gamma", gamma_, {}});
    }

    std::normal_distribution<double> theta_dist(0.0, 0.01);
    for (std::size_t l = 0; l < layers_; ++l) {
        std::vector<double> re(dim_ * dim_), im(dim_ * dim_);
        for (double& v : re) v = theta_dist(rng);
        for (double& v : im) v = theta_dist(rng);
        ComplexTensor theta =
            ComplexTensor::leaf({dim_, dim_}, std::move(re), std::move(im), true);
        params_.push_back({"theta" + std::to_string(l), {}, theta});
        thetas_.push_back(std::move(theta));
    }

    const std::size_t head_in = equivariant_pool_ ? 1 : dim_;
    auto complex_glorot = [&](std::size_t rows, std::size_t cols) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-bound, bound);
        std::vector<double> re(rows * cols), im(rows * cols);
        for (double& v : re) v = dist(rng);
        for (double& v : im) v = dist(rng);
        return ComplexTensor::leaf({rows, cols}, std::move(re), std::move(im), true);
    };
    if (head_hidden_ > 0) {
        head_w1_ = complex_glorot(head_hidden_, head_in);
        head_b1_ = ComplexTensor::zeros({head_hidden_, 1}, true);
        params_.push_back({"head.w1", {}, head_w1_});
        params_.push_back({"head.b1", {}, head_b1_});
        head_w_ = complex_glorot(2, head_hidden_);
    } else {
        head_w_ = complex_glorot(2, head_in);
    }
    head_b_ = ComplexTensor::zeros({2, 1}, true);
    params_.push_back({"head.w", {}, head_w_});
    params_.push_back({"head.b", {}, head_b_});

    h_t_ = build_transverse_hamiltonian(nodes_);
}

ComplexTensor QuantumModel::evolve(const FeaturedJet& jet) {
    if (jet.nodes != nodes_)
        throw DimensionError("QuantumModel: jet has " + std::to_string(jet.nodes) +
                             " nodes, model is fixed to " + std::to_string(nodes_));
    Tensor h = Tensor::leaf({jet.nodes, kFeatureCount}, jet.h);
    ComplexTensor psi = encode_state(h, encoder_);
    ComplexTensor h_c = build_coupling_hamiltonian(jet.a, nodes_);
    for (std::size_t l = 0; l < layers_; ++l) {
        Tensor grow = ad::slice_rows(gamma_, l, l + 1);
        Tensor g1 = ad::select_cols(grow, {0});
        Tensor g2 = ad::select_cols(grow, {1});
        ComplexTensor u = layer_unitary(g1, g2, h_c, h_t_);
        ComplexTensor u_theta = cayley(thetas_[l]);
        psi = ad::cmatmul(u_theta, ad::cmatmul(u, ad::cmatmul(ad::adjoint(u_theta), psi)));
    }
    return psi;
}

ad::Tensor QuantumModel::head_logits(const ComplexTensor& psi) {
    ComplexTensor z = equivariant_pool_ ? eqgnn_pool(psi) : psi;
    if (head_hidden_ > 0) {
        ComplexTensor hid = ad::cadd(ad::cmatmul(head_w1_, z), head_b1_);
        // split activation on the re/im planes keeps the map complex-valued
        z = ad::complex_from_parts(ad::activation(ad::creal(hid), act_),
                                   ad::activation(ad::cimag(hid), act_));
    }
    ComplexTensor out = ad::cadd(ad::cmatmul(head_w_, z), head_b_);
    Tensor logits = ad::cmodulus(out);
    if (squared_modulus_) logits = ad::mul(logits, logits);
    return logits;
}

ad::Tensor QuantumModel::forward(const FeaturedJet& jet) {
    return head_logits(evolve(jet));
}

double QuantumModel::score(const std::vector<double>& logits) const {
    // Moduli are nonnegative; normalize them into a class-1 score.
    const double total = logits[0] + logits[1];
    if (total < 1e-300) return 0.5;
    return logits[1] / total;
}

} // namespace qjet
