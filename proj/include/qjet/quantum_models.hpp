#pragma once

#include "qjet/model.hpp"

namespace qjet {

// Diagonal of the coupling Hamiltonian in its reduced closed form
//   H_C = (1/4) sum_{j<k} a_jk (I - sigma_j^z sigma_k^z),
// i.e. entry (1/2) sum_{j<k} a_jk [bit_j(state) != bit_k(state)]. Qubit 1 is
// the most significant bit of the basis index. Throws ContractViolation for
// an asymmetric or nonzero-diagonal edge matrix.
std::vector<double> coupling_hamiltonian_diagonal(const std::vector<double>& a, std::size_t n);

// Same operator as a (constant) dense matrix.
ad::ComplexTensor build_coupling_hamiltonian(const std::vector<double>& a, std::size_t n);

// Independent route: the edge sum of squared number-operator differences,
//   (1/2) sum_{j<k} a_jk ((I - sigma_j^z)/2 - (I - sigma_k^z)/2)^2,
// evaluated with explicit Kronecker products and matrix squares. Equals the
// reduced form above ((n_j - n_k)^2 = (I - sz_j sz_k)/2); the two builders
// act as mutual oracles.
ad::ComplexTensor build_coupling_hamiltonian_literal(const std::vector<double>& a,
                                                     std::size_t n);

// H_T = sum_i sigma_i^x (hypercube adjacency; zero diagonal, entries 0/1).
ad::ComplexTensor build_transverse_hamiltonian(std::size_t n);

// Lift a single-qubit operator to qubit position q (1-based) of n qubits.
ad::ComplexTensor lift_single_qubit(const ad::ComplexTensor& op, std::size_t q, std::size_t n);

ad::ComplexTensor pauli_x();
ad::ComplexTensor pauli_z();

// exp(-i (gamma_1 H_C + gamma_2 H_T)) for one layer; gamma entries are 1x1
// tensors so gradients reach them.
ad::ComplexTensor layer_unitary(const ad::Tensor& gamma1, const ad::Tensor& gamma2,
                                const ad::ComplexTensor& h_c, const ad::ComplexTensor& h_t);

// Unitary Cayley transform (theta' - iI)(theta' + iI)^-1, theta' = theta + theta^dagger.
ad::ComplexTensor cayley(const ad::ComplexTensor& theta);

// Per-node qubit states from the encoder (rows of 4 reals read as
// (Re0, Im0, Re1, Im1)), Kronecker product in node order, then global
// normalization. Throws NumericalError if the product state has zero norm.
ad::ComplexTensor encode_state(const ad::Tensor& h, const Mlp& encoder);

// Mean of the 2^n amplitudes, a single complex scalar.
ad::ComplexTensor eqgnn_pool(const ad::ComplexTensor& psi);

// Statevector QGNN / EQGNN. The qubit count is fixed to the node count at
// construction; jets with any other node count are rejected.
class QuantumModel : public Model {
  public:
    QuantumModel(const ModelSpec& spec, bool equivariant_pool);
    std::string kind() const override { return equivariant_pool_ ? "eqgnn" : "qgnn"; }
    ad::Tensor forward(const FeaturedJet& jet) override;
    double score(const std::vector<double>& logits) const override;

    // Final state after the P layers, for norm-conservation checks.
    ad::ComplexTensor evolve(const FeaturedJet& jet);

    const ad::Tensor& gamma() const { return gamma_; }
    const std::vector<ad::ComplexTensor>& thetas() const { return thetas_; }
    const Mlp& encoder() const { return encoder_; }

  private:
    ad::Tensor head_logits(const ad::ComplexTensor& psi);

    std::size_t nodes_, dim_, layers_;
    bool equivariant_pool_;
    bool squared_modulus_;
    Mlp encoder_;
    ad::Tensor gamma_; // P x 2
    std::vector<ad::ComplexTensor> thetas_;
    std::size_t head_hidden_;
    ad::ComplexTensor head_w1_, head_b1_; // only when head_hidden_ > 0
    ad::ComplexTensor head_w_, head_b_;
    ad::ComplexTensor h_t_; // shared transverse term, cached
    ad::Activation act_;
};

} // namespace qjet
