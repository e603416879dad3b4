#include "qjet/model.hpp"

#include <cmath>

#include "qjet/classical_models.hpp"
#include "qjet/quantum_models.hpp"

namespace qjet {

std::size_t ParamRef::count() const {
    return is_complex() ? 2 * cplx.size() : real.size();
}

double ParamRef::value(std::size_t i) const {
    if (!is_complex()) return real.values()[i];
    const std::size_t n = cplx.size();
    return i < n ? cplx.real_values()[i] : cplx.imag_values()[i - n];
}

double ParamRef::grad(std::size_t i) const {
    if (!is_complex()) return real.has_grad() ? real.grad()[i] : 0.0;
    if (!cplx.has_grad()) return 0.0;
    const std::size_t n = cplx.size();
    return i < n ? cplx.grad_re()[i] : cplx.grad_im()[i - n];
}

void ParamRef::set_value(std::size_t i, double v) {
    if (!is_complex()) {
        real.values_mut()[i] = v;
        return;
    }
    const std::size_t n = cplx.size();
    if (i < n) cplx.real_values_mut()[i] = v;
    else cplx.imag_values_mut()[i - n] = v;
}

void ParamRef::add_to_value(std::size_t i, double delta) {
    set_value(i, value(i) + delta);
}

void ParamRef::zero_grad() {
    if (is_complex()) cplx.zero_grad();
    else real.zero_grad();
}

ad::Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(rows * cols);
    for (double& x : v) x = dist(rng);
    return ad::Tensor::leaf({rows, cols}, std::move(v), true);
}

Mlp::Mlp(std::size_t in, std::size_t hidden, std::size_t out, ad::Activation act,
         std::mt19937_64& rng)
    : act(act) {
    w1 = glorot_uniform(in, hidden, rng);
    b1 = ad::Tensor::zeros({1, hidden}, true);
    w2 = glorot_uniform(hidden, out, rng);
    b2 = ad::Tensor::zeros({1, out}, true);
}

ad::Tensor Mlp::forward(const ad::Tensor& x) const {
    ad::Tensor hid = ad::activation(ad::add_rowvec(ad::matmul(x, w1), b1), act);
    return ad::add_rowvec(ad::matmul(hid, w2), b2);
}

void Mlp::collect(const std::string& prefix, std::vector<ParamRef>& out) const {
    out.push_back({prefix + ".w1", w1, {}});
    out.push_back({prefix + ".b1", b1, {}});
    out.push_back({prefix + ".w2", w2, {}});
    out.push_back({prefix + ".b2", b2, {}});
}

std::size_t Model::param_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.count();
    return total;
}

std::vector<double> Model::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& p : params_)
        for (std::size_t i = 0; i < p.count(); ++i) flat.push_back(p.value(i));
    return flat;
}

void Model::load(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw DimensionError("Model::load: expected " + std::to_string(param_count()) +
                             " scalars, got " + std::to_string(flat.size()));
    std::size_t off = 0;
    for (auto& p : params_)
        for (std::size_t i = 0; i < p.count(); ++i) p.set_value(i, flat[off++]);
}

void Model::zero_grads() {
    for (auto& p : params_) p.zero_grad();
}

std::unique_ptr<Model> make_model(const ModelSpec& spec) {
    if (spec.kind == "gnn") return std::make_unique<GnnModel>(spec);
    if (spec.kind == "egnn") return std::make_unique<EgnnModel>(spec);
    if (spec.kind == "qgnn") return std::make_unique<QuantumModel>(spec, false);
    if (spec.kind == "eqgnn") return std::make_unique<QuantumModel>(spec, true);
    throw ValidationError("make_model: unknown model kind '" + spec.kind + "'");
}

} // namespace qjet
