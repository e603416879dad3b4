#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "qjet/jet_data.hpp"
#include "qjet/tensor.hpp"

namespace qjet {

// A named trainable leaf, real or complex. Complex parameters expose their
// re and im planes as independent real scalars (re block first), which is
// also the flattening order in checkpoints.
struct ParamRef {
    std::string name;
    ad::Tensor real;
    ad::ComplexTensor cplx;

    bool is_complex() const { return cplx.defined(); }
    std::size_t count() const;
    double value(std::size_t i) const;
    double grad(std::size_t i) const; // 0.0 before any backward pass
    void set_value(std::size_t i, double v);
    void add_to_value(std::size_t i, double delta);
    void zero_grad();
};

// Two-layer perceptron: affine -> activation -> affine. Weights start
// uniform in +-sqrt(6 / (fan_in + fan_out)), biases at zero.
struct Mlp {
    ad::Tensor w1, b1, w2, b2; // w1: in x hidden, w2: hidden x out
    ad::Activation act = ad::Activation::Softplus;

    Mlp() = default;
    Mlp(std::size_t in, std::size_t hidden, std::size_t out, ad::Activation act,
        std::mt19937_64& rng);

    // x: rows of inputs (r x in) -> (r x out)
    ad::Tensor forward(const ad::Tensor& x) const;
    void collect(const std::string& prefix, std::vector<ParamRef>& out) const;
};

ad::Tensor glorot_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

class Model {
  public:
    virtual ~Model() = default;
    virtual std::string kind() const = 0;
    // Logits for one jet (size-2 tensor attached to a fresh graph).
    virtual ad::Tensor forward(const FeaturedJet& jet) = 0;
    // Class-1 score in [0, 1] derived from logit values, used for ROC/acc.
    virtual double score(const std::vector<double>& logits) const = 0;

    std::vector<ParamRef>& params() { return params_; }
    const std::vector<ParamRef>& params() const { return params_; }
    std::size_t param_count() const; // total trainable scalars |Theta|
    std::vector<double> flatten() const;
    void load(const std::vector<double>& flat);
    void zero_grads();

  protected:
    std::vector<ParamRef> params_;
};

struct ModelSpec {
    std::string kind; // gnn | egnn | qgnn | eqgnn
    std::size_t hidden = 10;
    std::size_t layers = 5;
    std::size_t nodes = 3;
    std::size_t encoder_hidden = 32;
    std::size_t head_hidden = 0;
    ad::Activation act = ad::Activation::Softplus;
    bool squared_modulus = false;
    std::uint64_t seed = 1;
};

std::unique_ptr<Model> make_model(const ModelSpec& spec);

} // namespace qjet
