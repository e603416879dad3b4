#pragma once

#include "qjet/model.hpp"

namespace qjet {

// Message-passing layer: m_ij = phi_e(h_i, h_j, a_ij [, |x_i - x_j|]),
// m_i = sum_{j != i} m_ij, h_i' = phi_h(h_i, m_i). The graph is complete.
struct GnnLayerParams {
    Mlp edge_mlp; // phi_e
    Mlp node_mlp; // phi_h
};

struct EgnnLayerParams {
    Mlp edge_mlp;  // phi_e, also sees |x_i - x_j|
    Mlp node_mlp;  // phi_h
    Mlp coord_mlp; // phi_x: one scalar per edge
};

ad::Tensor gnn_layer(const ad::Tensor& h, const std::vector<double>& a,
                     const GnnLayerParams& params);

// Returns (h', x'). Coordinates update as
//   x_i' = x_i + C sum_{j != i} (x_i - x_j) phi_x(m_ij),  C = 1 / ln(2n).
std::pair<ad::Tensor, ad::Tensor> egnn_layer(const ad::Tensor& h, const ad::Tensor& x,
                                             const std::vector<double>& a,
                                             const EgnnLayerParams& params);

double egnn_coord_coefficient(std::size_t nodes); // 1 / ln(2n)

ad::Tensor mean_pool(const ad::Tensor& h); // column means, 1 x k

class GnnModel : public Model {
  public:
    GnnModel(const ModelSpec& spec);
    std::string kind() const override { return "gnn"; }
    ad::Tensor forward(const FeaturedJet& jet) override;
    double score(const std::vector<double>& logits) const override;

    const std::vector<GnnLayerParams>& layers() const { return layers_; }
    const Mlp& head() const { return head_; }

  private:
    std::size_t nodes_, hidden_;
    std::vector<GnnLayerParams> layers_;
    Mlp head_;
};

class EgnnModel : public Model {
  public:
    EgnnModel(const ModelSpec& spec);
    std::string kind() const override { return "egnn"; }
    ad::Tensor forward(const FeaturedJet& jet) override;
    double score(const std::vector<double>& logits) const override;

    const std::vector<EgnnLayerParams>& layers() const { return layers_; }

  private:
    std::size_t nodes_, hidden_;
    std::vector<EgnnLayerParams> layers_;
    Mlp head_;
};

// Softmax probability of class 1 from two logits.
double softmax_class1(const std::vector<double>& logits);

} // namespace qjet
