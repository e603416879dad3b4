#include "qjet/classical_models.hpp"

#include <cmath>

namespace qjet {

namespace {

using ad::Tensor;

void check_edge_matrix(const std::vector<double>& a, std::size_t n, const char* op) {
    if (a.size() != n * n)
        throw DimensionError(std::string(op) + ": edge matrix size " +
                             std::to_string(a.size()) + " != n^2");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            if (a[i * n + j] != a[j * n + i])
                throw ContractViolation(std::string(op) + ": edge matrix not symmetric");
}

// Rows of per-node features for quick slicing.
std::vector<Tensor> node_rows(const Tensor& h) {
    std::vector<Tensor> rows;
    rows.reserve(h.rows());
    for (std::size_t i = 0; i < h.rows(); ++i) rows.push_back(ad::slice_rows(h, i, i + 1));
    return rows;
}

} // namespace

double egnn_coord_coefficient(std::size_t nodes) {
    return 1.0 / std::log(2.0 * static_cast<double>(nodes));
}

ad::Tensor gnn_layer(const ad::Tensor& h, const std::vector<double>& a,
                     const GnnLayerParams& params) {
    const std::size_t n = h.rows();
    check_edge_matrix(a, n, "gnn_layer");
    auto rows = node_rows(h);

    // All ordered pairs (i, j), i != j, batched through phi_e.
    std::vector<Tensor> edge_inputs;
    edge_inputs.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            edge_inputs.push_back(
                ad::concat_cols({rows[i], rows[j], Tensor::scalar(a[i * n + j])}));
        }
    Tensor messages = params.edge_mlp.forward(ad::concat_rows(edge_inputs));

    std::vector<Tensor> node_inputs;
    node_inputs.reserve(n);
    std::size_t e = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor m_i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            Tensor m_ij = ad::slice_rows(messages, e, e + 1);
            m_i = m_i.defined() ? ad::add(m_i, m_ij) : m_ij;
            ++e;
        }
        node_inputs.push_back(ad::concat_cols({rows[i], m_i}));
    }
    return params.node_mlp.forward(ad::concat_rows(node_inputs));
}

std::pair<ad::Tensor, ad::Tensor> egnn_layer(const ad::Tensor& h, const ad::Tensor& x,
                                             const std::vector<double>& a,
                                             const EgnnLayerParams& params) {
    const std::size_t n = h.rows();
    check_edge_matrix(a, n, "egnn_layer");
    if (x.rows() != n || x.cols() != 2)
        throw DimensionError("egnn_layer: coordinates must be n x 2");
    auto rows = node_rows(h);
    auto xrows = node_rows(x);
    const double c = egnn_coord_coefficient(n);

    std::vector<Tensor> edge_inputs;
    std::vector<Tensor> diffs; // x_i - x_j per ordered pair
    edge_inputs.reserve(n * (n - 1));
    diffs.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            Tensor diff = ad::sub(xrows[i], xrows[j]);
            Tensor dist = ad::sqrt_elem(ad::sum_all(ad::mul(diff, diff)));
            edge_inputs.push_back(ad::concat_cols(
                {rows[i], rows[j], Tensor::scalar(a[i * n + j]), dist}));
            diffs.push_back(std::move(diff));
        }
    Tensor messages = params.edge_mlp.forward(ad::concat_rows(edge_inputs));
    Tensor edge_scales = params.coord_mlp.forward(messages); // one scalar per edge

    std::vector<Tensor> node_inputs;
    std::vector<Tensor> new_coords;
    node_inputs.reserve(n);
    new_coords.reserve(n);
    std::size_t e = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Tensor m_i;
        Tensor shift;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            Tensor m_ij = ad::slice_rows(messages, e, e + 1);
            m_i = m_i.defined() ? ad::add(m_i, m_ij) : m_ij;
            Tensor weighted = ad::mul_scalar(diffs[e], ad::slice_rows(edge_scales, e, e + 1));
            shift = shift.defined() ? ad::add(shift, weighted) : weighted;
            ++e;
        }
        node_inputs.push_back(ad::concat_cols({rows[i], m_i}));
        new_coords.push_back(ad::add(xrows[i], ad::mul_const(shift, c)));
    }
    Tensor h_next = params.node_mlp.forward(ad::concat_rows(node_inputs));
    return {h_next, ad::concat_rows(new_coords)};
}

ad::Tensor mean_pool(const ad::Tensor& h) {
    if (h.rows() == 0) throw DimensionError("mean_pool: empty input");
    return ad::mean_axis(h, 0);
}

double softmax_class1(const std::vector<double>& logits) {
    // 1 / (1 + exp(l0 - l1)), stable for large gaps.
    const double d = logits[0] - logits[1];
    if (d >= 0) {
        const double e = std::exp(-d);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(d));
}

namespace {

std::vector<double> jet_features(const FeaturedJet& jet) { return jet.h; }

} // namespace

GnnModel::GnnModel(const ModelSpec& spec) : nodes_(spec.nodes), hidden_(spec.hidden) {
    std::mt19937_64 rng(spec.seed);
    std::size_t width = kFeatureCount;
    for (std::size_t l = 0; l < spec.layers; ++l) {
        GnnLayerParams layer;
        layer.edge_mlp = Mlp(2 * width + 1, hidden_, hidden_, spec.act, rng);
        layer.node_mlp = Mlp(width + hidden_, hidden_, hidden_, spec.act, rng);
        const std::string prefix = "layer" + std::to_string(l);
        layer.edge_mlp.collect(prefix + ".edge", params_);
        layer.node_mlp.collect(prefix + ".node", params_);
        layers_.push_back(std::move(layer));
        width = hidden_;
    }
    head_ = Mlp(width, hidden_, 2, spec.act, rng);
    head_.collect("head", params_);
}

ad::Tensor GnnModel::forward(const FeaturedJet& jet) {
    if (jet.nodes != nodes_)
        throw DimensionError("GnnModel::forward: jet has " + std::to_string(jet.nodes) +
                             " nodes, model expects " + std::to_string(nodes_));
    Tensor h = Tensor::leaf({jet.nodes, kFeatureCount}, jet_features(jet));
    for (const auto& layer : layers_) h = gnn_layer(h, jet.a, layer);
    return head_.forward(mean_pool(h));
}

double GnnModel::score(const std::vector<double>& logits) const {
    return softmax_class1(logits);
}

EgnnModel::EgnnModel(const ModelSpec& spec) : nodes_(spec.nodes), hidden_(spec.hidden) {
    std::mt19937_64 rng(spec.seed);
    std::size_t width = kFeatureCount;
    for (std::size_t l = 0; l < spec.layers; ++l) {
        EgnnLayerParams layer;
        layer.edge_mlp = Mlp(2 * width + 2, hidden_, hidden_, spec.act, rng);
        layer.node_mlp = Mlp(width + hidden_, hidden_, hidden_, spec.act, rng);
        layer.coord_mlp = Mlp(hidden_, hidden_, 1, spec.act, rng);
        const std::string prefix = "layer" + std::to_string(l);
        layer.edge_mlp.collect(prefix + ".edge", params_);
        layer.node_mlp.collect(prefix + ".node", params_);
        layer.coord_mlp.collect(prefix + ".coord", params_);
        layers_.push_back(std::move(layer));
        width = hidden_;
    }
    head_ = Mlp(width, hidden_, 2, spec.act, rng);
    head_.collect("head", params_);
}

ad::Tensor EgnnModel::forward(const FeaturedJet& jet) {
    if (jet.nodes != nodes_)
        throw DimensionError("EgnnModel::forward: jet has " + std::to_string(jet.nodes) +
                             " nodes, model expects " + std::to_string(nodes_));
    Tensor h = Tensor::leaf({jet.nodes, kFeatureCount}, jet_features(jet));
    Tensor x = Tensor::leaf({jet.nodes, 2}, jet.x);
    for (const auto& layer : layers_) {
        auto [h_next, x_next] = egnn_layer(h, x, jet.a, layer);
        h = h_next;
        x = x_next;
    }
    return head_.forward(mean_pool(h));
}

double EgnnModel::score(const std::vector<double>& logits) const {
    return softmax_class1(logits);
}

} // namespace qjet
