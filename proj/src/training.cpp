#include "qjet/training.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

namespace qjet {

Adam::Adam(const std::vector<ParamRef>& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.count(), 0.0);
        v_.emplace_back(p.count(), 0.0);
    }
}

void Adam::step(std::vector<ParamRef>& params) {
    if (params.size() != m_.size())
        throw DimensionError("Adam::step: parameter list changed size");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& m = m_[p];
        auto& v = v_[p];
        if (params[p].count() != m.size())
            throw DimensionError("Adam::step: parameter '" + params[p].name +
                                 "' changed size");
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = params[p].grad(i);
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            params[p].add_to_value(i, -cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
        }
    }
}

ad::Tensor cross_entropy(const ad::Tensor& logits, int label) {
    return ad::softmax_cross_entropy(logits, label);
}

EvalResult evaluate(Model& model, const std::vector<FeaturedJet>& jets) {
    EvalResult out;
    out.scores.reserve(jets.size());
    out.labels.reserve(jets.size());
    double loss_sum = 0.0;
    for (const auto& jet : jets) {
        ad::Tensor logits = model.forward(jet);
        loss_sum += cross_entropy(logits, jet.label).item();
        out.scores.push_back(model.score(logits.values()));
        out.labels.push_back(jet.label);
    }
    out.loss = jets.empty() ? 0.0 : loss_sum / static_cast<double>(jets.size());
    out.acc = jets.empty() ? 0.0 : accuracy(out.scores, out.labels);
    return out;
}

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

EpochStats eval_epoch(Model& model, const DatasetSplit& data, double train_loss,
                      double train_acc) {
    EpochStats s;
    s.train_loss = train_loss;
    s.train_acc = train_acc;
    EvalResult val = evaluate(model, data.val);
    s.val_loss = val.loss;
    s.val_acc = val.acc;
    s.val_auc = roc_auc(val.scores, val.labels).second;
    return s;
}

} // namespace

TrainReport train_model(Model& model, const DatasetSplit& data, const TrainConfig& cfg) {
    if (data.train.empty() || data.val.empty() || data.test.empty())
        throw ValidationError("train_model: empty split");

    // Shuffling gets its own stream so a different init (same seed elsewhere)
    // cannot perturb the data order.
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Adam opt(model.params(), cfg.adam);

    TrainReport report;
    report.history.reserve(cfg.epochs + 1);

    {
        const double t0 = now_seconds();
        EvalResult init_train = evaluate(model, data.train);
        EpochStats s = eval_epoch(model, data, init_train.loss, init_train.acc);
        s.seconds = now_seconds() - t0;
        report.history.push_back(s);
        if (cfg.on_epoch) cfg.on_epoch(0, s);
    }

    bool have_snapshot = false;
    double best_auc = -1.0;

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double t0 = now_seconds();
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch);
            const double inv = 1.0 / static_cast<double>(stop - start);
            model.zero_grads();
            double batch_loss = 0.0;
            for (std::size_t k = start; k < stop; ++k) {
                const FeaturedJet& jet = data.train[order[k]];
                ad::Tensor logits = model.forward(jet);
                ad::Tensor loss = cross_entropy(logits, jet.label);
                batch_loss += loss.item();
                if ((model.score(logits.values()) >= 0.5 ? 1 : 0) == jet.label) ++correct;
                ad::backward(ad::mul_const(loss, inv));
            }
            batch_loss *= inv;
            if (!std::isfinite(batch_loss) || batch_loss > cfg.divergence_limit)
                throw NumericalError("train_model: diverged at epoch " +
                                     std::to_string(epoch) + " (batch loss " +
                                     std::to_string(batch_loss) + ")");
            loss_sum += batch_loss * static_cast<double>(stop - start);
            opt.step(model.params());
        }

        EpochStats s = eval_epoch(model, data,
                                  loss_sum / static_cast<double>(order.size()),
                                  static_cast<double>(correct) /
                                      static_cast<double>(order.size()));
        s.seconds = now_seconds() - t0;
        report.history.push_back(s);
        if (cfg.on_epoch) cfg.on_epoch(epoch, s);

        if (epoch >= cfg.checkpoint_start && s.val_auc > best_auc) {
            best_auc = s.val_auc;
            report.best_epoch = epoch;
            report.best_params = model.flatten();
            have_snapshot = true;
        }
    }

    if (!have_snapshot) {
        // No eligible epoch (epochs < checkpoint_start): keep the final state.
        report.best_epoch = cfg.epochs;
        report.best_params = model.flatten();
    }

    model.load(report.best_params);
    EvalResult test = evaluate(model, data.test);
    report.test_acc = test.acc;
    auto [roc, auc] = roc_auc(test.scores, test.labels);
    report.test_roc = std::move(roc);
    report.test_auc = auc;
    return report;
}

std::uint64_t TrainReport::digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t x) {
        for (int i = 0; i < 8; ++i) {
            h ^= (x >> (8 * i)) & 0xff;
            h *= 1099511628211ULL;
        }
    };
    auto mixd = [&](double d) { mix(std::bit_cast<std::uint64_t>(d)); };
    mix(history.size());
    for (const auto& s : history) {
        mixd(s.train_loss);
        mixd(s.val_loss);
        mixd(s.train_acc);
        mixd(s.val_acc);
        mixd(s.val_auc);
    }
    mix(best_epoch);
    mixd(test_acc);
    mixd(test_auc);
    for (double v : test_roc.fpr) mixd(v);
    for (double v : test_roc.tpr) mixd(v);
    for (double v : best_params) mixd(v);
    return h;
}

namespace {

constexpr char kCheckpointMagic[5] = {'Q', 'J', 'C', 'K', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put_u64(out, ck.config_hash);
    put_u64(out, ck.epoch);
    put_u64(out, ck.params.size());
    for (double v : ck.params) put_u64(out, std::bit_cast<std::uint64_t>(v));
    if (!out) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || !std::equal(magic, magic + 5, kCheckpointMagic))
        throw ValidationError("load_checkpoint: " + path + " is not a QJCK1 checkpoint");
    Checkpoint ck;
    ck.config_hash = get_u64(in);
    ck.epoch = get_u64(in);
    const std::uint64_t count = get_u64(in);
    ck.params.resize(count);
    for (double& v : ck.params) v = std::bit_cast<double>(get_u64(in));
    if (!in) throw ValidationError("load_checkpoint: truncated file " + path);
    return ck;
}

} // namespace qjet
