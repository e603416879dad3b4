#include "qjet/jet_data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

namespace qjet {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct MassEntry {
    int id;
    double mass; // GeV
};

// PDG 2022 values for the constituents of the quark/gluon jet sample.
constexpr MassEntry kMassTable[] = {
    {22, 0.0},            // photon
    {11, 0.00051099895},  // electron
    {13, 0.1056583755},   // muon
    {211, 0.13957039},    // charged pion
    {321, 0.493677},      // charged kaon
    {130, 0.497611},      // K_L
    {2212, 0.93827208816}, // proton
    {2112, 0.93956542052}, // neutron
};

} // namespace

double particle_mass(int pdg_id) {
    const int a = std::abs(pdg_id);
    for (const auto& e : kMassTable)
        if (e.id == a) return e.mass;
    throw LookupError("particle_mass: unknown PDG id " + std::to_string(pdg_id));
}

std::array<double, kFeatureCount> engineer_features(const RawParticle& p) {
    const double m = particle_mass(p.pdg_id);
    const double mt = std::sqrt(m * m + p.pt * p.pt);
    return {p.pt,
            p.y,
            p.phi,
            mt,
            mt * std::cosh(p.y),
            p.pt * std::cos(p.phi),
            p.pt * std::sin(p.phi),
            mt * std::sinh(p.y)};
}

double delta_r(double phi_i, double y_i, double phi_j, double y_j, bool wrap_phi) {
    double dphi = phi_i - phi_j;
    if (wrap_phi) dphi = std::remainder(dphi, 2.0 * kPi);
    const double dy = y_i - y_j;
    return std::sqrt(dphi * dphi + dy * dy);
}

FeaturedJet featurize(const JetRecord& jet, std::size_t nodes, bool wrap_phi) {
    if (jet.particles.size() < nodes)
        throw ContractViolation("featurize: jet has " + std::to_string(jet.particles.size()) +
                                " particles, need at least " + std::to_string(nodes));
    std::vector<std::size_t> idx(jet.particles.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return jet.particles[a].pt > jet.particles[b].pt;
    });

    FeaturedJet out;
    out.nodes = nodes;
    out.label = jet.label;
    out.h.resize(nodes * kFeatureCount);
    out.x.resize(nodes * 2);
    out.a.assign(nodes * nodes, 0.0);
    for (std::size_t i = 0; i < nodes; ++i) {
        const RawParticle& p = jet.particles[idx[i]];
        const auto f = engineer_features(p);
        std::copy(f.begin(), f.end(), out.h.begin() + i * kFeatureCount);
        out.x[i * 2 + 0] = p.phi;
        out.x[i * 2 + 1] = p.y;
    }
    for (std::size_t i = 0; i < nodes; ++i)
        for (std::size_t j = i + 1; j < nodes; ++j) {
            const double d = delta_r(out.x[i * 2], out.x[i * 2 + 1], out.x[j * 2],
                                     out.x[j * 2 + 1], wrap_phi);
            out.a[i * nodes + j] = d;
            out.a[j * nodes + i] = d;
        }
    return out;
}

namespace {

DatasetSplit select_scale_split(std::vector<FeaturedJet> pool, const DatasetConfig& cfg) {
    const std::size_t need = cfg.train_size + cfg.val_size + cfg.test_size;
    if (pool.size() < need)
        throw ValidationError("build_dataset: need " + std::to_string(need) +
                              " jets after selection, have " + std::to_string(pool.size()));

    std::mt19937_64 rng(cfg.seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(need);

    // Max-scale each feature column; the scope is the whole selection by
    // default, optionally the train portion only. A column whose maximum is
    // not a positive finite number is left unscaled.
    const std::size_t scope = cfg.scale_train_only ? cfg.train_size : need;
    std::array<double, kFeatureCount> colmax;
    colmax.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < scope; ++r)
        for (std::size_t i = 0; i < pool[r].nodes; ++i)
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                colmax[f] = std::max(colmax[f], pool[r].h[i * kFeatureCount + f]);
    for (double& m : colmax)
        if (!(m > 0.0) || !std::isfinite(m)) m = 1.0;
    for (auto& jet : pool)
        for (std::size_t i = 0; i < jet.nodes; ++i)
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                jet.h[i * kFeatureCount + f] /= colmax[f];

    DatasetSplit split;
    split.train.assign(pool.begin(), pool.begin() + cfg.train_size);
    split.val.assign(pool.begin() + cfg.train_size,
                     pool.begin() + cfg.train_size + cfg.val_size);
    split.test.assign(pool.begin() + cfg.train_size + cfg.val_size, pool.end());
    return split;
}

} // namespace

DatasetSplit build_dataset(const std::vector<JetRecord>& jets, const DatasetConfig& cfg) {
    if (cfg.nodes > cfg.min_particles)
        throw ValidationError("build_dataset: nodes > min_particles");
    std::vector<FeaturedJet> pool;
    pool.reserve(jets.size());
    for (const auto& jet : jets)
        if (jet.particles.size() >= cfg.min_particles)
            pool.push_back(featurize(jet, cfg.nodes, cfg.wrap_phi));
    return select_scale_split(std::move(pool), cfg);
}

DatasetSplit build_dataset(const std::vector<FeaturedJet>& featured, const DatasetConfig& cfg) {
    for (const auto& jet : featured)
        if (jet.nodes != cfg.nodes)
            throw ValidationError("build_dataset: cached node count " +
                                  std::to_string(jet.nodes) + " != configured " +
                                  std::to_string(cfg.nodes));
    return select_scale_split(featured, cfg);
}

std::vector<JetRecord> synth_jets(std::size_t n, std::uint64_t seed,
                                  const SynthParams& params) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> axis_phi(-1.6, 1.6);
    std::uniform_real_distribution<double> axis_y(-1.2, 1.2);
    std::uniform_int_distribution<std::size_t> multiplicity(params.min_particles,
                                                            params.max_particles);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    std::exponential_distribution<double> unit_exp(1.0);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    // Charged pions dominate; the rest folds in photons, kaons and baryons.
    const int species[] = {211, -211, 22, 321, -321, 130, 2212, 2112, -2212, -2112, 11, 13};
    const double weights[] = {0.28, 0.28, 0.20, 0.05, 0.05, 0.04, 0.03, 0.03, 0.01, 0.01, 0.01, 0.01};

    std::vector<JetRecord> jets;
    jets.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        JetRecord jet;
        jet.label = static_cast<int>(k % 2); // 1 = quark-like
        const bool quark = jet.label == 1;
        const double spread = quark ? params.quark_spread : params.gluon_spread;
        const double pt_scale = quark ? params.quark_pt_scale : params.gluon_pt_scale;
        const double phi0 = axis_phi(rng);
        const double y0 = axis_y(rng);
        const std::size_t m = multiplicity(rng);
        jet.particles.resize(m);
        for (auto& p : jet.particles) {
            const double dphi = std::clamp(unit_normal(rng) * spread, -1.4, 1.4);
            const double dy = std::clamp(unit_normal(rng) * spread, -1.4, 1.4);
            p.phi = phi0 + dphi;
            p.y = y0 + dy;
            p.pt = 1.0 + pt_scale * unit_exp(rng);
            double u = unif01(rng);
            p.pdg_id = species[0];
            for (std::size_t s = 0; s < std::size(species); ++s) {
                if (u < weights[s]) {
                    p.pdg_id = species[s];
                    break;
                }
                u -= weights[s];
            }
        }
        jets.push_back(std::move(jet));
    }
    return jets;
}

// ---- files -------------------------------------------------------------------

std::vector<JetRecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_jsonl: cannot open " + path);
    std::vector<JetRecord> jets;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("read_jsonl: line " + std::to_string(lineno) + ": " +
                                  e.what());
        }
        try {
            JetRecord jet;
            jet.label = j.at("label").get<int>();
            if (jet.label != 0 && jet.label != 1)
                throw ValidationError("label must be 0 or 1");
            for (const auto& pj : j.at("particles")) {
                RawParticle p;
                p.pt = pj.at("pt").get<double>();
                p.y = pj.at("y").get<double>();
                p.phi = pj.at("phi").get<double>();
                p.pdg_id = pj.at("pdgid").get<int>();
                if (!(p.pt > 0.0)) throw ValidationError("pt must be positive");
                if (!(p.phi > -kPi - 1e-9 && p.phi <= kPi + 1e-9))
                    throw ValidationError("phi outside (-pi, pi]");
                jet.particles.push_back(p);
            }
            if (jet.particles.empty()) throw ValidationError("empty particle list");
            jets.push_back(std::move(jet));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("read_jsonl: line " + std::to_string(lineno) + ": " +
                                  e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("read_jsonl: line " + std::to_string(lineno) + ": " +
                                  e.what());
        }
    }
    return jets;
}

void write_jsonl(const std::string& path, const std::vector<JetRecord>& jets) {
    std::ofstream out(path);
    if (!out) throw IoError("write_jsonl: cannot open " + path + " for writing");
    for (const auto& jet : jets) {
        nlohmann::json j;
        j["label"] = jet.label;
        auto& arr = j["particles"] = nlohmann::json::array();
        for (const auto& p : jet.particles)
            arr.push_back({{"pt", p.pt}, {"y", p.y}, {"phi", p.phi}, {"pdgid", p.pdg_id}});
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write_jsonl: write failed for " + path);
}

namespace {

constexpr char kCacheMagic[5] = {'Q', 'J', 'E', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void put_f64(std::ostream& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

} // namespace

void write_cache(const std::string& path, const std::vector<FeaturedJet>& records,
                 bool scaled) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_cache: cannot open " + path + " for writing");
    out.write(kCacheMagic, sizeof(kCacheMagic));
    out.put(scaled ? 1 : 0);
    const std::uint64_t nodes = records.empty() ? 3 : records.front().nodes;
    put_u64(out, nodes);
    put_u64(out, records.size());
    for (const auto& r : records) {
        if (r.nodes != nodes)
            throw ContractViolation("write_cache: mixed node counts");
        out.put(static_cast<char>(r.label));
        for (double v : r.h) put_f64(out, v);
        for (double v : r.x) put_f64(out, v);
        for (double v : r.a) put_f64(out, v);
    }
    if (!out) throw IoError("write_cache: write failed for " + path);
}

std::vector<FeaturedJet> read_cache(const std::string& path, bool* scaled_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_cache: cannot open " + path);
    char magic[5];
    in.read(magic, 5);
    if (!in || !std::equal(magic, magic + 5, kCacheMagic))
        throw ValidationError("read_cache: " + path + " is not a QJET1 cache");
    const int scaled = in.get();
    const std::uint64_t nodes = get_u64(in);
    const std::uint64_t count = get_u64(in);
    if (scaled_out) *scaled_out = scaled != 0;
    std::vector<FeaturedJet> records;
    records.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) {
        FeaturedJet r;
        r.nodes = nodes;
        r.label = in.get();
        r.h.resize(nodes * kFeatureCount);
        r.x.resize(nodes * 2);
        r.a.resize(nodes * nodes);
        for (double& v : r.h) v = get_f64(in);
        for (double& v : r.x) v = get_f64(in);
        for (double& v : r.a) v = get_f64(in);
        if (!in) throw ValidationError("read_cache: truncated file " + path);
        records.push_back(std::move(r));
    }
    return records;
}

bool is_cache_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    char magic[5];
    in.read(magic, 5);
    return in && std::equal(magic, magic + 5, kCacheMagic);
}

} // namespace qjet
