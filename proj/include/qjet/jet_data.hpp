#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qjet/errors.hpp"

namespace qjet {

// One jet constituent as read from the input stream.
struct RawParticle {
    double pt = 0.0;  // GeV
    double y = 0.0;   // rapidity
    double phi = 0.0; // radians, (-pi, pi]
    int pdg_id = 0;
};

struct JetRecord {
    std::vector<RawParticle> particles;
    int label = 0; // 0 = gluon, 1 = quark
};

// A jet reduced to its `nodes` leading-pT constituents with engineered
// features. Feature columns: pT, y, phi, m_T, E, p_x, p_y, p_z. Rows are
// ordered by descending pre-scaling pT. `x` holds the raw (phi, y)
// coordinates, `a` the pairwise Delta-R matrix built from them.
struct FeaturedJet {
    std::size_t nodes = 0;
    std::vector<double> h; // nodes x 8
    std::vector<double> x; // nodes x 2
    std::vector<double> a; // nodes x nodes, symmetric, zero diagonal
    int label = 0;
};

struct DatasetSplit {
    std::vector<FeaturedJet> train, val, test;
};

struct DatasetConfig {
    std::size_t train_size = 10000;
    std::size_t val_size = 1250;
    std::size_t test_size = 1250;
    std::size_t min_particles = 10;
    std::size_t nodes = 3;
    bool scale_train_only = false; // restrict max-scaling to the train portion
    bool wrap_phi = false;         // wrap the azimuthal difference into [-pi, pi]
    std::uint64_t seed = 1;
};

constexpr std::size_t kFeatureCount = 8;

// Rest mass in GeV for the embedded table (photon, e, mu, pi, K, K_L, p, n
// and antiparticles via |id|). Unknown ids throw LookupError.
double particle_mass(int pdg_id);

// (pT, y, phi, m_T, E, p_x, p_y, p_z), unscaled.
std::array<double, kFeatureCount> engineer_features(const RawParticle& p);

double delta_r(double phi_i, double y_i, double phi_j, double y_j, bool wrap_phi = false);

// Truncate to the `nodes` leading-pT particles (stable tie-break on input
// order) and engineer unscaled features. The jet must have at least `nodes`
// particles.
FeaturedJet featurize(const JetRecord& jet, std::size_t nodes, bool wrap_phi = false);

// Drop short jets, featurize, shuffle (seeded), max-scale the feature
// columns, split sequentially into train/val/test.
DatasetSplit build_dataset(const std::vector<JetRecord>& jets, const DatasetConfig& cfg);

// Same pipeline starting from pre-featurized (unscaled) records, e.g. a cache.
DatasetSplit build_dataset(const std::vector<FeaturedJet>& featured, const DatasetConfig& cfg);

struct SynthParams {
    double quark_spread = 0.08; // angular std dev around the jet axis
    double gluon_spread = 0.40;
    double quark_pt_scale = 90.0; // exponential constituent-pT scale, GeV
    double gluon_pt_scale = 25.0;
    std::size_t min_particles = 10;
    std::size_t max_particles = 28;
};

// Deterministic two-class toy generator: gluon-like jets get a wider angular
// spread and a softer constituent-pT spectrum, so the classes are separable.
std::vector<JetRecord> synth_jets(std::size_t n, std::uint64_t seed,
                                  const SynthParams& params = {});

// ---- files -----------------------------------------------------------------

// JSON-lines: {"label":0|1,"particles":[{"pt":..,"y":..,"phi":..,"pdgid":..},..]}
std::vector<JetRecord> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<JetRecord>& jets);

// Versioned binary cache of FeaturedJet records, magic "QJET1",
// little-endian doubles. `scaled` records whether h was max-scaled.
void write_cache(const std::string& path, const std::vector<FeaturedJet>& records, bool scaled);
std::vector<FeaturedJet> read_cache(const std::string& path, bool* scaled_out = nullptr);

bool is_cache_file(const std::string& path);

} // namespace qjet
