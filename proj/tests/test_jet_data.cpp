#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "qjet/jet_data.hpp"
#include "testutil.hpp"

using namespace qjet;

namespace {

const double kPi = 3.14159265358979323846;

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/qjet_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

JetRecord make_jet(int label, std::size_t particles, double pt0 = 50.0) {
    JetRecord jet;
    jet.label = label;
    for (std::size_t i = 0; i < particles; ++i) {
        RawParticle p;
        p.pt = pt0 - static_cast<double>(i);
        p.y = 0.1 * static_cast<double>(i % 5) - 0.15;
        p.phi = 0.15 * static_cast<double>(i % 7) - 0.1;
        p.pdg_id = (i % 2 == 0) ? 211 : 22;
        jet.particles.push_back(p);
    }
    return jet;
}

} // namespace

TEST_CASE("particle mass table") {
    CHECK(particle_mass(22) == doctest::Approx(0.0));
    CHECK(particle_mass(211) == doctest::Approx(0.13957).epsilon(1e-4));
    CHECK(particle_mass(-211) == doctest::Approx(0.13957).epsilon(1e-4));
    CHECK(particle_mass(2212) == doctest::Approx(0.93827).epsilon(1e-4));
    CHECK(particle_mass(130) == doctest::Approx(0.497611));
    CHECK(particle_mass(-11) == particle_mass(11));
    CHECK(testutil::throws_with<LookupError>([] { particle_mass(12345); }, "12345"));
}

TEST_CASE("engineer_features hand and oracle values") {
    // massless particle at rest rapidity
    RawParticle simple{1.0, 0.0, 0.0, 22};
    auto f = engineer_features(simple);
    CHECK(f[0] == doctest::Approx(1.0));
    CHECK(f[3] == doctest::Approx(1.0)); // m_T
    CHECK(f[4] == doctest::Approx(1.0)); // E = m_T cosh 0
    CHECK(f[5] == doctest::Approx(1.0)); // p_x
    CHECK(f[6] == doctest::Approx(0.0)); // p_y
    CHECK(f[7] == doctest::Approx(0.0)); // p_z

    // charged pion, pT = 100, y = 0.5, phi = pi/2; expected values frozen
    // from a 40-digit independent evaluation
    RawParticle pion{100.0, 0.5, kPi / 2, 211};
    auto g = engineer_features(pion);
    CHECK(g[3] == doctest::Approx(100.00009739942139).epsilon(1e-12));
    CHECK(g[4] == doctest::Approx(112.76270635075463).epsilon(1e-12));
    CHECK(std::abs(g[5]) < 1e-12);
    CHECK(g[6] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(g[7] == doctest::Approx(52.10958130375598).epsilon(1e-12));
}

TEST_CASE("mass-shell identity holds for random particles") {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> pt(0.1, 600.0);
    std::uniform_real_distribution<double> y(-2.0, 2.0);
    std::uniform_real_distribution<double> phi(-kPi + 1e-6, kPi);
    const int ids[] = {22, 11, -11, 13, -13, 211, -211, 321, -321, 130, 2212, -2212, 2112};
    for (int i = 0; i < 2000; ++i) {
        RawParticle p{pt(rng), y(rng), phi(rng), ids[i % std::size(ids)]};
        auto f = engineer_features(p);
        const double m = particle_mass(p.pdg_id);
        const double lhs = f[4] * f[4] - (f[5] * f[5] + f[6] * f[6] + f[7] * f[7]);
        const double scale = std::max(1.0, f[4] * f[4]);
        CHECK(std::abs(lhs - m * m) / scale <= 1e-9);
    }
}

TEST_CASE("delta_r basics") {
    CHECK(delta_r(0.3, 0.2, 0.3, 0.2) == doctest::Approx(0.0));
    CHECK(delta_r(0.3, 0.4, 0.0, 0.0) == doctest::Approx(0.5)); // 3-4-5
    std::mt19937_64 rng(52);
    std::uniform_real_distribution<double> c(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double p1 = c(rng), y1 = c(rng), p2 = c(rng), y2 = c(rng);
        CHECK(delta_r(p1, y1, p2, y2) == doctest::Approx(delta_r(p2, y2, p1, y1)));
        CHECK(delta_r(p1, y1, p2, y2) >= 0.0);
    }
    // no wrap-around by default; optional wrap folds the azimuthal gap
    CHECK(delta_r(3.0, 0.0, -3.0, 0.0) == doctest::Approx(6.0));
    CHECK(delta_r(3.0, 0.0, -3.0, 0.0, true) == doctest::Approx(2 * kPi - 6.0));
}

TEST_CASE("featurize keeps the top-3 pT particles in stable order") {
    JetRecord jet = make_jet(1, 12);
    // shuffle particle order, then check against a sort oracle
    std::mt19937_64 rng(53);
    std::shuffle(jet.particles.begin(), jet.particles.end(), rng);
    FeaturedJet f = featurize(jet, 3);
    std::vector<double> pts;
    for (const auto& p : jet.particles) pts.push_back(p.pt);
    std::sort(pts.rbegin(), pts.rend());
    CHECK(f.h[0 * kFeatureCount + 0] == doctest::Approx(pts[0]));
    CHECK(f.h[1 * kFeatureCount + 0] == doctest::Approx(pts[1]));
    CHECK(f.h[2 * kFeatureCount + 0] == doctest::Approx(pts[2]));

    // pT ties break on the original index (stable)
    JetRecord tied;
    tied.label = 0;
    for (int i = 0; i < 10; ++i)
        tied.particles.push_back({7.0, 0.01 * i, 0.0, 22});
    FeaturedJet tf = featurize(tied, 3);
    CHECK(tf.h[0 * kFeatureCount + 1] == doctest::Approx(0.0));
    CHECK(tf.h[1 * kFeatureCount + 1] == doctest::Approx(0.01));
    CHECK(tf.h[2 * kFeatureCount + 1] == doctest::Approx(0.02));

    // a is symmetric, nonnegative, zero-diagonal
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(f.a[i * 3 + i] == 0.0);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(f.a[i * 3 + j] == f.a[j * 3 + i]);
            CHECK(f.a[i * 3 + j] >= 0.0);
        }
    }
}

TEST_CASE("build_dataset scales, splits and reproduces deterministically") {
    std::vector<JetRecord> jets;
    for (int i = 0; i < 60; ++i) jets.push_back(make_jet(i % 2, 10 + i % 6, 40.0 + i));
    jets.push_back(make_jet(0, 9)); // must be excluded

    DatasetConfig cfg;
    cfg.train_size = 40;
    cfg.val_size = 10;
    cfg.test_size = 8;
    cfg.seed = 99;
    DatasetSplit split = build_dataset(jets, cfg);
    CHECK(split.train.size() == 40);
    CHECK(split.val.size() == 10);
    CHECK(split.test.size() == 8);

    // every feature column's max over the selection is exactly 1
    double colmax[kFeatureCount];
    std::fill(colmax, colmax + kFeatureCount, -1e300);
    auto scan = [&](const std::vector<FeaturedJet>& js) {
        for (const auto& j : js)
            for (std::size_t i = 0; i < j.nodes; ++i)
                for (std::size_t f = 0; f < kFeatureCount; ++f)
                    colmax[f] = std::max(colmax[f], j.h[i * kFeatureCount + f]);
    };
    scan(split.train);
    scan(split.val);
    scan(split.test);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        CHECK(colmax[f] == doctest::Approx(1.0).epsilon(1e-12));

    // identical seed -> identical split; different seed -> different order
    DatasetSplit again = build_dataset(jets, cfg);
    CHECK(again.train[0].h == split.train[0].h);
    CHECK(again.test[7].h == split.test[7].h);

    cfg.seed = 100;
    DatasetSplit other = build_dataset(jets, cfg);
    bool any_diff = false;
    for (std::size_t k = 0; k < split.train.size() && !any_diff; ++k)
        any_diff = other.train[k].h != split.train[k].h;
    CHECK(any_diff);

    // too few jets -> size error naming counts
    cfg.train_size = 1000;
    CHECK_THROWS_AS(build_dataset(jets, cfg), ValidationError);
}

TEST_CASE("synth_jets is deterministic and carries a class margin") {
    auto a = synth_jets(1000, 42);
    auto b = synth_jets(1000, 42);
    REQUIRE(a.size() == 1000);
    bool labels[2] = {false, false};
    for (const auto& jet : a) labels[jet.label] = true;
    CHECK(labels[0]);
    CHECK(labels[1]);
    // determinism, byte-for-byte
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].particles.size() == b[i].particles.size());
        CHECK(a[i].label == b[i].label);
        for (std::size_t j = 0; j < a[i].particles.size(); ++j) {
            CHECK(a[i].particles[j].pt == b[i].particles[j].pt);
            CHECK(a[i].particles[j].phi == b[i].particles[j].phi);
            CHECK(a[i].particles[j].y == b[i].particles[j].y);
            CHECK(a[i].particles[j].pdg_id == b[i].particles[j].pdg_id);
        }
    }

    // class-conditional mean Delta-R over the 3 leading particles
    double mean_dr[2] = {0.0, 0.0};
    std::size_t count[2] = {0, 0};
    for (const auto& jet : a) {
        FeaturedJet f = featurize(jet, 3);
        double dr = (f.a[1] + f.a[2] + f.a[5]) / 3.0;
        mean_dr[jet.label] += dr;
        ++count[jet.label];
    }
    mean_dr[0] /= static_cast<double>(count[0]);
    mean_dr[1] /= static_cast<double>(count[1]);
    CHECK(mean_dr[0] - mean_dr[1] > 0.1); // gluon-like class is wider

    // invariants of the generator output
    for (const auto& jet : a) {
        CHECK(jet.particles.size() >= 10);
        for (const auto& p : jet.particles) {
            CHECK(p.pt > 0.0);
            CHECK(p.phi > -kPi);
            CHECK(p.phi <= kPi);
            CHECK_NOTHROW(particle_mass(p.pdg_id));
        }
    }
}

TEST_CASE("jsonl round trip and malformed-line reporting") {
    TempFile file("jets.jsonl");
    auto jets = synth_jets(20, 5);
    write_jsonl(file.path, jets);
    auto parsed = read_jsonl(file.path);
    REQUIRE(parsed.size() == jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) {
        CHECK(parsed[i].label == jets[i].label);
        REQUIRE(parsed[i].particles.size() == jets[i].particles.size());
        for (std::size_t j = 0; j < jets[i].particles.size(); ++j) {
            CHECK(parsed[i].particles[j].pt == jets[i].particles[j].pt);
            CHECK(parsed[i].particles[j].y == jets[i].particles[j].y);
            CHECK(parsed[i].particles[j].phi == jets[i].particles[j].phi);
            CHECK(parsed[i].particles[j].pdg_id == jets[i].particles[j].pdg_id);
        }
    }

    {
        std::ofstream out(file.path);
        out << R"({"label":0,"particles":[{"pt":1.0,"y":0.0,"phi":0.0,"pdgid":22}]})" << "\n";
        out << "{not json\n";
    }
    CHECK(testutil::throws_with<ValidationError>([&] { read_jsonl(file.path); }, "line 2"));

    {
        std::ofstream out(file.path);
        out << R"({"label":0,"particles":[{"pt":-1.0,"y":0.0,"phi":0.0,"pdgid":22}]})" << "\n";
    }
    CHECK(testutil::throws_with<ValidationError>([&] { read_jsonl(file.path); }, "line 1"));
}

TEST_CASE("QJET1 cache round trip") {
    TempFile file("jets.qjet");
    std::vector<FeaturedJet> records;
    for (const auto& jet : synth_jets(15, 9)) records.push_back(featurize(jet, 3));
    write_cache(file.path, records, false);
    CHECK(is_cache_file(file.path));

    bool scaled = true;
    auto loaded = read_cache(file.path, &scaled);
    CHECK(!scaled);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].label == records[i].label);
        CHECK(loaded[i].h == records[i].h); // bit-exact doubles
        CHECK(loaded[i].x == records[i].x);
        CHECK(loaded[i].a == records[i].a);
    }

    TempFile bogus("not_cache.bin");
    {
        std::ofstream out(bogus.path, std::ios::binary);
        out << "HELLO WORLD";
    }
    CHECK(!is_cache_file(bogus.path));
    CHECK_THROWS_AS(read_cache(bogus.path), ValidationError);
}
