#include <doctest.h>

#include <cmath>
#include <random>

#include "qjet/tensor.hpp"
#include "testutil.hpp"

using namespace qjet;
using ad::ComplexTensor;
using ad::Tensor;

TEST_CASE("matmul values") {
    Tensor eye = Tensor::leaf({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::leaf({2, 2}, {3, -1, 2, 7});
    CHECK(ad::matmul(eye, a).values() == a.values());

    Tensor m = Tensor::leaf({2, 2}, {1, 2, 3, 4});
    Tensor v = Tensor::leaf({2, 1}, {5, 6});
    auto prod = ad::matmul(m, v);
    CHECK(prod.values()[0] == doctest::Approx(17.0));
    CHECK(prod.values()[1] == doctest::Approx(39.0));

    CHECK_THROWS_AS(ad::matmul(m, Tensor::leaf({3, 1}, {1, 2, 3})), DimensionError);
}

TEST_CASE("complex matmul: (iI)(iI) = -I") {
    ComplexTensor i_eye = ComplexTensor::i_identity(2);
    auto sq = ad::cmatmul(i_eye, i_eye);
    CHECK(sq.at(0, 0).real() == doctest::Approx(-1.0));
    CHECK(sq.at(0, 0).imag() == doctest::Approx(0.0));
    CHECK(sq.at(0, 1).real() == doctest::Approx(0.0));
    CHECK(sq.at(1, 1).real() == doctest::Approx(-1.0));
}

TEST_CASE("kron values") {
    ComplexTensor sx = ComplexTensor::leaf({2, 2}, {0, 1, 1, 0}, {0, 0, 0, 0});
    ComplexTensor sz = ComplexTensor::leaf({2, 2}, {1, 0, 0, -1}, {0, 0, 0, 0});
    ComplexTensor eye = ComplexTensor::identity(2);

    auto sum = ad::cadd(ad::kron(sx, eye), ad::kron(eye, sx));
    const double expected[16] = {0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0};
    for (int i = 0; i < 16; ++i) {
        CHECK(sum.real_values()[i] == doctest::Approx(expected[i]));
        CHECK(sum.imag_values()[i] == doctest::Approx(0.0));
    }

    auto i4 = ad::kron(eye, eye);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            CHECK(i4.at(r, c).real() == doctest::Approx(r == c ? 1.0 : 0.0));

    auto zz = ad::kron(sz, sz);
    const double diag[4] = {1, -1, -1, 1};
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(zz.at(r, r).real() == doctest::Approx(diag[r]));
        for (std::size_t c = 0; c < 4; ++c)
            if (c != r) CHECK(std::abs(zz.at(r, c)) == doctest::Approx(0.0));
    }
}

TEST_CASE("cinverse values and contracts") {
    auto eye = ComplexTensor::identity(3);
    auto inv_eye = ad::cinverse(eye);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(inv_eye.at(r, c).real() == doctest::Approx(r == c ? 1.0 : 0.0));

    auto d = ComplexTensor::leaf({2, 2}, {2, 0, 0, 4}, {0, 0, 0, 0});
    auto dinv = ad::cinverse(d);
    CHECK(dinv.at(0, 0).real() == doctest::Approx(0.5));
    CHECK(dinv.at(1, 1).real() == doctest::Approx(0.25));

    auto ii = ComplexTensor::i_identity(2);
    auto iinv = ad::cinverse(ii);
    CHECK(iinv.at(0, 0).imag() == doctest::Approx(-1.0));
    CHECK(iinv.at(0, 0).real() == doctest::Approx(0.0));

    auto singular = ComplexTensor::leaf({2, 2}, {1, 1, 1, 1}, {0, 0, 0, 0});
    CHECK_THROWS_AS(ad::cinverse(singular), NumericalError);
    CHECK_THROWS_AS(ad::cinverse(ComplexTensor::zeros({2, 3})), DimensionError);
}

TEST_CASE("cinverse round trip for condition numbers up to 1e6") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + trial % 7;
        std::vector<double> re(n * n), im(n * n);
        for (double& v : re) v = dist(rng);
        for (double& v : im) v = dist(rng);
        // shift the diagonal to keep the matrix comfortably nonsingular
        for (std::size_t i = 0; i < n; ++i) re[i * n + i] += 2.0 + static_cast<double>(n);
        auto a = ComplexTensor::leaf({n, n}, re, im);
        auto b = ad::cinverse(a);
        auto prod = testutil::to_complex(ad::cmatmul(a, b));
        std::vector<testutil::cplx> eye(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
        CHECK(testutil::frobenius_distance(prod, eye) <= 1e-10);
    }
}

TEST_CASE("expm_minus_i trivial and diagonal cases") {
    auto zero = ComplexTensor::zeros({3, 3});
    auto u0 = ad::expm_minus_i(zero, Tensor::scalar(1.0));
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(u0.at(r, c).real() == doctest::Approx(r == c ? 1.0 : 0.0).epsilon(1e-12));
            CHECK(u0.at(r, c).imag() == doctest::Approx(0.0).epsilon(1e-12));
        }

    const double pi = 3.14159265358979323846;
    auto h = ComplexTensor::leaf({2, 2}, {1, 0, 0, 2}, {0, 0, 0, 0});
    auto u = ad::expm_minus_i(h, Tensor::scalar(pi));
    CHECK(std::abs(u.at(0, 0) - testutil::cplx(-1.0, 0.0)) <= 1e-12);
    CHECK(std::abs(u.at(1, 1) - testutil::cplx(1.0, 0.0)) <= 1e-12);
    CHECK(std::abs(u.at(0, 1)) <= 1e-12);

    // generic diagonal Hermitian: elementwise phases to 1e-12
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    std::vector<double> re(16, 0.0), im(16, 0.0);
    for (int i = 0; i < 4; ++i) re[i * 4 + i] = dist(rng);
    auto hd = ComplexTensor::leaf({4, 4}, re, im);
    const double scale = 1.7;
    auto ud = ad::expm_minus_i(hd, Tensor::scalar(scale));
    for (int i = 0; i < 4; ++i) {
        const auto expected = std::polar(1.0, -scale * re[i * 4 + i]);
        CHECK(std::abs(ud.at(i, i) - expected) <= 1e-12);
    }
}

TEST_CASE("expm_minus_i matches the eigendecomposition oracle") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 5; ++trial) {
        auto h = testutil::random_hermitian(8, 1.5, rng);
        auto u = ad::expm_minus_i(h, Tensor::scalar(1.0));
        auto oracle = testutil::expm_minus_i_oracle(testutil::to_complex(h), 8, 1.0);
        CHECK(testutil::frobenius_distance(testutil::to_complex(u), oracle) <= 1e-9);
    }
}

TEST_CASE("expm_minus_i is unitary for Hermitian inputs of norm up to 10") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = (trial % 3 == 0) ? 2 : (trial % 3 == 1 ? 4 : 8);
        auto h = testutil::random_hermitian(n, 10.0, rng);
        auto u = ad::expm_minus_i(h, Tensor::scalar(1.0));
        CHECK(testutil::unitarity_defect(u) <= 1e-10);
    }
}

TEST_CASE("expm_minus_i rejects non-Hermitian input") {
    auto bad = ComplexTensor::leaf({2, 2}, {0, 1, 0, 0}, {0, 0, 0, 0});
    CHECK_THROWS_AS(ad::expm_minus_i(bad, Tensor::scalar(1.0)), ContractViolation);
}

TEST_CASE("backward: power rule and linear maps") {
    Tensor x = Tensor::scalar(3.0, true);
    ad::backward(ad::mul(x, x));
    CHECK(x.grad()[0] == doctest::Approx(6.0));

    Tensor a = Tensor::leaf({3, 2}, {1, 2, 3, 4, 5, 6});
    Tensor v = Tensor::leaf({2, 1}, {0.3, -0.7}, true);
    ad::backward(ad::sum_all(ad::matmul(a, v)));
    CHECK(v.grad()[0] == doctest::Approx(1 + 3 + 5)); // column sums of A
    CHECK(v.grad()[1] == doctest::Approx(2 + 4 + 6));
}

TEST_CASE("backward accumulates until zeroed; rejects non-scalar loss") {
    Tensor x = Tensor::scalar(2.0, true);
    auto make = [&] { return ad::mul(x, x); };
    ad::backward(make());
    ad::backward(make());
    CHECK(x.grad()[0] == doctest::Approx(8.0)); // 2 * (2x)
    x.zero_grad();
    ad::backward(make());
    CHECK(x.grad()[0] == doctest::Approx(4.0));

    CHECK_THROWS_AS(ad::backward(Tensor::leaf({2, 1}, {1, 2}, true)), ContractViolation);
}

TEST_CASE("finite differences across composed real ops") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> dist(0.0, 0.8);
    auto rand_leaf = [&](ad::Shape s) {
        std::vector<double> v(s.size());
        for (double& x : v) x = dist(rng);
        return Tensor::leaf(s, std::move(v), true);
    };
    Tensor x = rand_leaf({2, 3});
    Tensor y = rand_leaf({3, 4});
    Tensor b = rand_leaf({1, 4});
    Tensor s = Tensor::scalar(0.9, true);

    auto make_loss = [&] {
        Tensor z = ad::matmul(x, y);                       // 2x4
        Tensor t = ad::activation(z, ad::Activation::Softplus);
        Tensor u = ad::add_rowvec(ad::mul(t, t), b);
        Tensor w = ad::mul_scalar(u, s);
        Tensor p = ad::concat_cols({ad::slice_rows(w, 0, 1), ad::slice_rows(w, 1, 2)});
        Tensor q = ad::select_cols(p, {0, 3, 5, 7});
        Tensor r = ad::sqrt_elem(ad::add_const(ad::mul(q, q), 0.01));
        Tensor tr = ad::transpose(ad::concat_rows({q, r}));
        return ad::add(ad::add(ad::mean_all(tr), ad::sum_all(ad::sum_axis(w, 0))),
                       ad::add(ad::recip(s), ad::sum_all(ad::mean_axis(w, 1))));
    };

    auto res = testutil::check_leaf_gradients(
        {{"x", x, {}}, {"y", y, {}}, {"b", b, {}}, {"s", s, {}}}, make_loss);
    CAPTURE(res.worst);
    CHECK(res.checked == 6 + 12 + 4 + 1);
    CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("finite differences across composed complex ops (re and im separately)") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist(0.0, 0.6);
    auto rand_cleaf = [&](ad::Shape s) {
        std::vector<double> re(s.size()), im(s.size());
        for (double& v : re) v = dist(rng);
        for (double& v : im) v = dist(rng);
        return ComplexTensor::leaf(s, std::move(re), std::move(im), true);
    };
    ComplexTensor a = rand_cleaf({2, 2});
    ComplexTensor b = rand_cleaf({2, 2});
    ComplexTensor v = rand_cleaf({2, 1});
    Tensor s = Tensor::scalar(1.3, true);

    auto make_loss = [&] {
        // keep the inverse well-conditioned: invert (B + 4I)
        ComplexTensor shifted = ad::cadd(b, ad::cscale(ComplexTensor::identity(2), 4.0));
        ComplexTensor inv = ad::cinverse(shifted);
        ComplexTensor m1 = ad::cmatmul(a, inv);
        ComplexTensor k = ad::kron(m1, ad::conj(ad::ctranspose(b)));
        ComplexTensor pooled = ad::csum_all(ad::cmul(k, k));
        ComplexTensor w = ad::cmul_scalar(ad::cmatmul(ad::adjoint(m1), v), s);
        Tensor loss1 = ad::sum_all(ad::cmodulus(w));
        Tensor loss2 = ad::cmodulus(pooled);
        Tensor loss3 = ad::add(ad::sum_all(ad::creal(k)), ad::sum_all(ad::cimag(m1)));
        return ad::add(ad::add(loss1, loss2), loss3);
    };

    auto res = testutil::check_leaf_gradients(
        {{"a", {}, a}, {"b", {}, b}, {"v", {}, v}, {"s", s, {}}}, make_loss);
    CAPTURE(res.worst);
    CHECK(res.checked == 8 + 8 + 4 + 1);
    CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("finite differences through expm_minus_i (Hermitian-preserving directions)") {
    std::mt19937_64 rng(43);
    auto h1 = testutil::random_hermitian(4, 0.8, rng);
    auto h2 = testutil::random_hermitian(4, 0.8, rng);
    Tensor g1 = Tensor::scalar(0.7, true);
    Tensor g2 = Tensor::scalar(-0.4, true);
    Tensor scale = Tensor::scalar(1.2, true);
    auto m0 = testutil::random_hermitian(4, 1.0, rng); // fixed probe matrix

    auto make_loss = [&] {
        ComplexTensor h = ad::cadd(ad::cmul_scalar(h1, g1), ad::cmul_scalar(h2, g2));
        ComplexTensor u = ad::expm_minus_i(h, scale);
        return ad::add(ad::sum_all(ad::creal(ad::cmatmul(u, m0))),
                       ad::sum_all(ad::cmodulus(u)));
    };

    auto res = testutil::check_leaf_gradients(
        {{"g1", g1, {}}, {"g2", g2, {}}, {"scale", scale, {}}}, make_loss);
    CAPTURE(res.worst);
    CHECK(res.max_rel_err <= 1e-4);

    // directional finite differences along Hermitian perturbations of h itself
    auto h = testutil::random_hermitian(4, 0.8, rng, true);
    auto make_loss_h = [&] {
        ComplexTensor u = ad::expm_minus_i(h, Tensor::scalar(1.0));
        return ad::add(ad::sum_all(ad::creal(ad::cmatmul(u, m0))),
                       ad::sum_all(ad::cmodulus(u)));
    };
    h.zero_grad();
    ad::backward(make_loss_h());
    const double step = 1e-6;
    const std::size_t n = 4;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            // real symmetric direction: e_ij + e_ji
            auto& re = h.real_values_mut();
            const double r0 = re[i * n + j], r1 = re[j * n + i];
            re[i * n + j] = r0 + step;
            if (j != i) re[j * n + i] = r1 + step;
            const double lp = make_loss_h().item();
            re[i * n + j] = r0 - step;
            if (j != i) re[j * n + i] = r1 - step;
            const double lm = make_loss_h().item();
            re[i * n + j] = r0;
            re[j * n + i] = r1;
            const double fd = (lp - lm) / (2 * step);
            const double adg = j == i ? h.grad_re()[i * n + i]
                                      : h.grad_re()[i * n + j] + h.grad_re()[j * n + i];
            CHECK(std::abs(fd - adg) / std::max({std::abs(fd), std::abs(adg), 1e-7}) <= 1e-4);

            if (j == i) continue;
            // imaginary antisymmetric direction: i(e_ij - e_ji)
            auto& im = h.imag_values_mut();
            const double i0 = im[i * n + j], i1 = im[j * n + i];
            im[i * n + j] = i0 + step;
            im[j * n + i] = i1 - step;
            const double lpi = make_loss_h().item();
            im[i * n + j] = i0 - step;
            im[j * n + i] = i1 + step;
            const double lmi = make_loss_h().item();
            im[i * n + j] = i0;
            im[j * n + i] = i1;
            const double fdi = (lpi - lmi) / (2 * step);
            const double adgi = h.grad_im()[i * n + j] - h.grad_im()[j * n + i];
            CHECK(std::abs(fdi - adgi) / std::max({std::abs(fdi), std::abs(adgi), 1e-7}) <=
                  1e-4);
        }
}

TEST_CASE("softmax cross entropy values and gradient") {
    Tensor equal = Tensor::leaf({1, 2}, {0.4, 0.4}, true);
    auto loss = ad::softmax_cross_entropy(equal, 0);
    CHECK(loss.item() == doctest::Approx(std::log(2.0)));

    Tensor big = Tensor::leaf({1, 2}, {1000.0, 0.0});
    CHECK(ad::softmax_cross_entropy(big, 0).item() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(ad::softmax_cross_entropy(big, 1).item()));

    // gradient = softmax - onehot, against finite differences
    Tensor logits = Tensor::leaf({1, 2}, {0.3, -0.9}, true);
    auto make_loss = [&] { return ad::softmax_cross_entropy(logits, 1); };
    auto res = testutil::check_leaf_gradients({{"logits", logits, {}}}, make_loss);
    CHECK(res.max_rel_err <= 1e-6);
}

TEST_CASE("complex modulus values and gradient at safe points") {
    ComplexTensor z = ComplexTensor::leaf({2, 1}, {3.0, 0.0}, {4.0, 1.0}, true);
    auto m = ad::cmodulus(z);
    CHECK(m.values()[0] == doctest::Approx(5.0));
    CHECK(m.values()[1] == doctest::Approx(1.0));
    ad::backward(ad::sum_all(m));
    CHECK(z.grad_re()[0] == doctest::Approx(0.6));
    CHECK(z.grad_im()[0] == doctest::Approx(0.8));
    CHECK(z.grad_re()[1] == doctest::Approx(0.0));
    CHECK(z.grad_im()[1] == doctest::Approx(1.0));
}

TEST_CASE("shape invariants") {
    Tensor t = Tensor::leaf({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    CHECK(t.size() == t.shape().rows * t.shape().cols);
    CHECK_THROWS_AS(Tensor::leaf({2, 2}, {1, 2, 3}), DimensionError);
    CHECK_THROWS_AS(ad::add(t, Tensor::zeros({3, 2})), DimensionError);
    CHECK_THROWS_AS(ad::reshape(t, {4, 2}), DimensionError);
    CHECK(ad::reshape(t, {3, 2}).values() == t.values());
    CHECK(ad::transpose(t).at(2, 1) == doctest::Approx(6.0));
}
