#include <doctest.h>

#include <cmath>
#include <vector>

#include "dacl/loss.hpp"
#include "dacl/rng.hpp"

using namespace dacl;

namespace {

// Naive direct-summation oracle for the batch loss: plain exp ratios, no
// stabilization, no shared code with the implementation.
double nt_xent_oracle(const Matrix& z, double tau) {
    const std::size_t n2 = z.rows();
    auto sim = [&](std::size_t i, std::size_t j) {
        double d = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t k = 0; k < z.cols(); ++k) {
            d += z(i, k) * z(j, k);
            ni += z(i, k) * z(i, k);
            nj += z(j, k) * z(j, k);
        }
        return d / (std::sqrt(ni) * std::sqrt(nj));
    };
    auto ell = [&](std::size_t i, std::size_t j) {
        double denom = 0.0;
        for (std::size_t k = 0; k < n2; ++k)
            if (k != i) denom += std::exp(sim(i, k) / tau);
        return -std::log(std::exp(sim(i, j) / tau) / denom);
    };
    double total = 0.0;
    for (std::size_t k = 0; k < n2 / 2; ++k)
        total += ell(2 * k, 2 * k + 1) + ell(2 * k + 1, 2 * k);
    return total / static_cast<double>(n2);
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed, 0);
    Matrix z(rows, cols);
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] = rng.standard_normal();
    return z;
}

} // namespace

TEST_CASE("cosine similarity basics") {
    std::vector<double> u = {1.0, 2.0, 3.0};
    std::vector<double> v = {-1.0, -2.0, -3.0};
    std::vector<double> w = {3.0, 0.0, -1.0};  // orthogonal to u
    CHECK(cosine_sim(u, u) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_sim(u, v) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(cosine_sim(u, w) == doctest::Approx(0.0).epsilon(1e-15));
    std::vector<double> zero = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(cosine_sim(u, zero), ContractError);
}

TEST_CASE("nt_xent N=1 is exactly zero") {
    Matrix z = random_batch(2, 5, 21);
    NtXentResult r = nt_xent(z, 0.7);
    CHECK(r.loss == 0.0);
    for (std::size_t i = 0; i < r.dz.size(); ++i) CHECK(r.dz.data()[i] == 0.0);
}

TEST_CASE("nt_xent identical rows give log(2N-1)") {
    for (std::size_t n : {1, 2, 4}) {
        Matrix z(2 * n, 3);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            z(i, 0) = 0.3;
            z(i, 1) = -1.2;
            z(i, 2) = 0.5;
        }
        for (double tau : {0.1, 0.5, 1.0}) {
            NtXentResult r = nt_xent(z, tau);
            CHECK(std::abs(r.loss - std::log(static_cast<double>(2 * n - 1))) < 1e-12);
        }
    }
}

TEST_CASE("nt_xent matches the naive oracle") {
    for (std::size_t n : {1, 2, 3, 4}) {
        for (int trial = 0; trial < 20; ++trial) {
            Matrix z = random_batch(2 * n, 6, 100 * n + trial);
            NtXentResult r = nt_xent(z, 0.5);
            CHECK(std::abs(r.loss - nt_xent_oracle(z, 0.5)) < 1e-12);
        }
    }
}

TEST_CASE("nt_xent invariant to positive row rescaling") {
    Matrix z = random_batch(6, 4, 31);
    double base = nt_xent(z, 0.8).loss;
    Matrix scaled = z;
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(2, j) *= 7.0;
    CHECK(std::abs(nt_xent(scaled, 0.8).loss - base) < 1e-12);
}

TEST_CASE("nt_xent invariant to wholesale pair permutation") {
    Matrix z = random_batch(8, 4, 32);
    double base = nt_xent(z, 0.6).loss;
    // swap pair 0 (rows 0,1) and pair 2 (rows 4,5)
    Matrix perm = z;
    for (std::size_t j = 0; j < z.cols(); ++j) {
        perm(0, j) = z(4, j);
        perm(1, j) = z(5, j);
        perm(4, j) = z(0, j);
        perm(5, j) = z(1, j);
    }
    CHECK(std::abs(nt_xent(perm, 0.6).loss - base) < 1e-12);
}

TEST_CASE("nt_xent loss non-increasing in tau on a well-separated batch") {
    // positives aligned, negatives anti-aligned: positive sims exceed all
    // negative sims, so sharpening the softmax can only lower the loss
    Matrix z(4, 2);
    z(0, 0) = 1.0;  z(0, 1) = 0.05;
    z(1, 0) = 1.0;  z(1, 1) = -0.05;
    z(2, 0) = -1.0; z(2, 1) = 0.05;
    z(3, 0) = -1.0; z(3, 1) = -0.05;
    double prev = nt_xent(z, 2.0).loss;
    for (double tau : {1.0, 0.5, 0.25, 0.1}) {
        double cur = nt_xent(z, tau).loss;
        CHECK(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("nt_xent gradient matches central finite differences") {
    for (std::size_t n : {1, 2, 3}) {
        Matrix z = random_batch(2 * n, 4, 50 + n);
        NtXentResult r = nt_xent(z, 0.5);
        const double h = 1e-6;
        for (std::size_t i = 0; i < z.size(); ++i) {
            Matrix up = z, down = z;
            up.data()[i] += h;
            down.data()[i] -= h;
            double fd = (nt_xent(up, 0.5).loss - nt_xent(down, 0.5).loss) / (2 * h);
            double a = r.dz.data()[i];
            CHECK(std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)}) < 1e-6);
        }
    }
}

TEST_CASE("nt_xent error contracts") {
    Matrix z = random_batch(4, 3, 77);
    CHECK_THROWS_AS(nt_xent(z, 0.0), ContractError);
    Matrix with_zero = z;
    for (std::size_t j = 0; j < z.cols(); ++j) with_zero(1, j) = 0.0;
    CHECK_THROWS_AS(nt_xent(with_zero, 1.0), ContractError);
}

TEST_CASE("softmax_xent uniform logits and one-hot limit") {
    Matrix logits(4, 10);
    std::vector<int> labels = {0, 3, 7, 9};
    SoftmaxXentResult r = softmax_xent(logits, labels);
    CHECK(std::abs(r.loss - std::log(10.0)) < 1e-12);

    Matrix hot(1, 5);
    hot(0, 2) = 50.0;
    std::vector<int> one = {2};
    CHECK(softmax_xent(hot, one).loss < 1e-20);
}

TEST_CASE("softmax_xent matches naive oracle and label contract") {
    Rng rng(91, 0);
    Matrix logits(3, 4);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = rng.standard_normal();
    std::vector<int> labels = {1, 0, 3};
    double naive = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        double denom = 0.0;
        for (std::size_t j = 0; j < 4; ++j) denom += std::exp(logits(i, j));
        naive += -std::log(std::exp(logits(i, static_cast<std::size_t>(labels[i]))) / denom);
    }
    naive /= 3.0;
    CHECK(std::abs(softmax_xent(logits, labels).loss - naive) < 1e-12);

    std::vector<int> bad = {1, 0, 4};
    CHECK_THROWS_AS(softmax_xent(logits, bad), ContractError);
}

TEST_CASE("softmax_xent gradient matches finite differences") {
    Rng rng(92, 0);
    Matrix logits(3, 5);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] = rng.standard_normal();
    std::vector<int> labels = {4, 2, 0};
    SoftmaxXentResult r = softmax_xent(logits, labels);
    const double h = 1e-6;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        Matrix up = logits, down = logits;
        up.data()[i] += h;
        down.data()[i] -= h;
        double fd = (softmax_xent(up, labels).loss - softmax_xent(down, labels).loss) / (2 * h);
        CHECK(std::abs(r.dlogits.data()[i] - fd) < 1e-8);
    }
}

TEST_CASE("binary_xent values and identities") {
    CHECK(std::abs(binary_xent(0.0, 0) - std::log(2.0)) < 1e-15);
    CHECK(std::abs(binary_xent(0.0, 1) - std::log(2.0)) < 1e-15);
    CHECK(binary_xent(50.0, 1) < 1e-20);
    for (int i = -100; i <= 100; ++i) {
        double q = 0.05 * static_cast<double>(i);
        CHECK(std::abs(binary_xent(-q, 1) - binary_xent(q, 0)) < 1e-15);
    }
    CHECK_THROWS_AS(binary_xent(1.0, 2), ContractError);
}
