#include <doctest.h>

#include <cmath>
#include <map>

#include "dacl/augment.hpp"

using namespace dacl;

TEST_CASE("mix_linear identity, midpoint, hand arithmetic") {
    std::vector<double> x = {1.0, 3.0};
    std::vector<double> xt = {3.0, 1.0};
    CHECK(mix_linear(x, xt, 1.0) == x);
    CHECK(mix_linear(x, xt, 0.5) == std::vector<double>{2.0, 2.0});

    std::vector<double> a = {0.2, 0.4};
    std::vector<double> b = {1.0, 0.0};
    std::vector<double> out = mix_linear(a, b, 0.9);
    CHECK(out[0] == doctest::Approx(0.28).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(0.36).epsilon(1e-15));

    std::vector<double> short_v = {1.0};
    CHECK_THROWS_AS(mix_linear(x, short_v, 0.5), ContractError);
}

TEST_CASE("mix_linear stays in the box and respects lambda > 1/2 proximity") {
    Rng rng(61, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> x(4), xt(4);
        for (int j = 0; j < 4; ++j) {
            x[j] = rng.uniform(-2, 2);
            xt[j] = rng.uniform(-2, 2);
        }
        double lam = rng.uniform01();
        std::vector<double> out = mix_linear(x, xt, lam);
        for (int j = 0; j < 4; ++j) {
            CHECK(out[j] >= std::min(x[j], xt[j]) - 1e-12);
            CHECK(out[j] <= std::max(x[j], xt[j]) + 1e-12);
        }
        if (lam > 0.5) {
            double to_x = 0.0, to_xt = 0.0;
            for (int j = 0; j < 4; ++j) {
                to_x += (out[j] - x[j]) * (out[j] - x[j]);
                to_xt += (out[j] - xt[j]) * (out[j] - xt[j]);
            }
            CHECK(to_x <= to_xt + 1e-12);
        }
    }
}

TEST_CASE("mix_geometric identity, roots, hand arithmetic, domain error") {
    std::vector<double> x = {4.0};
    std::vector<double> one = {1.0};
    CHECK(mix_geometric(x, one, 1.0) == x);
    CHECK(mix_geometric(x, one, 0.5)[0] == doctest::Approx(2.0).epsilon(1e-15));

    std::vector<double> a = {0.25, 1.0};
    std::vector<double> b = {1.0, 0.04};
    std::vector<double> out = mix_geometric(a, b, 0.5);
    CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(0.2).epsilon(1e-12));

    std::vector<double> neg = {-0.1, 1.0};
    try {
        mix_geometric(neg, a, 0.5);
        CHECK(false);
    } catch (const ContractError& e) {
        CHECK(std::string(e.what()).find("index 0") != std::string::npos);
    }
}

TEST_CASE("mix_geometric zero conventions and symmetry") {
    std::vector<double> x = {0.0, 0.0};
    std::vector<double> xt = {0.5, 0.0};
    // 0^lambda * 0.5^(1-lambda) with both operands defined; both-zero entry stays 0
    std::vector<double> out = mix_geometric(x, xt, 0.5);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);
    // lambda = 1 with a zero partner entry: 0.5^1 * 0^0 = 0.5 under 0^0 = 1
    std::vector<double> out2 = mix_geometric(xt, x, 1.0);
    CHECK(out2[0] == 0.5);

    Rng rng(62, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> u(3), v(3);
        for (int j = 0; j < 3; ++j) {
            u[j] = rng.uniform01();
            v[j] = rng.uniform01();
        }
        double lam = rng.uniform01();
        std::vector<double> lhs = mix_geometric(u, v, lam);
        std::vector<double> rhs = mix_geometric(v, u, 1.0 - lam);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(lhs[j] - rhs[j]) < 1e-12);
    }
}

TEST_CASE("mix_binary masks") {
    std::vector<double> x = {1, 2, 3};
    std::vector<double> xt = {9, 8, 7};
    std::vector<std::uint8_t> ones = {1, 1, 1};
    std::vector<std::uint8_t> zeros = {0, 0, 0};
    std::vector<std::uint8_t> mixed = {1, 0, 1};
    CHECK(mix_binary(x, xt, ones) == x);
    CHECK(mix_binary(x, xt, zeros) == xt);
    CHECK(mix_binary(x, xt, mixed) == std::vector<double>{1, 8, 3});
}

TEST_CASE("gaussian_positive degenerate scale, mean, variance") {
    std::vector<double> x = {0.5, -1.0, 2.0};
    Rng rng(63, 0);
    std::vector<double> tiny = gaussian_positive(x, 1e-12, rng);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(tiny[j] - x[j]) < 1e-10);

    const double scale = 0.7;
    const int n = 100000;
    std::vector<double> mean(3, 0.0), var(3, 0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> out = gaussian_positive(x, scale, rng);
        for (int j = 0; j < 3; ++j) {
            mean[j] += out[j];
            var[j] += (out[j] - x[j]) * (out[j] - x[j]);
        }
    }
    for (int j = 0; j < 3; ++j) {
        mean[j] /= n;
        var[j] /= n;
        CHECK(std::abs(mean[j] - x[j]) < 0.01 * scale);
        CHECK(std::abs(var[j] - scale * scale) < 0.03 * scale * scale);
    }
    CHECK_THROWS_AS(gaussian_positive(x, 0.0, rng), ContractError);
}

TEST_CASE("sample_lambda support and statistics") {
    Rng rng(64, 0);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double lam = sample_lambda(rng, 0.9);
        CHECK(lam >= 0.9);
        CHECK(lam < 1.0);
        sum += lam;
    }
    CHECK(std::abs(sum / n - 0.95) < 0.002);
    CHECK(sample_lambda(rng, 1.0 - 1e-12) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK_THROWS_AS(sample_lambda(rng, 0.0), ContractError);
}

TEST_CASE("make_positive linear stays near the anchor for alpha near 1") {
    Matrix batch = Matrix::from_rows({{0.1, 0.9, 0.4}, {0.8, 0.2, 0.6}, {0.5, 0.5, 0.5}});
    NoisePolicy policy;
    policy.kind = NoiseKind::linear;
    policy.alpha = 1.0 - 1e-6;
    Rng rng(65, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pos = make_positive(batch, 0, policy, rng);
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(std::abs(pos[j] - batch(0, j)) <= (1.0 - policy.alpha) * 1.0 + 1e-12);
    }
}

TEST_CASE("make_positive N=2 partner is the other row") {
    Matrix batch = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    NoisePolicy policy;
    policy.kind = NoiseKind::linear;
    policy.alpha = 0.5;
    Rng rng(66, 0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> pos = make_positive(batch, 0, policy, rng);
        // positive must lie strictly between anchor 0 and row 1 on the segment
        CHECK(pos[0] == pos[1]);
        CHECK(pos[0] >= 0.0);
        CHECK(pos[0] <= 0.5);
    }
    CHECK_THROWS_AS(make_positive(Matrix(1, 2), 0, policy, rng), ContractError);
}

TEST_CASE("sample_partner never returns the anchor") {
    Rng rng(67, 0);
    std::map<std::size_t, int> counts;
    for (int trial = 0; trial < 100000; ++trial) {
        std::size_t p = sample_partner(8, 3, rng);
        CHECK(p != 3);
        CHECK(p < 8);
        counts[p]++;
    }
    for (const auto& [idx, cnt] : counts)
        CHECK(std::abs(cnt / 100000.0 - 1.0 / 7.0) < 0.01);
}

TEST_CASE("dacl_plus selects each mixup kind about a third of the time") {
    Matrix batch(4, 3);
    for (std::size_t i = 0; i < batch.rows(); ++i)
        for (std::size_t j = 0; j < batch.cols(); ++j)
            batch(i, j) = 0.1 + 0.2 * static_cast<double>(i + j);
    NoisePolicy policy;
    policy.kind = NoiseKind::dacl_plus;
    Rng rng(68, 0);
    std::map<NoiseKind, int> counts;
    const int n = 30000;
    for (int trial = 0; trial < n; ++trial) {
        PositivePair pair = make_positive_pair(batch, trial % 4, policy, rng);
        counts[pair.kind_used]++;
    }
    CHECK(counts.size() == 3);
    for (const auto& [kind, cnt] : counts)
        CHECK(std::abs(cnt / static_cast<double>(n) - 1.0 / 3.0) < 0.01);
}

TEST_CASE("make_positive_pair draws independent lambdas but one shared kind") {
    Matrix batch(6, 2);
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        batch(i, 0) = 0.1 * static_cast<double>(i + 1);
        batch(i, 1) = 1.0 - 0.1 * static_cast<double>(i);
    }
    NoisePolicy policy;
    policy.kind = NoiseKind::dacl_plus;
    Rng rng(69, 0);
    for (int trial = 0; trial < 200; ++trial) {
        PositivePair pair = make_positive_pair(batch, 1, policy, rng);
        CHECK(pair.first.size() == 2);
        CHECK(pair.second.size() == 2);
        CHECK((pair.kind_used == NoiseKind::linear || pair.kind_used == NoiseKind::geometric ||
               pair.kind_used == NoiseKind::binary));
    }
}

TEST_CASE("geometric kind propagates the domain error for negative features") {
    Matrix batch = Matrix::from_rows({{-0.5, 1.0}, {0.5, 0.2}});
    NoisePolicy policy;
    policy.kind = NoiseKind::geometric;
    Rng rng(70, 0);
    CHECK_THROWS_AS(make_positive(batch, 0, policy, rng), ContractError);
}
