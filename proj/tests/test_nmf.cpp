#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "dynmf/nmf.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace dynmf;

namespace {

// Independent NNDSVD oracle: dense Jacobi SVD plus positive/negative section
// splitting, written directly from the construction. Kept separate from the
// library implementation on purpose.
std::pair<MatrixXd, MatrixXd> nndsvd_oracle(const MatrixXd& A, int k) {
    Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const MatrixXd& U = svd.matrixU();
    const MatrixXd& V = svd.matrixV();
    const VectorXd& S = svd.singularValues();
    MatrixXd W = MatrixXd::Zero(A.rows(), k);
    MatrixXd H = MatrixXd::Zero(k, A.cols());
    W.col(0) = std::sqrt(S(0)) * U.col(0).cwiseAbs();
    H.row(0) = std::sqrt(S(0)) * V.col(0).cwiseAbs().transpose();
    for (int j = 1; j < k; ++j) {
        VectorXd x = U.col(j), y = V.col(j);
        VectorXd xp = x.cwiseMax(0.0), xn = (-x).cwiseMax(0.0);
        VectorXd yp = y.cwiseMax(0.0), yn = (-y).cwiseMax(0.0);
        const double mp = xp.norm() * yp.norm();
        const double mn = xn.norm() * yn.norm();
        if (mp == 0.0 && mn == 0.0) continue;
        VectorXd u, v;
        double sigma;
        if (mp >= mn) {
            u = xp / xp.norm();
            v = yp / yp.norm();
            sigma = mp;
        } else {
            u = xn / xn.norm();
            v = yn / yn.norm();
            sigma = mn;
        }
        const double scale = std::sqrt(S(j) * sigma);
        W.col(j) = scale * u;
        H.row(j) = scale * v.transpose();
    }
    return {W, H};
}

MatrixXd random_nonneg(int rows, int cols, std::uint64_t seed, double density = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    MatrixXd A = MatrixXd::Zero(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (unif(rng) < density) A(i, j) = unif(rng);
    return A;
}

// Planted factors with per-row dominant blocks so that the factorization is
// identifiable up to permutation.
std::pair<MatrixXd, MatrixXd> planted_factors(int n, int m, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> strong(0.5, 1.0);
    std::uniform_real_distribution<double> weak(0.0, 0.05);
    MatrixXd W(n, k), H(k, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) W(i, j) = (i % k == j) ? strong(rng) : weak(rng);
    const int block = m / k;
    for (int j = 0; j < k; ++j)
        for (int c = 0; c < m; ++c) H(j, c) = (c / block == j) ? strong(rng) : weak(rng);
    return {W, H};
}

double max_row_cosine(const Eigen::RowVectorXd& target, const MatrixXd& H) {
    double best = -1.0;
    for (int r = 0; r < H.rows(); ++r) {
        const double denom = target.norm() * H.row(r).norm();
        if (denom <= 0.0) continue;
        best = std::max(best, target.dot(H.row(r)) / denom);
    }
    return best;
}

}  // namespace

TEST_CASE("reconstruction_error hand values") {
    MatrixXd A(2, 2);
    A << 1, 2, 3, 4;
    MatrixXd W(2, 1), H(1, 2);
    W << 1, 1;
    H << 1, 1;
    // residual [[0,1],[2,3]] -> sqrt(0+1+4+9)
    CHECK(nmf::reconstruction_error(A, W, H) == doctest::Approx(std::sqrt(14.0)).epsilon(1e-12));

    MatrixXd Z1 = MatrixXd::Zero(2, 1), Z2 = MatrixXd::Zero(1, 2);
    CHECK(nmf::reconstruction_error(A, Z1, Z2) == doctest::Approx(A.norm()).epsilon(1e-12));

    MatrixXd Wx = random_nonneg(6, 2, 7), Hx = random_nonneg(2, 5, 8);
    MatrixXd Ax = Wx * Hx;
    CHECK(nmf::reconstruction_error(Ax, Wx, Hx) <= 1e-10);

    MatrixXd bad(3, 2);
    CHECK_THROWS_AS(nmf::reconstruction_error(A, bad, H), std::invalid_argument);
}

TEST_CASE("nndsvd reconstructs a rank-1 non-negative matrix") {
    VectorXd u(4), v(3);
    u << 1, 2, 0, 3;
    v << 2, 0, 1;
    MatrixXd A = u * v.transpose();
    auto [W, H] = nmf::nndsvd_init(A, 1);
    CHECK(W.minCoeff() >= 0.0);
    CHECK(H.minCoeff() >= 0.0);
    CHECK((A - W * H).norm() / A.norm() <= 1e-8);
}

TEST_CASE("nndsvd matches the independent SVD oracle") {
    struct Fixture {
        int rows, cols, k;
        std::uint64_t seed;
        double density;
    };
    const Fixture fixtures[] = {
        {5, 4, 2, 11, 1.0}, {8, 6, 3, 12, 0.6}, {10, 10, 4, 13, 0.4},
        {6, 9, 2, 14, 0.8}, {12, 5, 5, 15, 0.5},
    };
    for (const auto& f : fixtures) {
        CAPTURE(f.seed);
        MatrixXd A = random_nonneg(f.rows, f.cols, f.seed, f.density);
        auto [We, He] = nndsvd_oracle(A, f.k);
        auto [W, H] = nmf::nndsvd_init(A, f.k);
        REQUIRE(W.rows() == We.rows());
        REQUIRE(H.cols() == He.cols());
        CHECK((W - We).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((H - He).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(W.minCoeff() >= 0.0);
        CHECK(H.minCoeff() >= 0.0);
    }
}

TEST_CASE("nndsvd is bitwise deterministic") {
    MatrixXd A = random_nonneg(9, 7, 21);
    auto [W1, H1] = nmf::nndsvd_init(A, 3);
    auto [W2, H2] = nmf::nndsvd_init(A, 3);
    CHECK(std::memcmp(W1.data(), W2.data(), sizeof(double) * W1.size()) == 0);
    CHECK(std::memcmp(H1.data(), H2.data(), sizeof(double) * H1.size()) == 0);
}

TEST_CASE("nndsvd rejects out-of-range k") {
    MatrixXd A = random_nonneg(4, 3, 5);
    CHECK_THROWS_AS(nmf::nndsvd_init(A, 0), std::invalid_argument);
    CHECK_THROWS_AS(nmf::nndsvd_init(A, 4), std::invalid_argument);
}

TEST_CASE("factorize recovers planted factors") {
    auto [Wp, Hp] = planted_factors(30, 20, 3, 42);
    MatrixXd A = Wp * Hp;
    nmf::TopicModelFactors factors = nmf::factorize(A, 3);
    CHECK(factors.W.minCoeff() >= 0.0);
    CHECK(factors.H.minCoeff() >= 0.0);
    const double rel = nmf::reconstruction_error(A, factors.W, factors.H) / A.norm();
    CHECK(rel <= 1e-3);
    for (int r = 0; r < 3; ++r) {
        CAPTURE(r);
        CHECK(max_row_cosine(Hp.row(r), factors.H) >= 0.95);
    }
}

TEST_CASE("factorize at full rank does not increase the error") {
    MatrixXd A = random_nonneg(4, 5, 33);
    nmf::TopicModelFactors factors = nmf::factorize(A, 4);
    REQUIRE(!factors.error_trace.empty());
    CHECK(factors.error_trace.back() <= factors.error_trace.front() + 1e-12);
}

TEST_CASE("factorize is deterministic") {
    MatrixXd A = random_nonneg(12, 9, 77);
    auto f1 = nmf::factorize(A, 4);
    auto f2 = nmf::factorize(A, 4);
    REQUIRE(f1.error_trace.size() == f2.error_trace.size());
    for (std::size_t i = 0; i < f1.error_trace.size(); ++i)
        CHECK(f1.error_trace[i] == f2.error_trace[i]);
    CHECK(std::memcmp(f1.W.data(), f2.W.data(), sizeof(double) * f1.W.size()) == 0);
}

TEST_CASE("error trace is non-increasing within slack") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        CAPTURE(seed);
        MatrixXd A = random_nonneg(15, 12, seed, 0.5);
        const int k = 2 + static_cast<int>(seed % 5);
        nmf::TopicModelFactors factors = nmf::factorize(A, k);
        REQUIRE(!factors.error_trace.empty());
        const double slack = 1e-9 * factors.error_trace.front();
        for (std::size_t i = 1; i < factors.error_trace.size(); ++i)
            CHECK(factors.error_trace[i] <= factors.error_trace[i - 1] + slack);
    }
}

TEST_CASE("zero rows and columns stay zero in the factors") {
    MatrixXd A = random_nonneg(6, 5, 55);
    A.row(2).setZero();
    A.col(3).setZero();
    nmf::TopicModelFactors factors = nmf::factorize(A, 2);
    CHECK(factors.W.row(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(factors.H.col(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("argmax_rows tie and zero-row rules") {
    MatrixXd W(3, 2);
    W << 0.1, 0.9, 0.5, 0.5, 0.0, 0.0;
    std::vector<bool> zero;
    auto assignment = nmf::argmax_rows(W, &zero);
    CHECK(assignment == std::vector<int>{1, 0, 0});
    CHECK(zero == std::vector<bool>{false, false, true});
}

TEST_CASE("factor round-trip through triplet files") {
    auto [Wp, Hp] = planted_factors(8, 6, 2, 9);
    MatrixXd A = Wp * Hp;
    nmf::TopicModelFactors factors = nmf::factorize(A, 2);
    const std::string prefix = "/tmp/dynmf_test_factors";
    nmf::save_factors(factors, prefix);
    nmf::TopicModelFactors loaded = nmf::load_factors(prefix);
    CHECK(loaded.k == factors.k);
    CHECK(loaded.iterations == factors.iterations);
    CHECK((loaded.W - factors.W).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.H - factors.H).cwiseAbs().maxCoeff() == 0.0);
    CHECK(loaded.final_error() == doctest::Approx(factors.final_error()).epsilon(1e-15));
}
