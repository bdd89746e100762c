#include "dynmf/nmf.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <Eigen/SVD>
#include <json.hpp>

namespace dynmf::nmf {

namespace {

void check_k(Eigen::Index rows, Eigen::Index cols, int k) {
    if (k < 1 || k > std::min(rows, cols))
        throw std::invalid_argument("nmf: k=" + std::to_string(k) +
                                    " outside [1, min(n,m)] for a " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " matrix");
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_dense(const Eigen::MatrixXd& A, int k) {
    check_k(A.rows(), A.cols(), k);
    if (A.size() > 0 && A.minCoeff() < 0.0)
        throw std::invalid_argument("nndsvd_init: input matrix has negative entries");

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd& U = svd.matrixU();
    const Eigen::MatrixXd& V = svd.matrixV();
    const Eigen::VectorXd& S = svd.singularValues();
    if (!U.allFinite() || !V.allFinite() || !S.allFinite())
        throw NmfError("nndsvd_init: SVD failed on degenerate input");

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(A.rows(), k);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(k, A.cols());

    // Leading triplet of a non-negative matrix can be taken entrywise
    // non-negative; abs() also absorbs the solver's sign choice.
    W.col(0) = std::sqrt(S(0)) * U.col(0).cwiseAbs();
    H.row(0) = std::sqrt(S(0)) * V.col(0).cwiseAbs().transpose();

    for (int j = 1; j < k; ++j) {
        const Eigen::VectorXd x = U.col(j);
        const Eigen::VectorXd y = V.col(j);
        const Eigen::VectorXd xp = x.cwiseMax(0.0);
        const Eigen::VectorXd xn = (-x).cwiseMax(0.0);
        const Eigen::VectorXd yp = y.cwiseMax(0.0);
        const Eigen::VectorXd yn = (-y).cwiseMax(0.0);
        const double xp_norm = xp.norm(), yp_norm = yp.norm();
        const double xn_norm = xn.norm(), yn_norm = yn.norm();
        const double mp = xp_norm * yp_norm;
        const double mn = xn_norm * yn_norm;
        if (mp == 0.0 && mn == 0.0) continue;  // deficient triplet, keep zeros
        double sigma;
        Eigen::VectorXd u, v;
        if (mp >= mn) {
            u = xp / xp_norm;
            v = yp / yp_norm;
            sigma = mp;
        } else {
            u = xn / xn_norm;
            v = yn / yn_norm;
            sigma = mn;
        }
        const double scale = std::sqrt(S(j) * sigma);
        W.col(j) = scale * u;
        H.row(j) = scale * v.transpose();
    }
    return {W, H};
}

double dense_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H) {
    if (W.rows() != A.rows() || H.cols() != A.cols() || W.cols() != H.rows())
        throw std::invalid_argument("reconstruction_error: factor shapes do not match A");
    return (A - W * H).norm();
}

TopicModelFactors factorize_dense(const Eigen::MatrixXd& A, int k, const NmfConfig& config) {
    if (config.max_iter < 1) throw std::invalid_argument("NmfConfig: max_iter must be >= 1");
    if (config.rel_tol <= 0.0) throw std::invalid_argument("NmfConfig: rel_tol must be > 0");

    TopicModelFactors factors;
    factors.k = k;
    std::tie(factors.W, factors.H) = nndsvd_dense(A, k);
    factors.error_trace.push_back(dense_error(A, factors.W, factors.H));

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        Eigen::MatrixXd W_prev = factors.W;
        Eigen::MatrixXd H_prev = factors.H;

        // min_H ||A - W H||_F, unconstrained, negatives clipped
        const Eigen::MatrixXd WtW = factors.W.transpose() * factors.W;
        const Eigen::MatrixXd WtA = factors.W.transpose() * A;
        factors.H = WtW.completeOrthogonalDecomposition().solve(WtA).cwiseMax(config.nonneg_clip);

        // min_W ||A - W H||_F
        const Eigen::MatrixXd HHt = factors.H * factors.H.transpose();
        const Eigen::MatrixXd HAt = factors.H * A.transpose();
        factors.W = HHt.completeOrthogonalDecomposition()
                        .solve(HAt)
                        .transpose()
                        .cwiseMax(config.nonneg_clip);

        if (!factors.W.allFinite() || !factors.H.allFinite())
            throw NmfError("factorize: numerical blow-up at iteration " + std::to_string(iter));

        const double err = dense_error(A, factors.W, factors.H);
        const double prev = factors.error_trace.back();
        if (err > prev) {
            // Clipped ALS stalled; keep the better factors and stop.
            factors.W = std::move(W_prev);
            factors.H = std::move(H_prev);
            break;
        }
        factors.error_trace.push_back(err);
        factors.iterations = iter;
        if (prev > 0.0 && (prev - err) / prev < config.rel_tol) break;
        if (prev == 0.0) break;
    }
    return factors;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_dense_as_triplets(const Eigen::MatrixXd& M, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    std::size_t nnz = 0;
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            if (M(i, j) != 0.0) ++nnz;
    out << M.rows() << ' ' << M.cols() << ' ' << nnz << " 0\n";
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j)
            if (M(i, j) != 0.0) out << i << ' ' << j << ' ' << fmt_double(M(i, j)) << '\n';
}

Eigen::MatrixXd load_dense_from_triplets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    Eigen::Index rows, cols;
    std::size_t nnz;
    int tag;
    if (!(in >> rows >> cols >> nnz >> tag)) throw std::runtime_error(path + ": bad header");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::Index r, c;
    double v;
    std::size_t seen = 0;
    while (in >> r >> c >> v) {
        M(r, c) = v;
        ++seen;
    }
    if (seen != nnz) throw std::runtime_error(path + ": truncated triplets");
    return M;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::SparseMatrix<double>& A,
                                                        int k) {
    return nndsvd_dense(Eigen::MatrixXd(A), k);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::MatrixXd& A, int k) {
    return nndsvd_dense(A, k);
}

TopicModelFactors factorize(const Eigen::SparseMatrix<double>& A, int k, const NmfConfig& config) {
    return factorize_dense(Eigen::MatrixXd(A), k, config);
}

TopicModelFactors factorize(const Eigen::MatrixXd& A, int k, const NmfConfig& config) {
    return factorize_dense(A, k, config);
}

double reconstruction_error(const Eigen::SparseMatrix<double>& A, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& H) {
    return dense_error(Eigen::MatrixXd(A), W, H);
}

double reconstruction_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& H) {
    return dense_error(A, W, H);
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& W, std::vector<bool>* zero_rows) {
    if (W.cols() < 1) throw std::invalid_argument("argmax_rows: W has no columns");
    std::vector<int> assignment(static_cast<std::size_t>(W.rows()));
    if (zero_rows) zero_rows->assign(static_cast<std::size_t>(W.rows()), false);
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        int best = 0;
        for (Eigen::Index j = 1; j < W.cols(); ++j)
            if (W(i, j) > W(i, best)) best = static_cast<int>(j);
        assignment[static_cast<std::size_t>(i)] = best;
        if (zero_rows && W.row(i).cwiseAbs().maxCoeff() == 0.0)
            (*zero_rows)[static_cast<std::size_t>(i)] = true;
    }
    return assignment;
}

void save_factors(const TopicModelFactors& factors, const std::string& prefix) {
    save_dense_as_triplets(factors.W, prefix + ".w.mtx");
    save_dense_as_triplets(factors.H, prefix + ".h.mtx");
    nlohmann::json header;
    header["k"] = factors.k;
    header["iterations"] = factors.iterations;
    header["final_error"] = factors.final_error();
    header["error_trace"] = factors.error_trace;
    std::ofstream out(prefix + ".json");
    if (!out) throw std::runtime_error("cannot write " + prefix + ".json");
    out << header.dump(2) << '\n';
}

TopicModelFactors load_factors(const std::string& prefix) {
    TopicModelFactors factors;
    factors.W = load_dense_from_triplets(prefix + ".w.mtx");
    factors.H = load_dense_from_triplets(prefix + ".h.mtx");
    std::ifstream in(prefix + ".json");
    if (!in) throw std::runtime_error("cannot read " + prefix + ".json");
    nlohmann::json header = nlohmann::json::parse(in);
    factors.k = header.at("k").get<int>();
    factors.iterations = header.at("iterations").get<int>();
    factors.error_trace = header.at("error_trace").get<std::vector<double>>();
    return factors;
}

}  // namespace dynmf::nmf
