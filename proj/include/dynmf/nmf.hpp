// Non-negative matrix factorization with deterministic NNDSVD initialization
// and alternating least-squares updates (negatives clipped to zero).

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace dynmf::nmf {

struct NmfConfig {
    int max_iter = 200;
    double rel_tol = 1e-6;     // stop when the relative error change falls below this
    double nonneg_clip = 0.0;  // floor applied to negative intermediates
};

struct TopicModelFactors {
    Eigen::MatrixXd W;  // n x k membership weights
    Eigen::MatrixXd H;  // k x m topic-term weights
    int k = 0;
    std::vector<double> error_trace;  // error_trace[0] is the post-init error
    int iterations = 0;

    double final_error() const { return error_trace.empty() ? 0.0 : error_trace.back(); }
};

class NmfError : public std::runtime_error {
public:
    explicit NmfError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic initial factors from the leading k singular triplets of A,
// keeping whichever of the positive/negative sections of each triplet has the
// larger norm product. Requires 1 <= k <= min(n, m) and A >= 0. Zeros from
// the construction are kept as zeros.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::SparseMatrix<double>& A,
                                                        int k);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> nndsvd_init(const Eigen::MatrixXd& A, int k);

// Alternating least squares from NNDSVD init: each block is solved
// unconstrained and negatives are clipped. Stops at max_iter, when the
// relative error change drops below rel_tol, or when an update would increase
// the error (the previous factors are kept, so the trace never grows).
// Numerical blow-up (NaN/Inf) raises NmfError naming the iteration.
TopicModelFactors factorize(const Eigen::SparseMatrix<double>& A, int k,
                            const NmfConfig& config = {});
TopicModelFactors factorize(const Eigen::MatrixXd& A, int k, const NmfConfig& config = {});

// Frobenius norm of A - W*H. Shape mismatch is an error.
double reconstruction_error(const Eigen::SparseMatrix<double>& A, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& H);
double reconstruction_error(const Eigen::MatrixXd& A, const Eigen::MatrixXd& W,
                            const Eigen::MatrixXd& H);

// Row argmax with ties resolved to the lowest column index; all-zero rows are
// reported through zero_rows when provided.
std::vector<int> argmax_rows(const Eigen::MatrixXd& W, std::vector<bool>* zero_rows = nullptr);

// Factors as sparse triplets plus a JSON header (k, iterations, final error):
// <prefix>.w.mtx, <prefix>.h.mtx, <prefix>.json.
void save_factors(const TopicModelFactors& factors, const std::string& prefix);
TopicModelFactors load_factors(const std::string& prefix);

}  // namespace dynmf::nmf
