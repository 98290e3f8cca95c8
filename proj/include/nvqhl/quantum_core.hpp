#pragma once

// Dense complex linear algebra for small spin-1 chains.
//
// Basis convention: each site is ordered (|+1>, |0>, |-1>), and site 1 is the
// leftmost tensor factor, so the joint index of |m_1 ... m_M> is
//   sum_q idx(m_q) * 3^(M - q)   with idx(+1) = 0, idx(0) = 1, idx(-1) = 2.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nvqhl {

using cplx = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealOperator = Eigen::MatrixXd;

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kHermitianInput = 1e-9;
inline constexpr double kExpectationImag = 1e-8;
}  // namespace tol

/// Largest dimension supported by the dense backend (3^8).
inline constexpr std::size_t kMaxDim = 6561;

std::size_t ipow3(int m);

struct SiteOps {
  Operator sx, sy, sz;
  Operator p_plus, p_zero, p_minus;
  Operator xeff;
  Operator identity;
};

/// Standard spin-1 matrices in the (|+1>, |0>, |-1>) basis.
const SiteOps& spin1_site_ops();

/// I x ... x op x ... x I with `op` at 1-based `site` of an M-site chain.
Operator kron_embed(const Operator& op, int site, int num_sites);

/// opA at site q, opB at site r (1-based, q < r), identity elsewhere.
Operator two_site_embed(const Operator& op_a, const Operator& op_b, int q, int r,
                        int num_sites);

double hermiticity_residual(const Operator& h);

struct HermitianEigen {
  Eigen::VectorXd eigenvalues;  // ascending
  Operator eigenvectors;        // columns
};

/// Throws ModelError if `h` is not Hermitian within tol::kHermitianInput * scale.
/// Real-symmetric input takes the real solver.
HermitianEigen hermitian_eigen(const Operator& h);

/// U = V diag(exp(-i lambda_k t)) V^dagger.
Operator evolve(const HermitianEigen& eig, double t);

StateVector apply(const Operator& u, const StateVector& psi);

/// <psi|O|psi>; throws NumericError when the imaginary part exceeds
/// tol::kExpectationImag.
double expectation(const StateVector& psi, const Operator& o);

}  // namespace nvqhl
