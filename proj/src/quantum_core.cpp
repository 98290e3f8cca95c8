#include "nvqhl/quantum_core.hpp"

#include <cmath>
#include <string>

namespace nvqhl {

std::size_t ipow3(int m) {
  std::size_t d = 1;
  for (int i = 0; i < m; ++i) d *= 3;
  return d;
}

namespace {

SiteOps make_site_ops() {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx i{0.0, 1.0};
  SiteOps ops;
  ops.sx = Operator::Zero(3, 3);
  ops.sx(0, 1) = ops.sx(1, 0) = ops.sx(1, 2) = ops.sx(2, 1) = r;
  ops.sy = Operator::Zero(3, 3);
  ops.sy(0, 1) = -i * r;
  ops.sy(1, 0) = i * r;
  ops.sy(1, 2) = -i * r;
  ops.sy(2, 1) = i * r;
  ops.sz = Operator::Zero(3, 3);
  ops.sz(0, 0) = 1.0;
  ops.sz(2, 2) = -1.0;
  ops.p_plus = Operator::Zero(3, 3);
  ops.p_plus(0, 0) = 1.0;
  ops.p_zero = Operator::Zero(3, 3);
  ops.p_zero(1, 1) = 1.0;
  ops.p_minus = Operator::Zero(3, 3);
  ops.p_minus(2, 2) = 1.0;
  ops.xeff = Operator::Zero(3, 3);
  ops.xeff(0, 1) = ops.xeff(1, 0) = 1.0;
  ops.identity = Operator::Identity(3, 3);
  return ops;
}

void check_sites(int num_sites) {
  if (num_sites < 1 || ipow3(num_sites) > kMaxDim)
    throw ArgumentError("number of sites must be in [1, 8], got " + std::to_string(num_sites));
}

Operator kron(const Operator& a, const Operator& b) {
  Operator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// I_{3^(before)} x op x I_{3^(after)} built without materialising the identities.
Operator embed_block(const Operator& op, std::size_t before, std::size_t after) {
  const auto d = static_cast<Eigen::Index>(op.rows());
  const auto n = static_cast<Eigen::Index>(before * d * after);
  Operator out = Operator::Zero(n, n);
  const auto a = static_cast<Eigen::Index>(after);
  for (Eigen::Index blk = 0; blk < static_cast<Eigen::Index>(before); ++blk) {
    const Eigen::Index base = blk * d * a;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) {
        const cplx v = op(i, j);
        if (v == cplx{}) continue;
        for (Eigen::Index k = 0; k < a; ++k) out(base + i * a + k, base + j * a + k) = v;
      }
  }
  return out;
}

}  // namespace

const SiteOps& spin1_site_ops() {
  static const SiteOps ops = make_site_ops();
  return ops;
}

Operator kron_embed(const Operator& op, int site, int num_sites) {
  check_sites(num_sites);
  if (op.rows() != 3 || op.cols() != 3) throw ArgumentError("site operator must be 3x3");
  if (site < 1 || site > num_sites)
    throw ArgumentError("site " + std::to_string(site) + " outside 1.." + std::to_string(num_sites));
  return embed_block(op, ipow3(site - 1), ipow3(num_sites - site));
}

Operator two_site_embed(const Operator& op_a, const Operator& op_b, int q, int r,
                        int num_sites) {
  check_sites(num_sites);
  if (op_a.rows() != 3 || op_a.cols() != 3 || op_b.rows() != 3 || op_b.cols() != 3)
    throw ArgumentError("site operators must be 3x3");
  if (q < 1 || r > num_sites || q >= r)
    throw ArgumentError("two_site_embed requires 1 <= q < r <= M");
  // The middle block spans sites q..r, with identities between the two factors.
  Operator middle = kron(op_a, kron(Operator::Identity(ipow3(r - q - 1), ipow3(r - q - 1)), op_b));
  return embed_block(middle, ipow3(q - 1), ipow3(num_sites - r));
}

double hermiticity_residual(const Operator& h) {
  if (h.rows() != h.cols()) return INFINITY;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

HermitianEigen hermitian_eigen(const Operator& h) {
  if (h.rows() != h.cols() || h.rows() == 0) throw ArgumentError("hermitian_eigen: matrix must be square and non-empty");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_residual(h) > tol::kHermitianInput * scale)
    throw ModelError("hermitian_eigen: input is not Hermitian");

  HermitianEigen out;
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<RealOperator> solver(h.real());
    if (solver.info() != Eigen::Success) throw NumericError("hermitian_eigen: solver failed");
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Operator> solver(h);
    if (solver.info() != Eigen::Success) throw NumericError("hermitian_eigen: solver failed");
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
  }
  return out;
}

Operator evolve(const HermitianEigen& eig, double t) {
  if (!(t >= 0.0)) throw ArgumentError("evolve: time must be non-negative");
  Eigen::VectorXcd phases(eig.eigenvalues.size());
  for (Eigen::Index k = 0; k < phases.size(); ++k)
    phases(k) = std::polar(1.0, -eig.eigenvalues(k) * t);
  return eig.eigenvectors * phases.asDiagonal() * eig.eigenvectors.adjoint();
}

StateVector apply(const Operator& u, const StateVector& psi) {
  if (u.cols() != psi.size()) throw ArgumentError("apply: dimension mismatch");
  return u * psi;
}

double expectation(const StateVector& psi, const Operator& o) {
  if (o.rows() != psi.size() || o.cols() != psi.size())
    throw ArgumentError("expectation: dimension mismatch");
  const cplx v = psi.dot(o * psi);  // conjugates psi
  if (std::abs(v.imag()) > tol::kExpectationImag)
    throw NumericError("expectation: imaginary part " + std::to_string(v.imag()) +
                       " (non-Hermitian observable or corrupt state)");
  return v.real();
}

}  // namespace nvqhl
