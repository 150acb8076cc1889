#include "trajnet/gp_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "trajnet/errors.hpp"

namespace trajnet {

bool KernelParams::valid() const {
  if (!(sigma2 > 0.0 && phi2 > 0.0 && eta2 > 0.0)) return false;
  for (double x : xi)
    if (!(x > 0.0) || !std::isfinite(x)) return false;
  return std::isfinite(sigma2) && std::isfinite(phi2) && std::isfinite(eta2);
}

double kernel_entry(const KernelParams& params, int s1, int s2, double ti, double tj) {
  const double dt = ti - tj;
  double v = params.xi[static_cast<std::size_t>(s1)] * params.xi[static_cast<std::size_t>(s2)] * params.sigma2 *
             std::exp(-dt * dt / params.phi2);
  if (s1 == s2 && ti == tj) v += params.eta2;
  return v;
}

const std::vector<double>& KernelMatrix::jitter_ladder() {
  static const std::vector<double> ladder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  return ladder;
}

KernelMatrix::KernelMatrix(const KernelParams& params, const std::vector<std::vector<double>>& times) {
  if (params.xi.size() != times.size()) throw ContractError("KernelMatrix: xi size does not match process count");
  if (!params.valid()) throw ContractError("KernelMatrix: kernel parameters must be positive");
  Eigen::Index p = 0;
  for (const auto& t : times) p += static_cast<Eigen::Index>(t.size());
  k_.resize(p, p);
  Eigen::Index r = 0;
  for (std::size_t s1 = 0; s1 < times.size(); ++s1) {
    for (double ti : times[s1]) {
      Eigen::Index c = 0;
      for (std::size_t s2 = 0; s2 < times.size(); ++s2) {
        for (double tj : times[s2]) {
          k_(r, c++) = kernel_entry(params, static_cast<int>(s1), static_cast<int>(s2), ti, tj);
        }
      }
      ++r;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "sigma2=%g phi2=%g eta2=%g", params.sigma2, params.phi2, params.eta2);
  std::string ctx = buf;
  for (std::size_t s = 0; s < params.xi.size(); ++s) ctx += " xi" + std::to_string(s + 1) + "=" + std::to_string(params.xi[s]);
  factorize(ctx);
}

KernelMatrix::KernelMatrix(Matrix cov) : k_(std::move(cov)) {
  if (k_.rows() != k_.cols()) throw ContractError("KernelMatrix: covariance must be square");
  factorize("explicit covariance");
}

void KernelMatrix::factorize(const std::string& context) {
  for (double ridge : jitter_ladder()) {
    Matrix a = k_;
    a.diagonal().array() += ridge;
    if (auto llt = try_cholesky(a)) {
      llt_ = std::move(*llt);
      ridge_ = ridge;
      log_det_ = log_det_from_llt(llt_);
      return;
    }
  }
  throw NumericalError("kernel factorization failed after jitter escalation to 1e-6 (" + context + ")");
}

const Matrix& KernelMatrix::inverse() const {
  if (!inverse_) inverse_ = llt_.solve(Matrix::Identity(k_.rows(), k_.cols()));
  return *inverse_;
}

KernelMatrix build_kernel_matrix(const KernelParams& params, const std::vector<std::vector<double>>& times) {
  return KernelMatrix(params, times);
}

double gaussian_logpdf_cov(const Vector& x, const Vector& mu, const KernelMatrix& k) {
  if (x.size() != k.dim() || mu.size() != k.dim()) throw ContractError("gaussian_logpdf_cov: dimension mismatch");
  const Vector z = k.llt().matrixL().solve(x - mu);
  return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + k.log_det() + z.squaredNorm());
}

GaussianConditional gaussian_conditional(const Vector& x, const std::vector<bool>& observed, const Vector& mu,
                                         const Matrix& cov) {
  const auto n = x.size();
  if (mu.size() != n || cov.rows() != n || cov.cols() != n || static_cast<Eigen::Index>(observed.size()) != n) {
    throw ContractError("gaussian_conditional: dimension mismatch");
  }
  GaussianConditional out;
  for (Eigen::Index i = 0; i < n; ++i) (observed[static_cast<std::size_t>(i)] ? out.observed : out.missing).push_back(i);
  if (out.missing.empty()) {
    out.noop = true;
    return out;
  }
  const auto no = static_cast<Eigen::Index>(out.observed.size());
  Vector mu_m = mu(out.missing);
  Matrix c_mm = cov(out.missing, out.missing);
  if (no == 0) {
    out.mean = mu_m;
    out.cov = c_mm;
    return out;
  }
  const Matrix c_oo = cov(out.observed, out.observed);
  const Matrix c_mo = cov(out.missing, out.observed);
  const Vector dx = x(out.observed) - mu(out.observed);
  Eigen::LDLT<Matrix> ldlt(c_oo);
  if (ldlt.info() != Eigen::Success) throw NumericalError("gaussian_conditional: observed block not invertible");
  out.mean = mu_m + c_mo * ldlt.solve(dx);
  out.cov = symmetrize(c_mm - c_mo * ldlt.solve(c_mo.transpose()));
  return out;
}

}  // namespace trajnet
