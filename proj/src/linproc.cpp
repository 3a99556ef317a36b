#include "hdvb/linproc.hpp"

#include "hdvb/error.hpp"
#include "hdvb/parallel.hpp"
#include "hdvb/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hdvb {

CompanionMatrix build_companion(std::span<const Matrix> a_mats) {
  if (a_mats.empty()) throw Error(ErrorKind::shape, "companion: need at least one lag matrix");
  const Index n = a_mats.front().rows();
  if (n < 1) throw Error(ErrorKind::shape, "companion: empty coefficient matrix");
  for (std::size_t l = 0; l < a_mats.size(); ++l) {
    if (a_mats[l].rows() != n || a_mats[l].cols() != n) {
      std::ostringstream os;
      os << "companion: A_" << (l + 1) << " is " << a_mats[l].rows() << "x" << a_mats[l].cols()
         << ", expected " << n << "x" << n;
      throw Error(ErrorKind::shape, os.str());
    }
  }
  const Index k = static_cast<Index>(a_mats.size());
  CompanionMatrix out{Matrix::Zero(k * n, k * n), n, k};
  for (Index l = 0; l < k; ++l) out.inner.block(0, l * n, n, n) = a_mats[static_cast<std::size_t>(l)];
  for (Index l = 1; l < k; ++l) out.inner.block(l * n, (l - 1) * n, n, n).setIdentity();
  return out;
}

CompanionMatrix build_companion(const VarModel& model) { return build_companion(std::span<const Matrix>(model.a_mats)); }

double inf_norm(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double max_norm(const Eigen::Ref<const Matrix>& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

namespace {

double dense_radius(const Eigen::Ref<const Matrix>& m, const SpectralRadiusOptions& opts) {
  Eigen::EigenSolver<Matrix> solver;
  solver.setMaxIterations(static_cast<Index>(opts.max_iter) * m.rows());
  solver.compute(m, false);
  if (solver.info() != Eigen::Success) {
    throw NonConvergenceError("spectral_radius: dense eigensolver did not converge", inf_norm(m));
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// rho = lim ||M^k||^{1/k}. Powers M^(2^j) are formed by repeated squaring of a
// normalized matrix with the scale kept in log space; successive estimates
// r_j = ||M^(2^j)||^(2^-j) are extrapolated as r_{j}^2 / r_{j-1}, which
// cancels the leading 1/k term of log r_j.
double gelfand_radius(const Eigen::Ref<const Matrix>& m, const SpectralRadiusOptions& opts) {
  const double norm0 = inf_norm(m);
  if (norm0 == 0.0) return 0.0;
  Matrix power = m / norm0;
  double log_scale = std::log(norm0);
  double k = 1.0;
  double prev_r = norm0;
  double prev_est = norm0;
  double est = norm0;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Matrix sq = power * power;
    const double nm = inf_norm(sq);
    if (nm == 0.0) return 0.0;
    power = sq / nm;
    log_scale = 2.0 * log_scale + std::log(nm);
    k *= 2.0;
    const double r = std::exp(log_scale / k);
    est = std::min(r, r * r / prev_r);
    if (iter >= 2 && std::abs(est - prev_est) <= opts.tol * std::max(1.0, est)) return est;
    prev_r = r;
    prev_est = est;
  }
  throw NonConvergenceError("spectral_radius: norm iteration did not converge", est);
}

}  // namespace

double spectral_radius(const Eigen::Ref<const Matrix>& m, const SpectralRadiusOptions& opts) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::shape, "spectral_radius: matrix must be square");
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::config, "spectral_radius: tol must be positive");
  require_finite(m, "spectral_radius");
  if (m.rows() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  if (m.rows() <= opts.dense_cutoff) return dense_radius(m, opts);
  return gelfand_radius(m, opts);
}

double companion_radius(const VarModel& model, const SpectralRadiusOptions& opts) {
  return spectral_radius(build_companion(model).inner, opts);
}

VmaSequence vma_from_var(const VarModel& model, double tol, Index max_lag_cap) {
  if (!(tol > 0.0)) throw Error(ErrorKind::config, "vma_from_var: tol must be positive");
  const CompanionMatrix comp = build_companion(model);
  const double rho = spectral_radius(comp.inner);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "vma_from_var: VAR is not invertible (companion spectral radius " << rho << ")";
    throw Error(ErrorKind::non_stationary, os.str());
  }
  const Index n = comp.n;
  const Index k = comp.k;
  Index cap = max_lag_cap;
  if (cap <= 0) {
    cap = rho > 0.0 ? 10 * static_cast<Index>(std::ceil(std::log(tol) / std::log(rho))) : 10 * (k * n + 1);
    cap = std::max(cap, k + 1);
  }

  VmaSequence out;
  out.spectral_radius = rho;
  out.coeffs.push_back(Matrix::Identity(n, n));

  // First block column of A^L: [B_L; B_{L-1}; ...; B_{L-K+1}].
  Matrix state = Matrix::Zero(k * n, n);
  state.topRows(n).setIdentity();
  Matrix top(n, n);
  Index lag = 0;
  bool below_tol = false;
  while (lag < cap && !below_tol) {
    // Same summation order as row r of (companion * state).
    for (Index c = 0; c < n; ++c) {
      for (Index r = 0; r < n; ++r) {
        double acc = 0.0;
        for (Index m = 0; m < k * n; ++m) acc += comp.inner(r, m) * state(m, c);
        top(r, c) = acc;
      }
    }
    for (Index l = k - 1; l >= 1; --l) state.middleRows(l * n, n) = state.middleRows((l - 1) * n, n);
    state.topRows(n) = top;
    ++lag;
    out.coeffs.push_back(top);
    below_tol = true;
    for (Index l = 0; l < k && below_tol; ++l) below_tol = inf_norm(state.middleRows(l * n, n)) < tol;
  }
  out.truncation_lag = lag;
  out.truncated_by_cap = !below_tol;

  // Envelope rate sits a tenth of the way from rho to 1 so that polynomial
  // factors of defective spectra are absorbed into psi.
  const double lambda = rho + 0.1 * (1.0 - rho);
  double psi = 1.0;
  double lp = 1.0;
  for (std::size_t j = 0; j < out.coeffs.size(); ++j) {
    psi = std::max(psi, inf_norm(out.coeffs[j]) / lp);
    lp *= lambda;
  }
  out.envelope_psi = psi;
  out.envelope_lambda = lambda;
  out.tail_bound = psi * std::pow(lambda, static_cast<double>(lag + 1)) / (1.0 - lambda);
  return out;
}

Matrix long_run_matrix(const VarModel& model) {
  const Index n = model.n();
  Matrix system = Matrix::Identity(n, n);
  for (const auto& a : model.a_mats) system -= a;
  Eigen::FullPivLU<Matrix> lu(system);
  if (!lu.isInvertible()) {
    const double pivot = n == 0 ? 0.0 : lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    std::ostringstream os;
    os << "long_run_matrix: I - sum A_k is singular (smallest pivot " << pivot << ")";
    throw SingularError(os.str(), pivot);
  }
  return lu.inverse();
}

Matrix long_run_covariance(const Eigen::Ref<const Matrix>& b1, const Eigen::Ref<const Matrix>& sigma_eps) {
  const Index n = b1.rows();
  require_shape(b1, n, n, "long_run_covariance: b1");
  require_shape(sigma_eps, n, n, "long_run_covariance: sigma_eps");
  const Matrix m = b1 * sigma_eps * b1.transpose();
  return 0.5 * (m + m.transpose());
}

Vector scaled_means(const TimeSeriesPanel& panel) {
  const Index t = panel.t_obs();
  if (t < 1) throw Error(ErrorKind::input, "panel has no estimation rows");
  Vector means = panel.estimation_rows().colwise().sum().transpose() / static_cast<double>(t);
  return std::sqrt(static_cast<double>(t)) * means;
}

double statistic_from_means(const Eigen::Ref<const Vector>& means, Index t_obs, StatisticMode mode) {
  if (means.size() == 0) throw Error(ErrorKind::input, "statistic over zero series");
  const double root_t = std::sqrt(static_cast<double>(t_obs));
  double out = 0.0;
  switch (mode) {
    case StatisticMode::abs_max:
      out = 0.0;
      for (Index j = 0; j < means.size(); ++j) out = std::max(out, std::abs(root_t * means[j]));
      break;
    case StatisticMode::max:
      out = root_t * means[0];
      for (Index j = 1; j < means.size(); ++j) out = std::max(out, root_t * means[j]);
      break;
    case StatisticMode::min:
      out = root_t * means[0];
      for (Index j = 1; j < means.size(); ++j) out = std::min(out, root_t * means[j]);
      break;
  }
  return out;
}

double max_mean_statistic(const TimeSeriesPanel& panel, StatisticMode mode) {
  const Index t = panel.t_obs();
  if (t < 1) throw Error(ErrorKind::input, "panel has no estimation rows");
  const Vector means = panel.estimation_rows().colwise().sum().transpose() / static_cast<double>(t);
  return statistic_from_means(means, t, mode);
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> samples) : samples_(std::move(samples)) {
  if (samples_.empty()) throw Error(ErrorKind::input, "empirical distribution needs at least one sample");
  for (double v : samples_) {
    if (std::isnan(v)) throw Error(ErrorKind::input, "empirical distribution: NaN sample");
  }
  std::sort(samples_.begin(), samples_.end());
}

std::size_t order_statistic_index(std::size_t n, double level) {
  if (n == 0) throw Error(ErrorKind::input, "order statistic of an empty sample");
  const double x = static_cast<double>(n) * level;
  double c = std::ceil(x);
  // n * level landing a hair above an integer is rounding, not a fraction.
  if (c - x > 1.0 - 1e-9) c -= 1.0;
  const double clamped = std::clamp(c, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(clamped) - 1;
}

double EmpiricalDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::config, "quantile level outside [0, 1]");
  return samples_[order_statistic_index(samples_.size(), p)];
}

double EmpiricalDistribution::cdf(double y) const {
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), y);
  return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

double kolmogorov_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
  const auto& xa = a.samples();
  const auto& xb = b.samples();
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < xa.size() && j < xb.size()) {
    const double v = std::min(xa[i], xb[j]);
    while (i < xa.size() && xa[i] <= v) ++i;
    while (j < xb.size() && xb[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

Matrix psd_factor(const Eigen::Ref<const Matrix>& sigma) {
  const Index n = sigma.rows();
  require_shape(sigma, n, n, "psd_factor");
  require_finite(sigma, "psd_factor");
  const double scale = max_norm(sigma);
  if (scale == 0.0) return Matrix::Zero(n, 0);
  if (max_norm(sigma - sigma.transpose()) > 1e-10 * scale) {
    throw Error(ErrorKind::shape, "psd_factor: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (sigma + sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10 * scale) {
    std::ostringstream os;
    os << "covariance matrix is not positive semi-definite (eigenvalue " << min_eig << ")";
    throw Error(ErrorKind::not_psd, os.str());
  }

  // Pivoted Cholesky, stopped once the largest remaining pivot is negligible.
  const double cutoff = 1e-12 * scale;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  Vector resid = sym.diagonal();
  Matrix factor = Matrix::Zero(n, n);
  Index rank = 0;
  for (; rank < n; ++rank) {
    Index best = rank;
    for (Index i = rank + 1; i < n; ++i) {
      if (resid[perm[static_cast<std::size_t>(i)]] > resid[perm[static_cast<std::size_t>(best)]]) best = i;
    }
    std::swap(perm[static_cast<std::size_t>(rank)], perm[static_cast<std::size_t>(best)]);
    const Index p = perm[static_cast<std::size_t>(rank)];
    const double d = resid[p];
    if (d <= cutoff) break;
    const double root = std::sqrt(d);
    factor(p, rank) = root;
    for (Index i = rank + 1; i < n; ++i) {
      const Index q = perm[static_cast<std::size_t>(i)];
      double v = sym(q, p);
      for (Index s = 0; s < rank; ++s) v -= factor(q, s) * factor(p, s);
      factor(q, rank) = v / root;
      resid[q] -= factor(q, rank) * factor(q, rank);
    }
  }
  return factor.leftCols(rank);
}

EmpiricalDistribution gaussian_max_sample(const Eigen::Ref<const Matrix>& sigma, std::size_t draws,
                                          std::uint64_t seed, unsigned threads) {
  if (draws < 1) throw Error(ErrorKind::config, "gaussian_max_sample: draws must be >= 1");
  const Matrix factor = psd_factor(sigma);
  const Index rank = factor.cols();
  constexpr std::size_t chunk = 1024;
  const std::size_t chunks = (draws + chunk - 1) / chunk;
  std::vector<double> out(draws, 0.0);
  if (rank > 0) {
    parallel_for(chunks, threads, [&](std::size_t c) {
      CounterRng rng(stream_key(seed, c));
      Vector u(rank);
      Vector z(factor.rows());
      const std::size_t end = std::min(draws, (c + 1) * chunk);
      for (std::size_t d = c * chunk; d < end; ++d) {
        for (Index i = 0; i < rank; ++i) u[i] = rng.normal();
        z.noalias() = factor * u;
        out[d] = z.cwiseAbs().maxCoeff();
      }
    });
  }
  return EmpiricalDistribution(std::move(out));
}

VarRecursion::VarRecursion(const VarModel& model) : n_(model.n()), k_(model.k()) {
  for (Index row = 0; row < n_; ++row) {
    for (Index lag = 0; lag < k_; ++lag) {
      const Matrix& a = model.a_mats[static_cast<std::size_t>(lag)];
      for (Index col = 0; col < n_; ++col) {
        if (a(row, col) != 0.0) terms_.push_back({row, lag + 1, col, a(row, col)});
      }
    }
  }
}

void VarRecursion::propagate(Matrix& path, Index first, const Eigen::Ref<const Matrix>& innovations) const {
  if (first < k_) throw Error(ErrorKind::shape, "VAR recursion: fewer initial rows than lags");
  if (path.cols() != n_ || innovations.cols() != n_ || innovations.rows() < path.rows() - first) {
    throw Error(ErrorKind::shape, "VAR recursion: path/innovation shape mismatch");
  }
  Vector acc(n_);
  for (Index t = first; t < path.rows(); ++t) {
    acc.setZero();
    for (const Term& term : terms_) acc[term.row] += term.value * path(t - term.lag, term.col);
    for (Index j = 0; j < n_; ++j) path(t, j) = acc[j] + innovations(t - first, j);
  }
}

}  // namespace hdvb
