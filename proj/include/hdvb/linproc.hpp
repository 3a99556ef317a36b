#pragma once

#include "hdvb/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hdvb {

/// (K*N) x (K*N) companion form of a VAR(K): [A_1 ... A_K] on top, identity
/// blocks on the block subdiagonal, zeros elsewhere.
struct CompanionMatrix {
  Matrix inner;
  Index n = 0;
  Index k = 0;
};

CompanionMatrix build_companion(std::span<const Matrix> a_mats);
CompanionMatrix build_companion(const VarModel& model);

struct SpectralRadiusOptions {
  double tol = 1e-12;
  /// Dense route: QR sweeps per row. Norm route: number of squarings.
  int max_iter = 64;
  /// Matrices with side above this use the Gelfand-norm route.
  Index dense_cutoff = 512;
};

/// Largest absolute eigenvalue. Throws NonConvergenceError (carrying the
/// best estimate) if the chosen route fails to converge.
double spectral_radius(const Eigen::Ref<const Matrix>& m, const SpectralRadiusOptions& opts = {});

/// Spectral radius of the model's companion matrix.
double companion_radius(const VarModel& model, const SpectralRadiusOptions& opts = {});

/// Moving-average coefficients B_0..B_L of an inverted VAR.
struct VmaSequence {
  std::vector<Matrix> coeffs;
  Index truncation_lag = 0;
  /// Bound on sum_{j > L} ||B_j||_inf from the geometric envelope.
  double tail_bound = 0.0;
  /// Envelope ||B_j||_inf <= psi * lambda^j, j <= L.
  double envelope_psi = 1.0;
  double envelope_lambda = 0.0;
  double spectral_radius = 0.0;
  /// The lag cap stopped the expansion before the tolerance was met.
  bool truncated_by_cap = false;
};

/// B_k = top-left N x N block of A^k for the companion A, expanded until the
/// last K coefficients all have infinity norm below `tol`. A zero
/// `max_lag_cap` selects 10 * ceil(log(tol) / log(rho)).
VmaSequence vma_from_var(const VarModel& model, double tol = 1e-10, Index max_lag_cap = 0);

/// (I - sum_k A_k)^{-1} by a direct solve.
Matrix long_run_matrix(const VarModel& model);

/// b1 * sigma_eps * b1', symmetrized.
Matrix long_run_covariance(const Eigen::Ref<const Matrix>& b1, const Eigen::Ref<const Matrix>& sigma_eps);

/// Row-wise infinity norm.
double inf_norm(const Eigen::Ref<const Matrix>& m);
double max_norm(const Eigen::Ref<const Matrix>& m);

/// sqrt(T) * column means over the estimation rows.
Vector scaled_means(const TimeSeriesPanel& panel);

/// Reduces per-series means to the scalar statistic: max_j |sqrt(T) m_j|,
/// max_j sqrt(T) m_j or min_j sqrt(T) m_j. Shared by the observed and the
/// bootstrap statistic so both are evaluated identically.
double statistic_from_means(const Eigen::Ref<const Vector>& means, Index t_obs, StatisticMode mode);

double max_mean_statistic(const TimeSeriesPanel& panel, StatisticMode mode);

/// Sorted sample of a scalar statistic.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples);

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }

  /// Order statistic number ceil(p * n) (1-based); p = 0 gives the minimum.
  double quantile(double p) const;
  /// Fraction of samples <= y.
  double cdf(double y) const;

 private:
  std::vector<double> samples_;
};

/// Index (0-based) of the ceil(n * level) order statistic, clamped to [0, n-1].
std::size_t order_statistic_index(std::size_t n, double level);

/// Realizations of ||z||_inf for z ~ N(0, sigma). Draws are split into fixed
/// chunks with their own counter streams, so the output does not depend on
/// `threads`.
EmpiricalDistribution gaussian_max_sample(const Eigen::Ref<const Matrix>& sigma, std::size_t draws,
                                          std::uint64_t seed, unsigned threads = 1);

/// Lower-triangular-by-pivot factor F (N x rank) with F F' = sigma up to
/// the truncation tolerance 1e-12 * ||sigma||_max. Throws ErrorKind::not_psd
/// when sigma has an eigenvalue below -1e-10 * ||sigma||_max.
Matrix psd_factor(const Eigen::Ref<const Matrix>& sigma);

/// sup_y |F_a(y) - F_b(y)| over the merged jump points.
double kolmogorov_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);

/// Sparse form of a VAR used by the simulation and bootstrap recursions.
/// step() sums the nonzero terms in (lag, column) order.
class VarRecursion {
 public:
  explicit VarRecursion(const VarModel& model);

  Index n() const noexcept { return n_; }
  Index k() const noexcept { return k_; }

  /// path rows [0, first) are initial values; fills rows first..end-1 with
  /// x_t = sum_k A_k x_{t-k} + innovations(t - first).
  void propagate(Matrix& path, Index first, const Eigen::Ref<const Matrix>& innovations) const;

 private:
  struct Term {
    Index row;
    Index lag;
    Index col;
    double value;
  };
  Index n_;
  Index k_;
  std::vector<Term> terms_;
};

}  // namespace hdvb
