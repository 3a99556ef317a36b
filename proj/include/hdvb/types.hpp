#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hdvb {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws ErrorKind::input if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what);

/// Throws ErrorKind::shape unless m is rows x cols.
void require_shape(const Eigen::Ref<const Matrix>& m, Index rows, Index cols, std::string_view what);

/// Observed data block: k_presample presample rows followed by t_obs
/// estimation rows, one column per series, oldest row first.
class TimeSeriesPanel {
 public:
  TimeSeriesPanel() = default;
  TimeSeriesPanel(Matrix data, Index k_presample, std::vector<std::string> labels = {});

  const Matrix& data() const noexcept { return data_; }
  Index t_obs() const noexcept { return data_.rows() - k_presample_; }
  Index k_presample() const noexcept { return k_presample_; }
  Index n_series() const noexcept { return data_.cols(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// The t_obs estimation rows.
  auto estimation_rows() const { return data_.bottomRows(t_obs()); }
  auto presample_rows() const { return data_.topRows(k_presample_); }

  /// Adds `shift` to every row (presample included) of one series.
  void shift_series(Index series, double shift);

 private:
  Matrix data_;
  Index k_presample_ = 0;
  std::vector<std::string> labels_;
};

/// Coefficients A_1..A_K of a VAR(K).
struct VarModel {
  std::vector<Matrix> a_mats;
  bool corrected = false;
  /// Multiplicative shrinkage applied by stationarity correction, in (0, 1].
  double correction_factor = 1.0;

  VarModel() = default;
  explicit VarModel(std::vector<Matrix> mats);

  Index n() const noexcept { return a_mats.empty() ? 0 : a_mats.front().rows(); }
  Index k() const noexcept { return static_cast<Index>(a_mats.size()); }

  /// N x (K*N) block [A_1 ... A_K]; row j is the coefficient vector of equation j.
  Matrix stacked() const;
  static VarModel from_stacked(const Eigen::Ref<const Matrix>& stacked, Index k);

  static VarModel zeros(Index n, Index k);
};

enum class StatisticMode { abs_max, max, min };

const char* to_string(StatisticMode mode) noexcept;
StatisticMode parse_statistic_mode(std::string_view text);

}  // namespace hdvb
