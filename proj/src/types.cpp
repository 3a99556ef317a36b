#include "hdvb/types.hpp"

#include "hdvb/error.hpp"

#include <cmath>
#include <sstream>

namespace hdvb {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape: return "shape";
    case ErrorKind::config: return "config";
    case ErrorKind::input: return "input";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::not_psd: return "not_psd";
    case ErrorKind::singular: return "singular";
    case ErrorKind::non_stationary: return "non_stationary";
    case ErrorKind::estimation: return "estimation";
    case ErrorKind::bootstrap: return "bootstrap";
  }
  return "unknown";
}

void require_finite(const Eigen::Ref<const Matrix>& m, std::string_view what) {
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) {
      if (!std::isfinite(m(r, c))) {
        std::ostringstream os;
        os << what << ": non-finite entry at (" << r << ", " << c << ")";
        throw Error(ErrorKind::input, os.str());
      }
    }
  }
}

void require_shape(const Eigen::Ref<const Matrix>& m, Index rows, Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
    throw Error(ErrorKind::shape, os.str());
  }
}

TimeSeriesPanel::TimeSeriesPanel(Matrix data, Index k_presample, std::vector<std::string> labels)
    : data_(std::move(data)), k_presample_(k_presample), labels_(std::move(labels)) {
  if (k_presample_ < 0 || k_presample_ > data_.rows()) {
    throw Error(ErrorKind::shape, "panel: presample row count exceeds data rows");
  }
  if (!labels_.empty() && static_cast<Index>(labels_.size()) != data_.cols()) {
    throw Error(ErrorKind::shape, "panel: label count does not match series count");
  }
  require_finite(data_, "panel");
}

void TimeSeriesPanel::shift_series(Index series, double shift) {
  data_.col(series).array() += shift;
}

VarModel::VarModel(std::vector<Matrix> mats) : a_mats(std::move(mats)) {
  if (a_mats.empty()) throw Error(ErrorKind::shape, "VAR model needs at least one lag");
  const Index n = a_mats.front().rows();
  for (const auto& a : a_mats) {
    require_shape(a, n, n, "VAR coefficient matrix");
    require_finite(a, "VAR coefficient matrix");
  }
}

Matrix VarModel::stacked() const {
  const Index nn = n();
  Matrix out(nn, nn * k());
  for (Index l = 0; l < k(); ++l) out.middleCols(l * nn, nn) = a_mats[static_cast<std::size_t>(l)];
  return out;
}

VarModel VarModel::from_stacked(const Eigen::Ref<const Matrix>& stacked, Index k) {
  const Index nn = stacked.rows();
  require_shape(stacked, nn, nn * k, "stacked VAR coefficients");
  std::vector<Matrix> mats;
  mats.reserve(static_cast<std::size_t>(k));
  for (Index l = 0; l < k; ++l) mats.emplace_back(stacked.middleCols(l * nn, nn));
  return VarModel(std::move(mats));
}

VarModel VarModel::zeros(Index n, Index k) {
  return VarModel(std::vector<Matrix>(static_cast<std::size_t>(k), Matrix::Zero(n, n)));
}

const char* to_string(StatisticMode mode) noexcept {
  switch (mode) {
    case StatisticMode::abs_max: return "abs_max";
    case StatisticMode::max: return "max";
    case StatisticMode::min: return "min";
  }
  return "abs_max";
}

StatisticMode parse_statistic_mode(std::string_view text) {
  if (text == "abs" || text == "abs_max") return StatisticMode::abs_max;
  if (text == "max") return StatisticMode::max;
  if (text == "min") return StatisticMode::min;
  throw Error(ErrorKind::config, "unknown statistic mode '" + std::string(text) + "'");
}

}  // namespace hdvb
