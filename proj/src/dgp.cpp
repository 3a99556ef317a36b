#include "hdvb/dgp.hpp"

#include "hdvb/error.hpp"
#include "hdvb/linproc.hpp"
#include "hdvb/rng.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace hdvb {

const char* to_string(ErrorFamily family) noexcept {
  switch (family) {
    case ErrorFamily::gaussian: return "gaussian";
    case ErrorFamily::scaled_student_t: return "student_t";
    case ErrorFamily::rademacher_scaled: return "rademacher";
  }
  return "gaussian";
}

ErrorFamily parse_error_family(std::string_view text) {
  if (text == "gaussian") return ErrorFamily::gaussian;
  if (text == "student_t" || text == "t" || text == "scaled_student_t") return ErrorFamily::scaled_student_t;
  if (text == "rademacher" || text == "rademacher_scaled") return ErrorFamily::rademacher_scaled;
  throw Error(ErrorKind::config, "unknown error family '" + std::string(text) + "'");
}

const char* to_string(PatternKind kind) noexcept {
  switch (kind) {
    case PatternKind::banded: return "banded";
    case PatternKind::random_support: return "random";
    case PatternKind::diagonal: return "diagonal";
  }
  return "diagonal";
}

PatternKind parse_pattern_kind(std::string_view text) {
  if (text == "banded") return PatternKind::banded;
  if (text == "random" || text == "random_support") return PatternKind::random_support;
  if (text == "diagonal") return PatternKind::diagonal;
  throw Error(ErrorKind::config, "unknown sparsity pattern '" + std::string(text) + "'");
}

VarModel rescale_to_radius(const VarModel& model, double target, double tol) {
  if (!(target > 0.0)) throw Error(ErrorKind::config, "rescale_to_radius: target must be positive");
  const double rho0 = companion_radius(model);
  if (rho0 == 0.0) throw Error(ErrorKind::config, "coefficient pattern has a nilpotent companion matrix");

  auto scaled = [&](double c) {
    VarModel out = model;
    for (auto& a : out.a_mats) a *= c;
    out.corrected = false;
    out.correction_factor = 1.0;
    return out;
  };

  if (model.k() == 1) {
    VarModel out = scaled(target / rho0);
    if (std::abs(companion_radius(out) - target) <= 1e-6) return out;
  }

  double lo = 0.0;
  double hi = target / rho0;
  for (int i = 0; i < 64 && companion_radius(scaled(hi)) < target; ++i) hi *= 2.0;
  double mid = hi;
  for (int i = 0; i < 200; ++i) {
    mid = 0.5 * (lo + hi);
    const double rho = companion_radius(scaled(mid));
    if (std::abs(rho - target) <= tol) break;
    (rho < target ? lo : hi) = mid;
  }
  return scaled(mid);
}

VarModel generate_var_model(Index n, Index k, const SparsePattern& pattern, double target_rho, std::uint64_t seed) {
  if (n < 1 || k < 1) throw Error(ErrorKind::config, "generate_var_model: n and k must be >= 1");
  if (!(target_rho > 0.0 && target_rho < 1.0)) {
    throw Error(ErrorKind::config, "generate_var_model: target_rho must lie in (0, 1)");
  }
  if (pattern.per_row_nonzeros < 1 || pattern.per_row_nonzeros > n * k) {
    std::ostringstream os;
    os << "generate_var_model: per_row_nonzeros " << pattern.per_row_nonzeros << " outside [1, N*K = " << n * k
       << "]";
    throw Error(ErrorKind::config, os.str());
  }
  if (!(pattern.jitter >= 0.0 && pattern.jitter < 1.0)) {
    throw Error(ErrorKind::config, "generate_var_model: jitter must lie in [0, 1)");
  }
  if (!(pattern.decay_across_lags > 0.0 && pattern.decay_across_lags <= 1.0)) {
    throw Error(ErrorKind::config, "generate_var_model: decay_across_lags must lie in (0, 1]");
  }

  CounterRng rng(stream_key(seed, 0x6d6f64656cULL));
  auto draw = [&](Index lag, bool positive) {
    const double size = pattern.magnitude * (1.0 - pattern.jitter + pattern.jitter * rng.uniform()) *
                        std::pow(pattern.decay_across_lags, static_cast<double>(lag));
    if (positive) return size;
    return rng.uniform() < 0.5 ? -size : size;
  };

  std::vector<Matrix> mats(static_cast<std::size_t>(k), Matrix::Zero(n, n));
  const Index p = pattern.per_row_nonzeros;
  for (Index row = 0; row < n; ++row) {
    switch (pattern.kind) {
      case PatternKind::diagonal:
        for (Index lag = 0; lag < std::min(k, p); ++lag) mats[static_cast<std::size_t>(lag)](row, row) = draw(lag, true);
        break;
      case PatternKind::banded:
        // Offsets 0, +1, -1, +2, -2, ... (cyclic) within a lag, lag 1 first.
        for (Index o = 0; o < p; ++o) {
          const Index lag = o / n;
          const Index step = o % n;
          const Index offset = (step % 2 == 1) ? (step + 1) / 2 : -(step / 2);
          const Index col = ((row + offset) % n + n) % n;
          mats[static_cast<std::size_t>(lag)](row, col) = draw(lag, offset == 0);
        }
        break;
      case PatternKind::random_support: {
        std::vector<Index> slots(static_cast<std::size_t>(n * k));
        std::iota(slots.begin(), slots.end(), Index{0});
        for (Index i = 0; i < p; ++i) {
          const auto span = static_cast<std::uint64_t>(n * k - i);
          const Index pick = i + static_cast<Index>(rng() % span);
          std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(pick)]);
          const Index slot = slots[static_cast<std::size_t>(i)];
          const Index lag = slot / n;
          mats[static_cast<std::size_t>(lag)](row, slot % n) = draw(lag, false);
        }
        break;
      }
    }
  }
  return rescale_to_radius(VarModel(std::move(mats)), target_rho);
}

Index default_burn_in(Index k) { return 200 + 10 * k; }

Matrix draw_innovations(const ErrorSpec& errors, Index n, std::int64_t first_step, Index rows, std::uint64_t seed) {
  if (errors.family == ErrorFamily::scaled_student_t && errors.dof <= 4) {
    throw Error(ErrorKind::config, "student-t innovations need dof > 4");
  }
  const bool identity = errors.sigma_eps.size() == 0;
  Matrix factor;
  if (!identity) {
    require_shape(errors.sigma_eps, n, n, "sigma_eps");
    factor = psd_factor(errors.sigma_eps);
  }
  const Index width = identity ? n : factor.cols();
  const double t_scale =
      errors.family == ErrorFamily::scaled_student_t ? std::sqrt((errors.dof - 2.0) / errors.dof) : 1.0;

  Matrix out(rows, n);
  Vector u(width);
  for (Index r = 0; r < rows; ++r) {
    CounterRng rng(stream_key(seed, static_cast<std::uint64_t>(first_step + r)));
    for (Index j = 0; j < width; ++j) {
      switch (errors.family) {
        case ErrorFamily::gaussian:
          u[j] = rng.normal();
          break;
        case ErrorFamily::scaled_student_t: {
          const double z = rng.normal();
          double chi2 = 0.0;
          for (int d = 0; d < errors.dof; ++d) {
            const double g = rng.normal();
            chi2 += g * g;
          }
          u[j] = t_scale * z / std::sqrt(chi2 / errors.dof);
          break;
        }
        case ErrorFamily::rademacher_scaled:
          u[j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
          break;
      }
    }
    if (identity) {
      out.row(r) = u.transpose();
    } else {
      out.row(r) = (factor * u).transpose();
    }
  }
  return out;
}

SimulatedPanel simulate_panel(const VarModel& model, Index t_obs, const ErrorSpec& errors,
                              std::optional<Index> burn_in, std::uint64_t seed) {
  const Index n = model.n();
  const Index k = model.k();
  if (t_obs < 1) throw Error(ErrorKind::config, "simulate_panel: t_obs must be >= 1");
  const Index burn = burn_in.value_or(default_burn_in(k));
  if (burn < 0) throw Error(ErrorKind::config, "simulate_panel: burn_in must be >= 0");
  const double rho = companion_radius(model);
  if (rho >= 1.0) {
    std::ostringstream os;
    os << "simulate_panel: model is not stationary (companion spectral radius " << rho << ")";
    throw Error(ErrorKind::non_stationary, os.str());
  }

  const Index steps = burn + k + t_obs;
  const Matrix innov = draw_innovations(errors, n, -static_cast<std::int64_t>(burn), steps, seed);
  Matrix path = Matrix::Zero(k + steps, n);
  VarRecursion(model).propagate(path, k, innov);

  SimulatedPanel out{TimeSeriesPanel(path.bottomRows(k + t_obs), k), innov.bottomRows(t_obs)};
  return out;
}

}  // namespace hdvb
