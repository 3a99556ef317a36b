#pragma once

#include "hdvb/types.hpp"

#include <cstdint>
#include <optional>

namespace hdvb {

enum class ErrorFamily { gaussian, scaled_student_t, rademacher_scaled };

const char* to_string(ErrorFamily family) noexcept;
ErrorFamily parse_error_family(std::string_view text);

/// Innovation law. Student-t draws are rescaled to unit variance before the
/// sigma_eps factor is applied, so the realized covariance targets sigma_eps.
struct ErrorSpec {
  ErrorFamily family = ErrorFamily::gaussian;
  int dof = 6;
  /// Empty means identity.
  Matrix sigma_eps;
};

enum class PatternKind { banded, random_support, diagonal };

const char* to_string(PatternKind kind) noexcept;
PatternKind parse_pattern_kind(std::string_view text);

struct SparsePattern {
  PatternKind kind = PatternKind::diagonal;
  Index per_row_nonzeros = 1;
  double magnitude = 0.5;
  /// Entry sizes are magnitude * (1 - jitter + jitter * u), u ~ U(0, 1); 0 makes them equal.
  double jitter = 0.5;
  /// Entries at lag l are scaled by decay^(l-1).
  double decay_across_lags = 0.5;
};

/// Random sparse VAR(k) whose companion spectral radius is target_rho
/// (within 1e-6). Deterministic in seed.
VarModel generate_var_model(Index n, Index k, const SparsePattern& pattern, double target_rho, std::uint64_t seed);

/// Multiplies all coefficients by one common factor so that the companion
/// spectral radius equals target (> 0). Exact for K = 1, bisection otherwise.
VarModel rescale_to_radius(const VarModel& model, double target, double tol = 1e-9);

struct SimulatedPanel {
  TimeSeriesPanel panel;
  /// T x N innovations aligned with the estimation rows.
  Matrix errors;
};

/// burn-in used when none is given: 200 + 10 K.
Index default_burn_in(Index k);

/// Simulates x_t = sum_k A_k x_{t-k} + e_t from zero initial values and keeps
/// the final K + T rows. Innovations of step s (s < 0 during burn-in, s = 0
/// for the first returned row) come from their own counter stream, so runs
/// with different burn-in lengths share the innovations of the kept rows.
SimulatedPanel simulate_panel(const VarModel& model, Index t_obs, const ErrorSpec& errors,
                              std::optional<Index> burn_in, std::uint64_t seed);

/// Innovation rows for steps [first_step, first_step + rows).
Matrix draw_innovations(const ErrorSpec& errors, Index n, std::int64_t first_step, Index rows,
                        std::uint64_t seed);

}  // namespace hdvb
