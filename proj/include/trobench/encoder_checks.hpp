#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trobench/encoder.hpp"

namespace trobench::encoder {

struct CheckResult {
  std::string name;
  bool passed{false};
  std::string detail;
};

/// Sample counts and tolerances used by run_encoder_checks.
struct CheckSettings {
  double rho{0.3};             // operating point for the sensitivity check
  int forward_passes{20};      // reduction / affinity / attention rows
  int elimination_passes{50};
  int gate_points{100};
  double fd_step{1e-5};
  double reduction_tol{1e-12};
  double affinity_tol{1e-9};
  double gradient_rel_tol{1e-6};
  double rho_sensitivity_rel_tol{1e-6};
  double attention_row_tol{1e-12};
};

/// Runs the seven encoder invariants on seeds derived from `seed`:
/// reduction at rho = 0, affinity in rho, gate range, elimination bookkeeping,
/// attention row sums, gate gradient and rho sensitivity.
std::vector<CheckResult> run_encoder_checks(std::uint64_t seed, const CheckSettings& settings = {});

struct RhoSweepRow {
  double rho;
  double reduction_residual;  // |F(0) extrapolated from F(rho), F(rho/2)| vs P(Hd_n)
  double affinity_residual;   // |F(rho) - ((1 - rho) F(0) + rho F(1))|
  double feature_norm;        // Frobenius norm of F(rho)
};

/// 0.1, 0.2, ..., 1.0
std::vector<double> default_rho_grid();

/// Throws EncoderError when a rho lies outside [0, 1].
std::vector<RhoSweepRow> rho_sweep(const std::vector<double>& rhos, std::uint64_t seed,
                                   const EncoderConfig& base = {});

}  // namespace trobench::encoder
