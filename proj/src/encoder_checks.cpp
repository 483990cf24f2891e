#include "trobench/encoder_checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace trobench::encoder {

namespace {

std::string sci(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Sample {
  EncoderConfig cfg;
  EncoderParams params;
  EncoderTrace trace;
};

Sample make_sample(std::uint64_t seed, double rho = 0.3) {
  Sample s;
  s.cfg.seed = seed;
  s.cfg.rho = rho;
  s.params = init_params(s.cfg);
  const auto [t, x] = random_inputs(s.cfg, seed);
  s.trace = encoder_trace(t, x, s.params, s.cfg);
  return s;
}

Matrix f_at(const Sample& s, double rho) {
  return aggregate_eq1(s.trace.ce.features, s.trace.ce.mask, s.trace.levels, s.params.gates, rho)
      .tokens;
}

TokenMap random_map(std::mt19937_64& rng, int n_template, int n_search, int dim, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  TokenMap m;
  m.n_template = n_template;
  m.n_search = n_search;
  m.tokens.resize(n_template + n_search, dim);
  for (Eigen::Index i = 0; i < m.tokens.size(); ++i) m.tokens.data()[i] = dist(rng);
  return m;
}

CheckResult check_reduction(std::uint64_t seed, const CheckSettings& cs) {
  double worst = 0.0;
  for (int i = 0; i < cs.forward_passes; ++i) {
    const Sample s = make_sample(seed + static_cast<std::uint64_t>(i), 0.0);
    worst = std::max(worst, max_abs_diff(s.trace.output.tokens, s.trace.restored.tokens));
  }
  return {"reduction: rho=0 yields P(Hd_n)", worst <= cs.reduction_tol,
          "max abs diff " + sci(worst)};
}

CheckResult check_affinity(std::uint64_t seed, const CheckSettings& cs) {
  double worst = 0.0;
  for (int i = 0; i < cs.forward_passes; ++i) {
    const Sample s = make_sample(seed + static_cast<std::uint64_t>(i));
    const Matrix mid = f_at(s, 0.5);
    const Matrix ends = 0.5 * (f_at(s, 0.0) + f_at(s, 1.0));
    worst = std::max(worst, max_abs_diff(mid, ends));
  }
  return {"affinity: F(0.5) = (F(0) + F(1)) / 2", worst <= cs.affinity_tol,
          "max abs diff " + sci(worst)};
}

CheckResult check_gate_range(std::uint64_t seed, const CheckSettings& cs) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  bool ok = true;
  double lo = 1.0;
  double hi = 0.0;
  for (int i = 0; i < cs.gate_points; ++i) {
    const TokenMap h = random_map(rng, 4, 8, 16, 10.0);
    GateParams g{Vector::NullaryExpr(16, [&] { return 3.0 * dist(rng); }), 5.0 * dist(rng)};
    const double v = gate(h, g);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ok = ok && v > 0.0 && v < 1.0;
  }
  for (int i = 0; i < cs.forward_passes; ++i) {
    for (double v : make_sample(seed + static_cast<std::uint64_t>(i)).trace.gate_values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ok = ok && v > 0.0 && v < 1.0;
    }
  }
  return {"gate range: G in (0, 1)", ok, "observed [" + sci(lo) + ", " + sci(hi) + "]"};
}

CheckResult check_elimination(std::uint64_t seed, const CheckSettings& cs) {
  std::string problem;
  for (int i = 0; i < cs.elimination_passes && problem.empty(); ++i) {
    const Sample s = make_sample(seed + static_cast<std::uint64_t>(i));
    const auto& ce = s.trace.ce;
    if (ce.features.n_template != s.trace.h0.n_template) {
      problem = "template tokens lost";
    }
    int current = s.trace.h0.n_search;
    for (int kept : ce.stage_survivors) {
      if (kept != survivor_count(s.cfg.keep_ratio, current)) {
        problem = "survivor count " + std::to_string(kept) + " from " + std::to_string(current);
      }
      current = kept;
    }
    if (!ce.mask.strictly_increasing() || ce.mask.size() != ce.features.n_search) {
      problem = "cumulative mask not strictly increasing";
    }
    // P(gather(M)) must reproduce kept rows and zero exactly the eliminated ones.
    std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(i));
    const TokenMap full = random_map(rng, s.trace.h0.n_template, s.trace.h0.n_search,
                                     s.cfg.dim, 1.0);
    const TokenMap back = pad_restore(gather(full, ce.mask), ce.mask, full.n_search);
    std::vector<bool> kept(static_cast<std::size_t>(full.n_search), false);
    for (int k : ce.mask.indices) kept[static_cast<std::size_t>(k)] = true;
    for (int r = 0; r < full.size() && problem.empty(); ++r) {
      const bool survives = r < full.n_template || kept[static_cast<std::size_t>(r - full.n_template)];
      const bool row_ok = survives ? back.tokens.row(r) == full.tokens.row(r)
                                   : back.tokens.row(r).isZero(0.0);
      if (!row_ok) {
        problem = "pad_restore row " + std::to_string(r) + " wrong";
      }
    }
  }
  return {"elimination: template kept, counts, masks, zero-fill", problem.empty(),
          problem.empty() ? std::to_string(cs.elimination_passes) + " passes" : problem};
}

CheckResult check_attention_rows(std::uint64_t seed, const CheckSettings& cs) {
  double worst = 0.0;
  for (int i = 0; i < cs.forward_passes; ++i) {
    for (const Matrix& a : make_sample(seed + static_cast<std::uint64_t>(i)).trace.ce.attentions) {
      worst = std::max(worst, (a.rowwise().sum().array() - 1.0).abs().maxCoeff());
    }
  }
  return {"attention rows sum to 1", worst <= cs.attention_row_tol, "max deviation " + sci(worst)};
}

CheckResult check_gate_gradient(std::uint64_t seed, const CheckSettings& cs) {
  std::mt19937_64 rng(seed + 7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < cs.gate_points; ++i) {
    const TokenMap h = random_map(rng, 4, 8, 16, 2.0);
    GateParams g{Vector::NullaryExpr(16, [&] { return dist(rng); }), dist(rng)};
    const GateGradient analytic = gate_gradient(h, g);
    Vector numeric(g.w.size() + 1);
    Vector exact(g.w.size() + 1);
    exact << analytic.dw, analytic.db;
    for (Eigen::Index j = 0; j <= g.w.size(); ++j) {
      double& p = j < g.w.size() ? g.w(j) : g.b;
      const double saved = p;
      p = saved + cs.fd_step;
      const double up = gate(h, g);
      p = saved - cs.fd_step;
      const double down = gate(h, g);
      p = saved;
      numeric(j) = (up - down) / (2.0 * cs.fd_step);
    }
    const double rel = (numeric - exact).norm() / std::max(exact.norm(), 1e-300);
    worst = std::max(worst, rel);
  }
  return {"gate gradient matches central differences", worst <= cs.gradient_rel_tol,
          "max relative error " + sci(worst)};
}

CheckResult check_rho_sensitivity(std::uint64_t seed, const CheckSettings& cs) {
  double worst = 0.0;
  for (int i = 0; i < cs.forward_passes; ++i) {
    const Sample s = make_sample(seed + static_cast<std::uint64_t>(i));
    // Keep both stencil points inside [0, 1].
    const double rho = std::clamp(cs.rho, cs.fd_step, 1.0 - cs.fd_step);
    const Matrix numeric =
        (f_at(s, rho + cs.fd_step) - f_at(s, rho - cs.fd_step)) / (2.0 * cs.fd_step);
    const Matrix exact = gated_sum(s.trace.levels, s.params.gates) - s.trace.restored.tokens;
    worst = std::max(worst, max_abs_diff(numeric, exact) / exact.cwiseAbs().maxCoeff());
  }
  return {"rho sensitivity: dF/drho = sum G*Hp_i - P(Hd_n)", worst <= cs.rho_sensitivity_rel_tol,
          "max relative error " + sci(worst)};
}

}  // namespace

std::vector<CheckResult> run_encoder_checks(std::uint64_t seed, const CheckSettings& settings) {
  std::vector<CheckResult> results;
  const auto guarded = [&](auto&& fn, const char* name) {
    try {
      results.push_back(fn(seed, settings));
    } catch (const std::exception& e) {
      results.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  guarded(check_reduction, "reduction");
  guarded(check_affinity, "affinity");
  guarded(check_gate_range, "gate range");
  guarded(check_elimination, "elimination");
  guarded(check_attention_rows, "attention rows");
  guarded(check_gate_gradient, "gate gradient");
  guarded(check_rho_sensitivity, "rho sensitivity");
  return results;
}

std::vector<double> default_rho_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<RhoSweepRow> rho_sweep(const std::vector<double>& rhos, std::uint64_t seed,
                                   const EncoderConfig& base) {
  for (double r : rhos) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw EncoderError("rho " + std::to_string(r) + " outside [0, 1]");
    }
  }
  EncoderConfig cfg = base;
  cfg.seed = seed;
  const EncoderParams params = init_params(cfg);
  const auto [t, x] = random_inputs(cfg, seed);
  const EncoderTrace trace = encoder_trace(t, x, params, cfg);
  const auto f = [&](double rho) {
    return aggregate_eq1(trace.ce.features, trace.ce.mask, trace.levels, params.gates, rho).tokens;
  };
  const Matrix f0 = f(0.0);
  const Matrix f1 = f(1.0);

  std::vector<RhoSweepRow> rows;
  for (double rho : rhos) {
    const Matrix fr = f(rho);
    const Matrix extrapolated = rho > 0.0 ? Matrix(2.0 * f(rho / 2.0) - fr) : fr;
    rows.push_back({rho, max_abs_diff(extrapolated, trace.restored.tokens),
                    max_abs_diff(fr, (1.0 - rho) * f0 + rho * f1), fr.norm()});
  }
  return rows;
}

}  // namespace trobench::encoder
