#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "svct/common.hpp"
#include "svct/degrade.hpp"
#include "svct/image.hpp"
#include "svct/metrics.hpp"
#include "svct/restorer.hpp"

namespace svct {

struct SpdpsConfig {
  int total_steps = 10;  // N, the restorer-call budget
  int refine_steps = 4;  // m, detail-refinement calls
  double tau = 0.97;     // SSIM reset threshold

  int semantic_steps() const { return total_steps - refine_steps; }

  void validate() const {
    if (refine_steps < 1 || total_steps <= refine_steps)
      throw ConfigError("spdps: need total_steps > refine_steps >= 1");
    // tau == 1 is allowed as an explicit "never reset" setting.
    if (!(tau > 0.0 && tau <= 1.0))
      throw ConfigError("spdps: tau must be in (0, 1]");
  }
};

struct StepRecord {
  int step = 0;  // 1-based restorer-call index
  int level_before = 0;
  int level_after = 0;
  // SSIM between this call's estimate and the previous one; NaN on the first.
  double ssim_prev = std::numeric_limits<double>::quiet_NaN();
  bool reset = false;  // a severity reset followed this call
};

struct SampleTrace {
  std::vector<StepRecord> steps;
  std::vector<Image> estimates;  // x0-estimate after each restorer call
  Image final;
  int nfe = 0;  // restorer calls
  bool early_termination = false;

  void push(StepRecord rec, Image estimate) {
    steps.push_back(rec);
    estimates.push_back(std::move(estimate));
  }
};

struct StepResult {
  Image next;    // x_{t-1}
  Image x0_hat;  // the restorer's clean-image estimate
};

/// One reverse update: estimate the clean image, then swap the level-t
/// degradation for the level-(t-1) one. At t = 1 the estimate itself is the
/// output (a step "to level 0" adds no information). The arithmetic is grouped
/// as (x_t - D(x0_hat, t)) + D(x0_hat, t-1) so a perfect estimate of an exact
/// level-t input cancels bit-exactly.
inline StepResult sample_step(const Image& x_t, int t, const Restorer& restorer,
                              const DegradeConfig& dcfg) {
  if (t < 1 || t > dcfg.severity.t_max())
    throw ConfigError("sample_step: level must be in [1, t_max]");
  StepResult out;
  out.x0_hat = restorer.restore(x_t, t);
  require_same_grid(out.x0_hat, x_t, "sample_step");
  if (t == 1) {
    out.next = out.x0_hat;
    return out;
  }
  Image residual = x_t;
  residual.data -= degrade(out.x0_hat, t, dcfg).data;
  out.next = degrade(out.x0_hat, t - 1, dcfg);
  out.next.data += residual.data;
  return out;
}

/// Plain reverse schedule t = T, T-1, ..., 1. NFE = T; the final image is the
/// last estimate.
inline SampleTrace sequential_sample(const Image& x_T, int T,
                                     const Restorer& restorer,
                                     const DegradeConfig& dcfg) {
  if (T < 1 || T > dcfg.severity.t_max())
    throw ConfigError("sequential_sample: level must be in [1, t_max]");
  SampleTrace trace;
  Image x = x_T;
  for (int t = T; t >= 1; --t) {
    StepResult sr = sample_step(x, t, restorer, dcfg);
    StepRecord rec;
    rec.step = static_cast<int>(trace.steps.size()) + 1;
    rec.level_before = t;
    rec.level_after = t - 1;
    if (!trace.estimates.empty())
      rec.ssim_prev = compute_ssim(sr.x0_hat, trace.estimates.back());
    trace.push(rec, std::move(sr.x0_hat));
    x = std::move(sr.next);
  }
  trace.final = trace.estimates.back();
  trace.nfe = static_cast<int>(trace.steps.size());
  return trace;
}

/// Dual-phase sampling. Phase 1 (semantic, n = N - m calls) runs the
/// sequential schedule from T but, whenever two consecutive estimates agree
/// (SSIM > tau), resets to the decremented working top level:
///   x' = x_top - D(x0_hat, W) + D(x0_hat, W-1),  W <- W-1,
/// where x_top is the most recent image at the working top level. Phase 2
/// relabels the phase-1 output to level m and runs m plain steps. Every
/// restorer call counts as one step, so NFE = N.
///
/// If the level reaches 0 before the budget is spent (possible only when
/// n > T and no resets fire), the estimate is already final: sampling stops
/// with early_termination flagged.
inline SampleTrace spdps_sample(const Image& x_T, int T,
                                const Restorer& restorer,
                                const DegradeConfig& dcfg,
                                const SpdpsConfig& scfg) {
  if (T < 1 || T > dcfg.severity.t_max())
    throw ConfigError("spdps_sample: level must be in [1, t_max]");
  scfg.validate();

  SampleTrace trace;
  Image x = x_T;
  Image top_image = x_T;  // most recent image at the working top level
  int working_top = T;
  int level = T;

  const int n = scfg.semantic_steps();
  for (int call = 0; call < n; ++call) {
    if (level < 1) {
      trace.early_termination = true;
      break;
    }
    StepResult sr = sample_step(x, level, restorer, dcfg);
    StepRecord rec;
    rec.step = static_cast<int>(trace.steps.size()) + 1;
    rec.level_before = level;
    rec.level_after = level - 1;
    if (!trace.estimates.empty())
      rec.ssim_prev = compute_ssim(sr.x0_hat, trace.estimates.back());
    x = std::move(sr.next);
    level -= 1;

    if (!std::isnan(rec.ssim_prev) && rec.ssim_prev > scfg.tau &&
        working_top >= 2) {
      Image residual = top_image;
      residual.data -= degrade(sr.x0_hat, working_top, dcfg).data;
      Image reset_image = degrade(sr.x0_hat, working_top - 1, dcfg);
      reset_image.data += residual.data;
      working_top -= 1;
      top_image = reset_image;
      x = std::move(reset_image);
      level = working_top;
      rec.reset = true;
      rec.level_after = level;
    }
    trace.push(rec, std::move(sr.x0_hat));
  }

  if (!trace.early_termination) {
    // Detail refinement: the semantic-phase output is treated as a level-m
    // input; records continue in the same trace.
    level = scfg.refine_steps;
    for (int t = level; t >= 1; --t) {
      StepResult sr = sample_step(x, t, restorer, dcfg);
      StepRecord rec;
      rec.step = static_cast<int>(trace.steps.size()) + 1;
      rec.level_before = t;
      rec.level_after = t - 1;
      if (!trace.estimates.empty())
        rec.ssim_prev = compute_ssim(sr.x0_hat, trace.estimates.back());
      trace.push(rec, std::move(sr.x0_hat));
      x = std::move(sr.next);
    }
  }

  trace.final = trace.estimates.back();
  trace.nfe = static_cast<int>(trace.steps.size());
  return trace;
}

}  // namespace svct
