#include "dreamplan/mpc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#if defined(__AVX512F__) && defined(__AVX512DQ__) && defined(__AVX512VL__)
#include <immintrin.h>
#define DREAMPLAN_SIMD_SAMPLING 1
#endif

#include "dreamplan/error.hpp"
#include "dreamplan/mpc/score.hpp"
#include "dreamplan/net/mlp.hpp"
#include "dreamplan/rng.hpp"
#include "dreamplan/wm/rollout.hpp"

namespace dreamplan::mpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream tags (arbitrary, fixed) separating the draw families.
constexpr std::uint64_t kGaussTag = 0x6a05;
constexpr std::uint64_t kPolicyTag = 0x701c;
constexpr std::uint64_t kExtractTag = 0xe117;
constexpr std::uint64_t kStepTag = 0x97ab;

// All candidates of one round, columns aligned across the two matrices.
struct Pool {
  Mat commands;  // 3 x n
  Mat actions;   // (horizon * action_dim) x n, time-major
  std::vector<CandidateSource> source;

  int size() const { return static_cast<int>(commands.cols()); }
};

#ifdef DREAMPLAN_SIMD_SAMPLING

// Eight independent splitmix64 streams advanced in lockstep; each lane
// reproduces splitmix64_next bit-for-bit.
inline __m512i splitmix8(__m512i& state) {
  state = _mm512_add_epi64(
      state, _mm512_set1_epi64(static_cast<long long>(0x9e3779b97f4a7c15ULL)));
  __m512i z = state;
  z = _mm512_mullo_epi64(
      _mm512_xor_si512(z, _mm512_srli_epi64(z, 30)),
      _mm512_set1_epi64(static_cast<long long>(0xbf58476d1ce4e5b9ULL)));
  z = _mm512_mullo_epi64(
      _mm512_xor_si512(z, _mm512_srli_epi64(z, 27)),
      _mm512_set1_epi64(static_cast<long long>(0x94d049bb133111ebULL)));
  return _mm512_xor_si512(z, _mm512_srli_epi64(z, 31));
}

// (bits >> 11) + add, scaled by 2^-53 in double then narrowed — the same
// rounding chain as Rng::uniform / uniform_pos followed by a float cast.
inline __m256 unit_floats(__m512i bits, long long add) {
  const __m512i m =
      _mm512_add_epi64(_mm512_srli_epi64(bits, 11), _mm512_set1_epi64(add));
  const __m512d d =
      _mm512_mul_pd(_mm512_cvtepu64_pd(m), _mm512_set1_pd(0x1.0p-53));
  return _mm512_cvtpd_ps(d);
}

#endif  // DREAMPLAN_SIMD_SAMPLING

// Standard normals in float precision; column j comes from the stream
// (seed, tag, round, j). The per-draw definition matches Rng::gaussian
// (Box-Muller, cosine branch, two uniforms per variate) evaluated in float
// so the transcendentals run through vectorized packet math.
Eigen::MatrixXf normal_block(std::uint64_t seed, std::uint64_t tag,
                             std::uint64_t round, int rows, int cols) {
  Eigen::MatrixXf z(rows, cols);
  Eigen::MatrixXf u2(rows, cols);
  int j0 = 0;
#ifdef DREAMPLAN_SIMD_SAMPLING
  // Column streams are independent, so eight advance in lockstep and draws
  // land via strided scatter. Bitwise identical to the scalar loop below.
  const __m256i idx = _mm256_mullo_epi32(
      _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7), _mm256_set1_epi32(rows));
  for (; j0 + 8 <= cols; j0 += 8) {
    alignas(64) std::uint64_t seeds[8];
    for (int l = 0; l < 8; ++l) {
      seeds[l] =
          derive_seed(seed, tag, round, static_cast<std::uint64_t>(j0 + l));
    }
    __m512i state = _mm512_load_si512(seeds);
    float* zc = z.data() + static_cast<std::size_t>(j0) * rows;
    float* uc = u2.data() + static_cast<std::size_t>(j0) * rows;
    for (int i = 0; i < rows; ++i) {
      _mm256_i32scatter_ps(zc + i, idx, unit_floats(splitmix8(state), 1), 4);
      _mm256_i32scatter_ps(uc + i, idx, unit_floats(splitmix8(state), 0), 4);
    }
  }
#endif
  for (int j = j0; j < cols; ++j) {
    Rng rng(derive_seed(seed, tag, round, static_cast<std::uint64_t>(j)));
    for (int i = 0; i < rows; ++i) {
      z(i, j) = static_cast<float>(rng.uniform_pos());
      u2(i, j) = static_cast<float>(rng.uniform());
    }
  }
  constexpr float kTwoPi = 6.28318530717958647692f;
  z = ((z.array().log() * -2.0f).sqrt() * (u2.array() * kTwoPi).cos())
          .matrix();
  return z;
}

void clamp_command_rows(Mat& commands, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& deviation) {
  for (int r = 0; r < 3; ++r) {
    commands.row(r) = commands.row(r)
                          .cwiseMax(target(r) - deviation(r))
                          .cwiseMin(target(r) + deviation(r));
  }
}

// Double-precision jittered policy dream; op-for-op the float path's
// reference. Zero noise reproduces the bundle's deterministic dream.
Vec dream_policy_reference(const wm::DreamerBundle& bundle,
                           const env::ObsLayout& layout, const Vec& obs,
                           const Eigen::Vector3d& command, const Vec& noise,
                           int horizon) {
  const Eigen::Index ka = bundle.action_dim;
  Vec actions(horizon * ka);
  Vec current = wm::replace_command(layout, obs, command);
  Vec dyn_in(bundle.obs_dim + ka);
  for (int k = 0; k < horizon; ++k) {
    Vec action = net::mlp_forward(bundle.policy, current) +
                 noise.segment(k * ka, ka);
    action = action.cwiseMax(-bundle.action_bound).cwiseMin(bundle.action_bound);
    actions.segment(k * ka, ka) = action;
    dyn_in.head(bundle.obs_dim) = current;
    dyn_in.tail(ka) = action;
    Vec next = current + net::mlp_forward(bundle.dynamics, dyn_in);
    next.segment<3>(layout.command) = command;
    current = std::move(next);
  }
  return actions;
}

BatchScorer::Result score_reference(const wm::DreamerBundle& bundle,
                                    const ConstraintSpec& constraints,
                                    const PlannerConfig& config,
                                    const Vec& obs,
                                    const Eigen::Vector3d& target,
                                    const Pool& pool) {
  const int n = pool.size();
  const int ka = bundle.action_dim;
  BatchScorer::Result out;
  out.returns = Vec::Zero(n);
  out.constraint_values = Mat::Zero(static_cast<int>(constraints.size()), n);
  out.feasible.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    Eigen::Map<const Mat> acts(pool.actions.col(j).data(), ka, config.horizon);
    ScoredTrajectory scored = score_trajectory(
        bundle, obs, pool.commands.col(j), acts, constraints, target,
        config.discount, config.constraint_penalty);
    out.returns(j) = scored.ret;
    out.constraint_values.col(j) = scored.constraints;
    out.feasible[j] = scored.feasible ? 1 : 0;
  }
  return out;
}

// Total overshoot past the channel bounds; non-finite scores count as
// infinitely violating so they sort last and never produce NaN compares.
double violation_of(const ConstraintSpec& constraints, const Vec& values,
                    double ret) {
  if (!std::isfinite(ret) || !values.allFinite()) return kInf;
  double total = 0.0;
  for (int ch = 0; ch < values.size(); ++ch) {
    total += std::max(0.0, values(ch) - constraints[ch].bound);
  }
  return total;
}

// Strict candidate preference: feasibility, then violation, then return.
bool strictly_better(bool fa, double va, double ra, bool fb, double vb,
                     double rb) {
  if (fa != fb) return fa;
  if (va != vb) return va < vb;
  return ra > rb;
}

Candidate make_candidate(const Pool& pool, const BatchScorer::Result& scores,
                         const Vec& violations, int j, int round) {
  Candidate c;
  c.command = pool.commands.col(j);
  c.actions = pool.actions.col(j);
  c.ret = scores.returns(j);
  c.constraint_values = scores.constraint_values.col(j);
  c.violation = violations(j);
  c.feasible = scores.feasible[j] != 0;
  c.source = pool.source[j];
  c.iteration = round;
  return c;
}

Mat dream_as_matrix(const wm::DreamTrajectory& dream) {
  if (dream.observations.empty()) return Mat();
  const Eigen::Index p = dream.observations.front().size();
  Mat m(p, static_cast<Eigen::Index>(dream.observations.size()));
  for (std::size_t i = 0; i < dream.observations.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = dream.observations[i];
  }
  return m;
}

void refit(const PlannerConfig& config, const Pool& pool,
           const BatchScorer::Result& scores, const std::vector<int>& elite,
           GaussianPlan& g) {
  const Eigen::Index dim = g.mean.size();
  const int e = static_cast<int>(elite.size());
  Mat decisions(dim, e);
  Vec returns(e);
  for (int i = 0; i < e; ++i) {
    decisions.col(i).head<3>() = pool.commands.col(elite[i]);
    decisions.col(i).tail(dim - 3) = pool.actions.col(elite[i]);
    returns(i) = scores.returns(elite[i]);
  }
  refit_distribution(config, decisions, returns, g);
}

}  // namespace

void refit_distribution(const PlannerConfig& config, const Mat& decisions,
                        const Vec& returns, GaussianPlan& g) {
  const Eigen::Index dim = g.mean.size();
  const int e = static_cast<int>(decisions.cols());
  if (e < 1 || decisions.rows() != dim || returns.size() != e ||
      g.stddev.size() != dim) {
    throw ShapeError("elite refit shapes do not line up");
  }
  // Exponential weights relative to the best elite; shifting by the max
  // keeps exp() in range and gives the best candidate weight one. A
  // non-finite best (every elite's dream exploded) falls back to uniform.
  Vec w(e);
  const double rmax = returns.maxCoeff();
  if (!std::isfinite(rmax)) {
    w.setConstant(1.0 / e);
  } else {
    w = ((returns.array() - rmax) / config.temperature).exp().matrix();
    w /= w.sum();  // sum >= 1: the best elite has weight one
  }

  const Vec mu = decisions * w;
  Vec var = Vec::Zero(dim);
  for (int i = 0; i < e; ++i) {
    var += w(i) * (decisions.col(i) - mu).array().square().matrix();
  }
  const Vec sigma = var.cwiseSqrt();

  const double beta = config.momentum;
  g.mean = beta * mu + (1.0 - beta) * g.mean;
  g.stddev = (beta * sigma + (1.0 - beta) * g.stddev)
                 .cwiseMax(config.stddev_floor);
}

const char* source_name(CandidateSource s) {
  switch (s) {
    case CandidateSource::kGaussian:
      return "gaussian";
    case CandidateSource::kPolicy:
      return "policy";
    case CandidateSource::kCarryover:
      return "carryover";
    case CandidateSource::kMean:
      return "mean";
  }
  return "unknown";
}

PlanResult plan(const wm::DreamerBundle& bundle,
                const ConstraintSpec& constraints, const PlannerConfig& config,
                const Vec& obs, const Eigen::Vector3d& target,
                std::uint64_t seed, const GaussianPlan* warm) {
  config.validate();
  if (bundle.variant != wm::Variant::kNlm) {
    throw ValueError("planning requires an NLM bundle");
  }
  if (obs.size() != bundle.obs_dim) {
    throw ShapeError("observation does not match bundle obs_dim");
  }
  if (!obs.allFinite() || !target.allFinite()) {
    throw ValueError("plan() requires finite observation and target");
  }

  const env::ObsLayout layout(bundle.action_dim);
  const int ka = bundle.action_dim;
  const int hk = config.horizon * ka;
  const int dim = 3 + hk;
  const double bound = bundle.action_bound;

  GaussianPlan g;
  if (warm != nullptr) {
    if (warm->mean.size() != dim || warm->stddev.size() != dim) {
      throw ShapeError("warm start does not match [command | actions] shape");
    }
    g = *warm;
    g.stddev = g.stddev.cwiseMax(config.stddev_floor);
  } else {
    // Cold start: the cloned policy's own dream seeds the action mean.
    const wm::DreamTrajectory dream = wm::nlm_rollout(
        bundle, wm::replace_command(layout, obs, target), config.horizon);
    g.mean.resize(dim);
    g.mean.head<3>() = target;
    for (int k = 0; k < config.horizon; ++k) {
      g.mean.segment(3 + static_cast<Eigen::Index>(k) * ka, ka) =
          dream.actions[static_cast<std::size_t>(k)];
    }
    g.stddev.resize(dim);
    g.stddev.head<3>() = config.init_command_stddev;
    g.stddev.tail(hk).setConstant(config.init_action_stddev);
    g.stddev = g.stddev.cwiseMax(config.stddev_floor);
  }

  std::optional<BatchScorer> scorer;
  if (config.single_precision) {
    scorer.emplace(bundle, constraints, config, target);
  }

  PlanResult result;
  PlanDiagnostics& diag = result.diagnostics;
  Candidate best;
  bool has_best = false;

  const int m = config.gaussian_samples;
  const int mpi = config.policy_samples;

  Pool pool;
  for (int round = 0; round < config.iterations; ++round) {
    const bool carry = has_best;
    const int pool_n = m + mpi + (carry ? 1 : 0);
    pool.commands.resize(3, pool_n);
    pool.actions.resize(hk, pool_n);
    pool.source.assign(static_cast<std::size_t>(pool_n),
                       CandidateSource::kGaussian);

    if (m > 0) {
      const Eigen::MatrixXf z = normal_block(
          seed, kGaussTag, static_cast<std::uint64_t>(round), dim, m);
      auto cmds = pool.commands.leftCols(m);
      cmds = (z.topRows(3).cast<double>().array().colwise() *
              g.stddev.head<3>().array())
                 .matrix();
      cmds.colwise() += g.mean.head<3>();
      for (int r = 0; r < 3; ++r) {
        cmds.row(r) = cmds.row(r)
                          .cwiseMax(target(r) - config.command_deviation(r))
                          .cwiseMin(target(r) + config.command_deviation(r));
      }
      pool.actions.leftCols(m) =
          ((z.bottomRows(hk).cast<double>().array().colwise() *
            g.stddev.tail(hk).array())
               .colwise() +
           g.mean.tail(hk).array())
              .cwiseMax(-bound)
              .cwiseMin(bound)
              .matrix();
    }

    if (mpi > 0) {
      Eigen::MatrixXf z = normal_block(
          seed, kPolicyTag, static_cast<std::uint64_t>(round), dim, mpi);
      z.col(0).setZero();  // the first policy candidate is noiseless
      Mat cmds = (z.topRows(3).cast<double>().array().colwise() *
                  config.policy_command_jitter.array())
                     .matrix();
      cmds.colwise() += g.mean.head<3>();
      clamp_command_rows(cmds, target, config.command_deviation);
      const Mat noise =
          z.bottomRows(hk).cast<double>() * config.policy_action_jitter;
      pool.commands.middleCols(m, mpi) = cmds;
      if (scorer) {
        pool.actions.middleCols(m, mpi) =
            scorer->dream_policy_actions(obs, cmds, noise);
      } else {
        for (int j = 0; j < mpi; ++j) {
          pool.actions.col(m + j) = dream_policy_reference(
              bundle, layout, obs, cmds.col(j), noise.col(j), config.horizon);
        }
      }
      std::fill(pool.source.begin() + m, pool.source.begin() + m + mpi,
                CandidateSource::kPolicy);
    }

    if (carry) {
      pool.commands.col(pool_n - 1) = best.command;
      pool.actions.col(pool_n - 1) = best.actions;
      pool.source.back() = CandidateSource::kCarryover;
    }

    const BatchScorer::Result scores =
        scorer ? scorer->score(obs, pool.commands, pool.actions)
               : score_reference(bundle, constraints, config, obs, target,
                                 pool);
    diag.candidates_scored += pool_n;

    Vec violations(pool_n);
    int feasible_count = 0;
    for (int j = 0; j < pool_n; ++j) {
      violations(j) = violation_of(constraints,
                                   scores.constraint_values.col(j),
                                   scores.returns(j));
      feasible_count += scores.feasible[j];
    }
    for (int j = 0; j < pool_n; ++j) {
      if (!has_best ||
          strictly_better(scores.feasible[j] != 0, violations(j),
                          scores.returns(j), best.feasible, best.violation,
                          best.ret)) {
        best = make_candidate(pool, scores, violations, j, round);
        has_best = true;
      }
    }
    // Running maximum of (penalized) returns: monotone by construction and
    // the cheapest honest summary of optimization progress.
    const double round_max = scores.returns.maxCoeff();
    diag.best_return.push_back(
        diag.best_return.empty() ? round_max
                                 : std::max(diag.best_return.back(),
                                            round_max));
    diag.feasible_fraction.push_back(static_cast<double>(feasible_count) /
                                     static_cast<double>(pool_n));
    if (config.record_candidates) {
      for (int j = 0; j < pool_n; ++j) {
        result.recorded.push_back(
            make_candidate(pool, scores, violations, j, round));
      }
    }

    // Elite refit: one feasibility-first ordering serves both the plentiful
    // case (top returns among feasible, whose violations are all zero) and
    // the scarce one (least violating first).
    std::vector<int> order(static_cast<std::size_t>(pool_n));
    std::iota(order.begin(), order.end(), 0);
    const int elite_n = std::min(config.elite_count, pool_n);
    auto candidate_less = [&](int a, int b) {
      const bool fa = scores.feasible[a] != 0;
      const bool fb = scores.feasible[b] != 0;
      if (fa != fb) return fa;
      if (violations(a) != violations(b)) return violations(a) < violations(b);
      if (scores.returns(a) != scores.returns(b)) {
        return scores.returns(a) > scores.returns(b);
      }
      return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + elite_n, order.end(),
                      candidate_less);
    order.resize(static_cast<std::size_t>(elite_n));
    refit(config, pool, scores, order, g);
  }

  // Extraction: the final mean (or one final draw) competes against the
  // best candidate seen.
  Vec decision = g.mean;
  if (config.sample_extraction) {
    const Eigen::MatrixXf z =
        normal_block(seed, kExtractTag,
                     static_cast<std::uint64_t>(config.iterations), dim, 1);
    decision += (g.stddev.array() * z.col(0).cast<double>().array()).matrix();
  }
  {
    Mat cmd = decision.head<3>();
    clamp_command_rows(cmd, target, config.command_deviation);
    decision.head<3>() = cmd;
    decision.tail(hk) = decision.tail(hk).cwiseMax(-bound).cwiseMin(bound);
  }

  Pool mean_pool;
  mean_pool.commands = decision.head<3>();
  mean_pool.actions = decision.tail(hk);
  mean_pool.source.assign(1, CandidateSource::kMean);
  const BatchScorer::Result mean_scores =
      scorer ? scorer->score(obs, mean_pool.commands, mean_pool.actions)
             : score_reference(bundle, constraints, config, obs, target,
                               mean_pool);
  diag.candidates_scored += 1;
  Vec mean_violation(1);
  mean_violation(0) = violation_of(constraints,
                                   mean_scores.constraint_values.col(0),
                                   mean_scores.returns(0));
  const Candidate mean_candidate = make_candidate(
      mean_pool, mean_scores, mean_violation, 0, config.iterations);
  if (config.record_candidates) result.recorded.push_back(mean_candidate);

  const Candidate* chosen = nullptr;
  if (mean_candidate.feasible) {
    chosen = &mean_candidate;
    result.feasible = true;
  } else if (has_best && best.feasible) {
    chosen = &best;
    result.feasible = true;
  } else {
    const bool mean_wins =
        !has_best ||
        strictly_better(false, mean_candidate.violation, mean_candidate.ret,
                        false, best.violation, best.ret);
    chosen = mean_wins ? &mean_candidate : &best;
    result.feasible = false;
  }

  result.command = chosen->command;
  result.plan_actions =
      Eigen::Map<const Mat>(chosen->actions.data(), ka, config.horizon);
  result.first_action = result.plan_actions.col(0);
  diag.chosen_source = chosen->source;
  diag.chosen_return = chosen->ret;
  diag.chosen_constraints = chosen->constraint_values;

  // Double-precision redream of the mean: its terminal observation seeds
  // the warm start's fresh tail action, and it doubles as the inspection
  // trajectory when the mean was chosen.
  const Eigen::Map<const Mat> mean_actions(mean_candidate.actions.data(), ka,
                                           config.horizon);
  const ScoredTrajectory mean_reference = score_trajectory(
      bundle, obs, mean_candidate.command, mean_actions, constraints, target,
      config.discount, config.constraint_penalty);
  if (chosen == &mean_candidate) {
    diag.chosen_dream = dream_as_matrix(mean_reference.dream);
  } else {
    const Eigen::Map<const Mat> chosen_actions(chosen->actions.data(), ka,
                                               config.horizon);
    diag.chosen_dream = dream_as_matrix(
        score_trajectory(bundle, obs, chosen->command, chosen_actions,
                         constraints, target, config.discount,
                         config.constraint_penalty)
            .dream);
  }

  // Warm start for the next control step: drop the executed action, keep
  // the command, and let the cloned policy propose the fresh tail.
  GaussianPlan& next = result.next_warm;
  next.mean.resize(dim);
  next.mean.head<3>() = decision.head<3>();
  next.mean.segment(3, hk - ka) = decision.segment(3 + ka, hk - ka);
  const Vec& terminal = mean_reference.dream.observations.back();
  Vec tail = Vec::Zero(ka);
  if (terminal.allFinite()) {
    tail = net::mlp_forward(bundle.policy, terminal)
               .cwiseMax(-bound)
               .cwiseMin(bound);
  }
  if (!tail.allFinite()) {
    tail = decision.tail(ka);  // exploded dream: repeat the last action
  }
  next.mean.tail(ka) = tail;
  next.stddev.resize(dim);
  next.stddev.head<3>() = g.stddev.head<3>();
  next.stddev.segment(3, hk - ka) = g.stddev.segment(3 + ka, hk - ka);
  next.stddev.tail(ka).setConstant(config.init_action_stddev);
  next.stddev = next.stddev.cwiseMax(config.stddev_floor);

  return result;
}

MpcController::MpcController(wm::DreamerBundle bundle,
                             ConstraintSpec constraints, PlannerConfig config,
                             std::uint64_t seed)
    : bundle_(std::move(bundle)),
      constraints_(std::move(constraints)),
      config_(std::move(config)),
      seed_(seed) {
  config_.validate();
  bundle_.validate();
}

void MpcController::reset(std::uint64_t episode) {
  episode_ = episode;
  step_ = 0;
  has_warm_ = false;
}

const PlanResult& MpcController::step(const Vec& obs,
                                      const Eigen::Vector3d& target) {
  const std::uint64_t plan_seed = derive_seed(seed_, kStepTag, episode_, step_);
  last_ = plan(bundle_, constraints_, config_, obs, target, plan_seed,
               has_warm_ ? &warm_ : nullptr);
  warm_ = last_.next_warm;
  has_warm_ = true;
  ++step_;
  return last_;
}

}  // namespace dreamplan::mpc
