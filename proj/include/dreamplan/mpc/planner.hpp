#ifndef DREAMPLAN_MPC_PLANNER_HPP_
#define DREAMPLAN_MPC_PLANNER_HPP_

#include <cstdint>
#include <vector>

#include "dreamplan/mpc/batch_scorer.hpp"
#include "dreamplan/mpc/config.hpp"
#include "dreamplan/mpc/constraints.hpp"
#include "dreamplan/wm/bundle.hpp"

namespace dreamplan::mpc {

// Sampling distribution over decision vectors [command (3) | H actions,
// time-major]. plan() returns one pre-shifted by a step so the caller can
// feed it straight back in as the next warm start.
struct GaussianPlan {
  Vec mean;
  Vec stddev;
};

enum class CandidateSource : std::uint8_t {
  kGaussian,   // drawn from the current distribution
  kPolicy,     // cloned-policy dream (jittered except the first)
  kCarryover,  // best candidate so far, rescored with the fresh pool
  kMean,       // the final distribution mean itself
};

const char* source_name(CandidateSource s);

struct Candidate {
  Eigen::Vector3d command = Eigen::Vector3d::Zero();
  Vec actions;            // horizon * action_dim, time-major
  double ret = 0.0;
  Vec constraint_values;  // discounted per-channel sums
  double violation = 0.0; // total overshoot past the channel bounds
  bool feasible = false;
  CandidateSource source = CandidateSource::kGaussian;
  int iteration = 0;
};

struct PlanDiagnostics {
  std::vector<double> best_return;        // running max return per round
  std::vector<double> feasible_fraction;  // per round
  std::int64_t candidates_scored = 0;
  CandidateSource chosen_source = CandidateSource::kMean;
  double chosen_return = 0.0;
  Vec chosen_constraints;
  Mat chosen_dream;  // obs_dim x (horizon + 1), double-precision redream
};

// One planning step: the command/action pair to execute now, the plan it
// came from, and the shifted warm start for the next control step.
// `feasible` is false when every candidate violated some channel; the
// emitted plan is then the least-violating one seen.
struct PlanResult {
  Eigen::Vector3d command = Eigen::Vector3d::Zero();
  Vec first_action;
  Mat plan_actions;  // action_dim x horizon
  bool feasible = true;
  GaussianPlan next_warm;
  PlanDiagnostics diagnostics;
  std::vector<Candidate> recorded;  // filled when config.record_candidates
};

// Constrained sampling planner over the learned model. Each round scores M
// distribution draws, policy-seeded dreams (the first noiseless, the rest
// jittered), and the rescored best-so-far; elites picked feasibility-first
// refit the distribution with exponential weights. The final mean is
// emitted when it scores feasible, otherwise the best feasible candidate,
// otherwise the least-violating one.
//
// Every candidate draw comes from its own stream derived from (seed, round,
// index), so results are bit-identical regardless of thread count or
// schedule. Passing a warm start with mismatched dimensions throws
// ShapeError.
PlanResult plan(const wm::DreamerBundle& bundle,
                const ConstraintSpec& constraints, const PlannerConfig& config,
                const Vec& obs, const Eigen::Vector3d& target,
                std::uint64_t seed, const GaussianPlan* warm = nullptr);

// The distribution-refit primitive plan() applies each round: exponential
// weights exp((ret - max ret) / temperature) over the elite decision
// vectors (columns), blended into `g` by the momentum factor, stddev
// floored. A non-finite best return falls back to uniform weights. Throws
// ShapeError when shapes disagree.
void refit_distribution(const PlannerConfig& config, const Mat& decisions,
                        const Vec& returns, GaussianPlan& g);

// Stateful wrapper holding the warm start between control steps and
// deriving one plan seed per (episode, step).
class MpcController {
 public:
  MpcController(wm::DreamerBundle bundle, ConstraintSpec constraints,
                PlannerConfig config, std::uint64_t seed);

  // Starts a fresh episode: drops the warm start, switches seed streams.
  void reset(std::uint64_t episode);

  // Plans from `obs` toward `target` and advances the warm start.
  const PlanResult& step(const Vec& obs, const Eigen::Vector3d& target);

  const PlanResult& last() const { return last_; }
  const PlannerConfig& config() const { return config_; }

 private:
  wm::DreamerBundle bundle_;
  ConstraintSpec constraints_;
  PlannerConfig config_;
  std::uint64_t seed_;
  std::uint64_t episode_ = 0;
  std::uint64_t step_ = 0;
  bool has_warm_ = false;
  GaussianPlan warm_;
  PlanResult last_;
};

}  // namespace dreamplan::mpc

#endif  // DREAMPLAN_MPC_PLANNER_HPP_
