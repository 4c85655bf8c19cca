#ifndef DREAMPLAN_MPC_BATCH_SCORER_HPP_
#define DREAMPLAN_MPC_BATCH_SCORER_HPP_

#include <cstdint>
#include <vector>

#include "dreamplan/mpc/constraints.hpp"
#include "dreamplan/wm/bundle.hpp"

namespace dreamplan::mpc {

using net::Mat;

// Single-precision lockstep scorer: advances every candidate's dream one
// step at a time through float32 copies of the model heads, accumulating
// discounted rewards and constraint channels in double precision. Columns
// are candidates.
//
// Determinism contract: each output column is produced by a fixed
// per-column operation chain (fused multiply-adds for matrix layers, a
// fixed-order reduction for scalar output layers), independent of how
// columns are grouped into register blocks, chunks, or threads — so any
// thread count yields bitwise-identical scores.
class BatchScorer {
 public:
  BatchScorer(const wm::DreamerBundle& bundle,
              const ConstraintSpec& constraints, const PlannerConfig& config,
              const Eigen::Vector3d& target);

  struct Result {
    Vec returns;                         // penalized discounted returns
    Mat constraint_values;               // channels x candidates
    std::vector<std::uint8_t> feasible;  // per candidate
  };

  // commands: 3 x n; actions: (horizon * action_dim) x n, time-major.
  // obs supplies every candidate's shared starting observation (its command
  // slice is replaced per candidate).
  Result score(const Vec& obs, const Mat& commands, const Mat& actions) const;

  // Rolls the cloned policy through the model for each candidate command,
  // adding the given pre-scaled noise (same time-major layout as actions)
  // to every policy mean before clamping. Returns the executed action
  // sequences; entries are exact float32 values widened to double.
  Mat dream_policy_actions(const Vec& obs, const Mat& commands,
                           const Mat& noise) const;

 private:
  struct HeadF32 {
    std::vector<Eigen::MatrixXf> w;  // column-major, rows padded
    std::vector<Eigen::VectorXf> b;  // padded alike
    std::vector<int> rows;           // true output rows per layer
    std::vector<int> pad_rows;       // padded output rows per layer
    Eigen::VectorXf final_row;       // contiguous W.row(0) when the output
    float final_bias = 0.0f;         // layer is scalar (dot-product path)
    int in_dim = 0;
    int max_pad = 0;
    net::Activation activation = net::Activation::kTanh;
  };

  // Per-thread scratch: the layer input assembly and the two ping-pong
  // layer output buffers, allocated once per call instead of per chunk.
  struct Scratch {
    Eigen::MatrixXf xin;
    Eigen::MatrixXf buf_a;
    Eigen::MatrixXf buf_b;
  };

  Scratch make_scratch() const;
  void score_chunk(const Vec& obs, const Mat& commands, const Mat& actions,
                   int first, int count, Scratch& s, Result& out) const;
  void dream_chunk(const Vec& obs, const Mat& commands, const Mat& noise,
                   int first, int count, Scratch& s, Mat& out) const;
  // noinline keeps the hot layer loops in one compact function instead of
  // being flattened into every caller (three copies per dream step blow
  // the instruction cache).
#if defined(__GNUC__) || defined(__clang__)
  __attribute__((noinline))
#endif
  static const float* run_head(const HeadF32& head, const float* x, int ldx,
                               int in_rows, int count, Eigen::MatrixXf& a,
                               Eigen::MatrixXf& b);
  void init_chunk_obs(const Vec& obs, const Mat& commands, int first,
                      int count, Eigen::MatrixXf& cur) const;

  HeadF32 dynamics_;
  HeadF32 reward_;
  HeadF32 value_;
  HeadF32 policy_;
  // State rows whose dynamics delta is actually applied; the command slice
  // is excluded because it is re-pinned after every step, so its delta
  // rows are dropped from the converted dynamics head entirely.
  std::vector<int> delta_rows_;
  std::vector<double> cone_tan_roll_;   // per channel, orientation only
  std::vector<double> cone_sin_pitch_;  // per channel, orientation only
  double action_bound_;
  ConstraintSpec constraints_;
  env::ObsLayout layout_;
  Eigen::Vector3d target_;
  int obs_dim_;
  int action_dim_;
  int horizon_;
  double discount_;
  double penalty_;
};

}  // namespace dreamplan::mpc

#endif  // DREAMPLAN_MPC_BATCH_SCORER_HPP_
