#include "dreamplan/mpc/batch_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef __AVX512F__
#include <immintrin.h>
#endif

#include "dreamplan/error.hpp"

namespace dreamplan::mpc {

namespace {

// Candidates advance through the dream in fixed chunks of this many
// columns; chunking is independent of the thread count, so threads only
// decide which chunks they pick up, never the arithmetic inside one.
constexpr int kChunk = 64;
constexpr int kRowStrip = 16;  // SIMD row granularity (one 16-float lane)

int pad_rows(int rows) {
  return (rows + kRowStrip - 1) / kRowStrip * kRowStrip;
}

#ifdef __AVX512F__

// O(:, c) = b + W x_c over one row tile (64/32/16 rows), for NC columns at
// once. The per-column, per-element operation chain (bias init, then
// ascending-i fused multiply-adds) is identical across tile widths, which
// keeps results bitwise independent of the row and column blocking. The
// accumulator updates are written out explicitly — folding them into a
// loop makes gcc spill the accumulator array to the stack.
template <int NC>
void tile64_columns(const float* w, int ldw, const float* bias,
                    const float* x, int ldx, float* o, int ldo, int in_dim) {
  if (in_dim <= 0) __builtin_unreachable();  // layers always have inputs
  __m512 acc[4][NC];
  for (int c = 0; c < NC; ++c) {
    for (int r = 0; r < 4; ++r) {
      acc[r][c] = _mm512_loadu_ps(bias + 16 * r);
    }
  }
  for (int i = 0; i < in_dim; ++i) {
    const float* wcol = w + static_cast<std::size_t>(i) * ldw;
    const __m512 w0 = _mm512_loadu_ps(wcol);
    const __m512 w1 = _mm512_loadu_ps(wcol + 16);
    const __m512 w2 = _mm512_loadu_ps(wcol + 32);
    const __m512 w3 = _mm512_loadu_ps(wcol + 48);
    for (int c = 0; c < NC; ++c) {
      const __m512 xb =
          _mm512_set1_ps(x[static_cast<std::size_t>(c) * ldx + i]);
      acc[0][c] = _mm512_fmadd_ps(w0, xb, acc[0][c]);
      acc[1][c] = _mm512_fmadd_ps(w1, xb, acc[1][c]);
      acc[2][c] = _mm512_fmadd_ps(w2, xb, acc[2][c]);
      acc[3][c] = _mm512_fmadd_ps(w3, xb, acc[3][c]);
    }
  }
  for (int c = 0; c < NC; ++c) {
    for (int r = 0; r < 4; ++r) {
      _mm512_storeu_ps(o + static_cast<std::size_t>(c) * ldo + 16 * r,
                       acc[r][c]);
    }
  }
}

template <int NC>
void tile32_columns(const float* w, int ldw, const float* bias,
                    const float* x, int ldx, float* o, int ldo, int in_dim) {
  if (in_dim <= 0) __builtin_unreachable();  // layers always have inputs
  __m512 acc[2][NC];
  for (int c = 0; c < NC; ++c) {
    acc[0][c] = _mm512_loadu_ps(bias);
    acc[1][c] = _mm512_loadu_ps(bias + 16);
  }
  for (int i = 0; i < in_dim; ++i) {
    const float* wcol = w + static_cast<std::size_t>(i) * ldw;
    const __m512 w0 = _mm512_loadu_ps(wcol);
    const __m512 w1 = _mm512_loadu_ps(wcol + 16);
    for (int c = 0; c < NC; ++c) {
      const __m512 xb =
          _mm512_set1_ps(x[static_cast<std::size_t>(c) * ldx + i]);
      acc[0][c] = _mm512_fmadd_ps(w0, xb, acc[0][c]);
      acc[1][c] = _mm512_fmadd_ps(w1, xb, acc[1][c]);
    }
  }
  for (int c = 0; c < NC; ++c) {
    _mm512_storeu_ps(o + static_cast<std::size_t>(c) * ldo, acc[0][c]);
    _mm512_storeu_ps(o + static_cast<std::size_t>(c) * ldo + 16, acc[1][c]);
  }
}

template <int NC>
void tile16_columns(const float* w, int ldw, const float* bias,
                    const float* x, int ldx, float* o, int ldo, int in_dim) {
  if (in_dim <= 0) __builtin_unreachable();  // layers always have inputs
  __m512 acc[NC];
  for (int c = 0; c < NC; ++c) {
    acc[c] = _mm512_loadu_ps(bias);
  }
  for (int i = 0; i < in_dim; ++i) {
    const __m512 w0 = _mm512_loadu_ps(w + static_cast<std::size_t>(i) * ldw);
    for (int c = 0; c < NC; ++c) {
      const __m512 xb =
          _mm512_set1_ps(x[static_cast<std::size_t>(c) * ldx + i]);
      acc[c] = _mm512_fmadd_ps(w0, xb, acc[c]);
    }
  }
  for (int c = 0; c < NC; ++c) {
    _mm512_storeu_ps(o + static_cast<std::size_t>(c) * ldo, acc[c]);
  }
}

template <int NC>
void row_blocks(const float* w, int ldw, const float* b, const float* x,
                int ldx, float* o, int ldo, int rows_pad, int in_dim) {
  int rb = 0;
  for (; rb + 64 <= rows_pad; rb += 64) {
    tile64_columns<NC>(w + rb, ldw, b + rb, x, ldx, o + rb, ldo, in_dim);
  }
  if (rb + 32 <= rows_pad) {
    tile32_columns<NC>(w + rb, ldw, b + rb, x, ldx, o + rb, ldo, in_dim);
    rb += 32;
  }
  if (rb + 16 <= rows_pad) {
    tile16_columns<NC>(w + rb, ldw, b + rb, x, ldx, o + rb, ldo, in_dim);
  }
}

#if defined(__GNUC__) || defined(__clang__)
__attribute__((noinline))
#endif
void dense_layer(const Eigen::MatrixXf& w, const Eigen::VectorXf& b,
                 const float* x, int ldx, int in_dim, int cols, float* o,
                 int ldo) {
  const int rows_pad = static_cast<int>(w.rows());
  int c = 0;
  for (; c + 6 <= cols; c += 6) {
    row_blocks<6>(w.data(), rows_pad, b.data(),
                  x + static_cast<std::size_t>(c) * ldx, ldx,
                  o + static_cast<std::size_t>(c) * ldo, ldo, rows_pad,
                  in_dim);
  }
  for (; c + 2 <= cols; c += 2) {
    row_blocks<2>(w.data(), rows_pad, b.data(),
                  x + static_cast<std::size_t>(c) * ldx, ldx,
                  o + static_cast<std::size_t>(c) * ldo, ldo, rows_pad,
                  in_dim);
  }
  for (; c < cols; ++c) {
    row_blocks<1>(w.data(), rows_pad, b.data(),
                  x + static_cast<std::size_t>(c) * ldx, ldx,
                  o + static_cast<std::size_t>(c) * ldo, ldo, rows_pad,
                  in_dim);
  }
}

// Scalar-output layer as one dot product per column. The reduction order
// is fixed per column (four strip accumulators, fixed combine tree, then
// an ascending scalar tail), so it is independent of blocking and thread
// count like the tiled path.
float dot_row(const float* w, const float* x, int n) {
  __m512 a0 = _mm512_setzero_ps();
  __m512 a1 = _mm512_setzero_ps();
  __m512 a2 = _mm512_setzero_ps();
  __m512 a3 = _mm512_setzero_ps();
  int i = 0;
  for (; i + 64 <= n; i += 64) {
    a0 = _mm512_fmadd_ps(_mm512_loadu_ps(w + i), _mm512_loadu_ps(x + i), a0);
    a1 = _mm512_fmadd_ps(_mm512_loadu_ps(w + i + 16),
                         _mm512_loadu_ps(x + i + 16), a1);
    a2 = _mm512_fmadd_ps(_mm512_loadu_ps(w + i + 32),
                         _mm512_loadu_ps(x + i + 32), a2);
    a3 = _mm512_fmadd_ps(_mm512_loadu_ps(w + i + 48),
                         _mm512_loadu_ps(x + i + 48), a3);
  }
  for (; i + 16 <= n; i += 16) {
    a0 = _mm512_fmadd_ps(_mm512_loadu_ps(w + i), _mm512_loadu_ps(x + i), a0);
  }
  float s = _mm512_reduce_add_ps(
      _mm512_add_ps(_mm512_add_ps(a0, a1), _mm512_add_ps(a2, a3)));
  for (; i < n; ++i) {
    s += w[i] * x[i];
  }
  return s;
}

#else  // !__AVX512F__

void dense_layer(const Eigen::MatrixXf& w, const Eigen::VectorXf& b,
                 const float* x, int ldx, int in_dim, int cols, float* o,
                 int ldo) {
  Eigen::Map<const Eigen::MatrixXf, 0, Eigen::OuterStride<>> xm(
      x, in_dim, cols, Eigen::OuterStride<>(ldx));
  Eigen::Map<Eigen::MatrixXf, 0, Eigen::OuterStride<>> om(
      o, w.rows(), cols, Eigen::OuterStride<>(ldo));
  om.noalias() = w.leftCols(in_dim) * xm;
  om.colwise() += b;
}

float dot_row(const float* w, const float* x, int n) {
  return Eigen::Map<const Eigen::VectorXf>(w, n).dot(
      Eigen::Map<const Eigen::VectorXf>(x, n));
}

#endif  // __AVX512F__

#ifdef __AVX512F__

// Rational tanh approximation (same clamped 13/6 минимax form as common
// vector math libraries) with the division replaced by a reciprocal
// estimate plus one Newton step; relative error stays ~1e-7 while the
// unpipelined divide leaves the hot path.
inline __m512 tanh16(__m512 x) {
  const __m512 clamp = _mm512_set1_ps(7.90531110763549805f);
  const __m512 a1 = _mm512_set1_ps(4.89352455891786e-03f);
  const __m512 a3 = _mm512_set1_ps(6.37261928875436e-04f);
  const __m512 a5 = _mm512_set1_ps(1.48572235717979e-05f);
  const __m512 a7 = _mm512_set1_ps(5.12229709037114e-08f);
  const __m512 a9 = _mm512_set1_ps(-8.60467152213735e-11f);
  const __m512 a11 = _mm512_set1_ps(2.00018790482477e-13f);
  const __m512 a13 = _mm512_set1_ps(-2.76076847742355e-16f);
  const __m512 b0 = _mm512_set1_ps(4.89352518554385e-03f);
  const __m512 b2 = _mm512_set1_ps(2.26843463243900e-03f);
  const __m512 b4 = _mm512_set1_ps(1.18534705686654e-04f);
  const __m512 b6 = _mm512_set1_ps(1.19825839466702e-06f);
  x = _mm512_max_ps(_mm512_min_ps(x, clamp),
                    _mm512_sub_ps(_mm512_setzero_ps(), clamp));
  const __m512 x2 = _mm512_mul_ps(x, x);
  __m512 p = _mm512_fmadd_ps(x2, a13, a11);
  p = _mm512_fmadd_ps(x2, p, a9);
  p = _mm512_fmadd_ps(x2, p, a7);
  p = _mm512_fmadd_ps(x2, p, a5);
  p = _mm512_fmadd_ps(x2, p, a3);
  p = _mm512_fmadd_ps(x2, p, a1);
  p = _mm512_mul_ps(x, p);
  __m512 q = _mm512_fmadd_ps(x2, b6, b4);
  q = _mm512_fmadd_ps(x2, q, b2);
  q = _mm512_fmadd_ps(x2, q, b0);
  const __m512 r0 = _mm512_rcp14_ps(q);
  const __m512 two = _mm512_set1_ps(2.0f);
  const __m512 r = _mm512_mul_ps(r0, _mm512_fnmadd_ps(q, r0, two));
  return _mm512_mul_ps(p, r);
}

void activate(float* data, int count, net::Activation act) {
  if (act == net::Activation::kTanh) {
    int i = 0;
    for (; i + 16 <= count; i += 16) {
      _mm512_storeu_ps(data + i, tanh16(_mm512_loadu_ps(data + i)));
    }
    if (i < count) {
      const __mmask16 m =
          static_cast<__mmask16>((1u << (count - i)) - 1u);
      const __m512 v = _mm512_maskz_loadu_ps(m, data + i);
      _mm512_mask_storeu_ps(data + i, m, tanh16(v));
    }
  } else {
    Eigen::Map<Eigen::ArrayXf> m(data, count);
    m = (m > 0.0f).select(m, m.exp() - 1.0f);
  }
}

#else  // !__AVX512F__

void activate(float* data, int count, net::Activation act) {
  Eigen::Map<Eigen::ArrayXf> m(data, count);
  if (act == net::Activation::kTanh) {
    m = m.tanh();
  } else {
    m = (m > 0.0f).select(m, m.exp() - 1.0f);
  }
}

#endif  // __AVX512F__

}  // namespace

BatchScorer::BatchScorer(const wm::DreamerBundle& bundle,
                         const ConstraintSpec& constraints,
                         const PlannerConfig& config,
                         const Eigen::Vector3d& target)
    : constraints_(constraints),
      layout_(bundle.action_dim),
      target_(target),
      obs_dim_(bundle.obs_dim),
      action_dim_(bundle.action_dim),
      horizon_(config.horizon),
      discount_(config.discount),
      penalty_(config.constraint_penalty) {
  if (bundle.variant != wm::Variant::kNlm) {
    throw ValueError("batched scoring requires an NLM bundle");
  }
  auto convert = [](const net::MlpParams& p) {
    HeadF32 h;
    h.activation = p.activation;
    h.in_dim = p.in_dim();
    for (const auto& layer : p.layers) {
      const int rows = static_cast<int>(layer.W.rows());
      const int cols = static_cast<int>(layer.W.cols());
      const int padded = pad_rows(rows);
      Eigen::MatrixXf w = Eigen::MatrixXf::Zero(padded, cols);
      w.topRows(rows) = layer.W.cast<float>();
      Eigen::VectorXf b = Eigen::VectorXf::Zero(padded);
      b.head(rows) = layer.b.cast<float>();
      h.w.push_back(std::move(w));
      h.b.push_back(std::move(b));
      h.rows.push_back(rows);
      h.pad_rows.push_back(padded);
      h.max_pad = std::max(h.max_pad, padded);
    }
    if (!p.layers.empty() && p.layers.back().W.rows() == 1) {
      h.final_row = p.layers.back().W.row(0).transpose().cast<float>();
      h.final_bias = static_cast<float>(p.layers.back().b(0));
    }
    return h;
  };
  dynamics_ = convert(bundle.dynamics);
  reward_ = convert(bundle.reward);
  value_ = convert(bundle.value);
  policy_ = convert(bundle.policy);
  action_bound_ = bundle.action_bound;

  // The orientation cone test reuses these; their channel parameters are
  // immutable after construction.
  cone_tan_roll_.assign(constraints_.size(), 0.0);
  cone_sin_pitch_.assign(constraints_.size(), 0.0);
  for (std::size_t ch = 0; ch < constraints_.size(); ++ch) {
    if (constraints_[ch].kind == ChannelKind::kOrientationOvershoot) {
      cone_tan_roll_[ch] = std::tan(constraints_[ch].roll_limit);
      cone_sin_pitch_[ch] = std::sin(constraints_[ch].pitch_limit);
    }
  }

  // Drop the command-slice rows from the dynamics head's output layer:
  // their deltas are discarded when the command is re-pinned each step.
  for (int i = 0; i < obs_dim_; ++i) {
    if (i < layout_.command || i >= layout_.command + 3) {
      delta_rows_.push_back(i);
    }
  }
  const int live = static_cast<int>(delta_rows_.size());
  const auto& last = bundle.dynamics.layers.back();
  const int cols = static_cast<int>(last.W.cols());
  const int padded = pad_rows(live);
  Eigen::MatrixXf w = Eigen::MatrixXf::Zero(padded, cols);
  Eigen::VectorXf b = Eigen::VectorXf::Zero(padded);
  for (int r = 0; r < live; ++r) {
    w.row(r) = last.W.row(delta_rows_[r]).cast<float>();
    b(r) = static_cast<float>(last.b(delta_rows_[r]));
  }
  dynamics_.w.back() = std::move(w);
  dynamics_.b.back() = std::move(b);
  dynamics_.rows.back() = live;
  dynamics_.pad_rows.back() = padded;
}

const float* BatchScorer::run_head(const HeadF32& head, const float* x,
                                   int ldx, int in_rows, int count,
                                   Eigen::MatrixXf& a, Eigen::MatrixXf& b) {
  const float* src = x;
  int src_ld = ldx;
  int src_rows = in_rows;
  const int layer_count = static_cast<int>(head.w.size());
  for (int l = 0; l < layer_count; ++l) {
    const int ldo = head.pad_rows[l];
    float* dst = (l % 2 == 0) ? a.data() : b.data();
    if (l + 1 == layer_count && head.final_row.size() > 0) {
      // Scalar output layer: one fixed-order dot per column, written to
      // row 0 (all readers index row 0 through pad_rows.back()).
      const float* wrow = head.final_row.data();
      for (int c = 0; c < count; ++c) {
        dst[static_cast<std::size_t>(c) * ldo] =
            head.final_bias +
            dot_row(wrow, src + static_cast<std::size_t>(c) * src_ld,
                    src_rows);
      }
    } else {
      dense_layer(head.w[l], head.b[l], src, src_ld, src_rows, count, dst,
                  ldo);
      if (l + 1 < layer_count) {
        activate(dst, ldo * count, head.activation);
      }
    }
    src = dst;
    src_ld = ldo;
    src_rows = head.rows[l];
  }
  return src;
}

void BatchScorer::init_chunk_obs(const Vec& obs, const Mat& commands,
                                 int first, int count,
                                 Eigen::MatrixXf& buf) const {
  // Fills the top obs_dim_ rows of each column with the shared starting
  // observation, command slice replaced per candidate.
  const Eigen::VectorXf obs32 = obs.cast<float>();
  const Eigen::Index ld = buf.rows();
  for (int j = 0; j < count; ++j) {
    float* col = buf.data() + static_cast<std::size_t>(j) * ld;
    std::memcpy(col, obs32.data(), sizeof(float) * obs32.size());
    const double* cmd =
        commands.data() + static_cast<std::size_t>(first + j) * 3;
    for (int i = 0; i < 3; ++i) {
      col[layout_.command + i] = static_cast<float>(cmd[i]);
    }
  }
}

BatchScorer::Scratch BatchScorer::make_scratch() const {
  const int max_pad = std::max({dynamics_.max_pad, reward_.max_pad,
                                value_.max_pad, policy_.max_pad});
  Scratch s;
  s.xin.resize(obs_dim_ + action_dim_, kChunk);
  s.buf_a.resize(max_pad, kChunk);
  s.buf_b.resize(max_pad, kChunk);
  return s;
}

void BatchScorer::score_chunk(const Vec& obs, const Mat& commands,
                              const Mat& actions, int first, int count,
                              Scratch& s, Result& out) const {
  const int p = obs_dim_;
  const int ka = action_dim_;
  const int channels = static_cast<int>(constraints_.size());

  // The top p rows of xin carry each candidate's current observation
  // across steps; the ka rows below are refreshed with that step's action.
  Eigen::MatrixXf& xin = s.xin;
  Eigen::MatrixXf& buf_a = s.buf_a;
  Eigen::MatrixXf& buf_b = s.buf_b;
  const int ldx = p + ka;
  init_chunk_obs(obs, commands, first, count, xin);

  Eigen::ArrayXd ret = Eigen::ArrayXd::Zero(count);
  Mat cons = Mat::Zero(channels, count);

  // The command-deviation channel is constant over the horizon; accumulate
  // its geometric factor once, in double precision off the exact commands.
  double geometric = 0.0;
  {
    double g = 1.0;
    for (int k = 0; k < horizon_; ++k) {
      geometric += g;
      g *= discount_;
    }
  }
  for (int ch = 0; ch < channels; ++ch) {
    if (constraints_[ch].kind == ChannelKind::kCommandDeviation) {
      for (int j = 0; j < count; ++j) {
        const Eigen::Vector3d cmd = commands.col(first + j);
        cons(ch, j) =
            geometric * command_deviation(cmd, target_, constraints_[ch].allowed);
      }
    }
  }

  const bool has_custom =
      std::any_of(constraints_.begin(), constraints_.end(), [](const auto& c) {
        return c.kind == ChannelKind::kCustom;
      });

  double gamma_k = 1.0;
  for (int k = 0; k < horizon_; ++k) {
    for (int j = 0; j < count; ++j) {
      const double* a64 = actions.data() +
                          static_cast<std::size_t>(first + j) * actions.rows() +
                          static_cast<std::size_t>(k) * ka;
      float* xj = xin.data() + static_cast<std::size_t>(j) * ldx + p;
      for (int i = 0; i < ka; ++i) {
        xj[i] = static_cast<float>(a64[i]);
      }
    }

    for (int ch = 0; ch < channels; ++ch) {
      const ConstraintChannel& channel = constraints_[ch];
      switch (channel.kind) {
        case ChannelKind::kJointOvershoot:
          for (int j = 0; j < count; ++j) {
            const float* xj = xin.data() + static_cast<std::size_t>(j) * ldx +
                              layout_.joint_pos;
            double v = 0.0;
            for (int i = 0; i < ka; ++i) {
              const double q = static_cast<double>(xj[i]);
              v += std::max(0.0, std::abs(q) - channel.joint_limit(i));
            }
            cons(ch, j) += gamma_k * v;
          }
          break;
        case ChannelKind::kOrientationOvershoot: {
          const double tan_roll = cone_tan_roll_[ch];
          const double sin_pitch = cone_sin_pitch_[ch];
          for (int j = 0; j < count; ++j) {
            const float* xg = xin.data() + static_cast<std::size_t>(j) * ldx +
                              layout_.gravity;
            const double gx = static_cast<double>(xg[0]);
            const double gy = static_cast<double>(xg[1]);
            const double gz = static_cast<double>(xg[2]);
            // Inside this cone both overshoots are exactly zero; only
            // suspects pay for the inverse trigonometry.
            const bool safe = (-gz > 0.0) && (std::abs(gy) <= tan_roll * -gz) &&
                              (std::abs(gx) <= sin_pitch);
            if (safe) continue;
            const double roll = roll_from_gravity(gy, gz);
            const double pitch = pitch_from_gravity(gx);
            const double v =
                std::max(0.0, std::abs(roll) - channel.roll_limit) +
                std::max(0.0, std::abs(pitch) - channel.pitch_limit);
            cons(ch, j) += gamma_k * v;
          }
          break;
        }
        case ChannelKind::kCommandDeviation:
          break;  // handled above in closed form
        case ChannelKind::kCustom:
          break;  // handled below with full-precision vectors
      }
    }
    if (has_custom) {
      for (int j = 0; j < count; ++j) {
        const Vec obs64 = xin.col(j).head(p).cast<double>();
        const Vec act64 = actions.block(static_cast<Eigen::Index>(k) * ka,
                                        first + j, ka, 1);
        const Eigen::Vector3d cmd = commands.col(first + j);
        for (int ch = 0; ch < channels; ++ch) {
          if (constraints_[ch].kind != ChannelKind::kCustom) continue;
          cons(ch, j) +=
              gamma_k * constraints_[ch].step(obs64, act64, cmd, target_);
        }
      }
    }

    const float* r = run_head(reward_, xin.data(), ldx, p + ka, count, buf_a,
                              buf_b);
    const int r_ld = reward_.pad_rows.back();
    for (int j = 0; j < count; ++j) {
      ret(j) += gamma_k *
                static_cast<double>(r[static_cast<std::size_t>(j) * r_ld]);
    }

    const float* d =
        run_head(dynamics_, xin.data(), ldx, p + ka, count, buf_a, buf_b);
    const int d_ld = dynamics_.pad_rows.back();
    const int live = static_cast<int>(delta_rows_.size());
    const int below = layout_.command;  // delta rows: [0, cmd) then [cmd+3, p)
    for (int j = 0; j < count; ++j) {
      const float* dj = d + static_cast<std::size_t>(j) * d_ld;
      float* xj = xin.data() + static_cast<std::size_t>(j) * ldx;
      // Command rows receive no delta, so the value pinned at init stays.
      for (int i = 0; i < below; ++i) {
        xj[i] += dj[i];
      }
      for (int i = below; i < live; ++i) {
        xj[i + 3] += dj[i];
      }
    }
    gamma_k *= discount_;
  }

  const float* v = run_head(value_, xin.data(), ldx, p, count, buf_a, buf_b);
  const int v_ld = value_.pad_rows.back();
  for (int j = 0; j < count; ++j) {
    ret(j) +=
        gamma_k * static_cast<double>(v[static_cast<std::size_t>(j) * v_ld]);
  }

  for (int j = 0; j < count; ++j) {
    double total = ret(j) - penalty_ * cons.col(j).sum();
    bool finite = std::isfinite(total) && cons.col(j).allFinite();
    bool ok = finite;
    if (finite) {
      for (int ch = 0; ch < channels; ++ch) {
        if (cons(ch, j) > constraints_[ch].bound) {
          ok = false;
          break;
        }
      }
    } else {
      total = -std::numeric_limits<double>::infinity();
    }
    out.returns(first + j) = total;
    out.constraint_values.col(first + j) = cons.col(j);
    out.feasible[first + j] = ok ? 1 : 0;
  }
}

void BatchScorer::dream_chunk(const Vec& obs, const Mat& commands,
                              const Mat& noise, int first, int count,
                              Scratch& s, Mat& out) const {
  const int p = obs_dim_;
  const int ka = action_dim_;

  Eigen::MatrixXf& xin = s.xin;
  Eigen::MatrixXf& buf_a = s.buf_a;
  Eigen::MatrixXf& buf_b = s.buf_b;
  const int ldx = p + ka;
  init_chunk_obs(obs, commands, first, count, xin);

  const float bound = static_cast<float>(action_bound_);
  for (int k = 0; k < horizon_; ++k) {
    const float* m = run_head(policy_, xin.data(), ldx, p, count, buf_a,
                              buf_b);
    const int m_ld = policy_.pad_rows.back();
    for (int j = 0; j < count; ++j) {
      const std::size_t col = static_cast<std::size_t>(j) * m_ld;
      float* xj = xin.data() + static_cast<std::size_t>(j) * ldx;
      for (int i = 0; i < ka; ++i) {
        const Eigen::Index row = static_cast<Eigen::Index>(k) * ka + i;
        float a = m[col + i] + static_cast<float>(noise(row, first + j));
        a = std::clamp(a, -bound, bound);
        xj[p + i] = a;
        out(row, first + j) = static_cast<double>(a);
      }
    }
    const float* d =
        run_head(dynamics_, xin.data(), ldx, p + ka, count, buf_a, buf_b);
    const int d_ld = dynamics_.pad_rows.back();
    const int live = static_cast<int>(delta_rows_.size());
    const int below = layout_.command;
    for (int j = 0; j < count; ++j) {
      const float* dj = d + static_cast<std::size_t>(j) * d_ld;
      float* xj = xin.data() + static_cast<std::size_t>(j) * ldx;
      for (int i = 0; i < below; ++i) {
        xj[i] += dj[i];
      }
      for (int i = below; i < live; ++i) {
        xj[i + 3] += dj[i];
      }
    }
  }
}

Mat BatchScorer::dream_policy_actions(const Vec& obs, const Mat& commands,
                                      const Mat& noise) const {
  if (obs.size() != obs_dim_) {
    throw ShapeError("observation does not match bundle obs_dim");
  }
  const int n = static_cast<int>(commands.cols());
  if (commands.rows() != 3 || noise.cols() != n ||
      noise.rows() != static_cast<Eigen::Index>(horizon_) * action_dim_) {
    throw ShapeError("noise matrix does not match horizon/action_dim");
  }
  Mat actions(static_cast<Eigen::Index>(horizon_) * action_dim_, n);
  const int chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    Scratch scratch = make_scratch();
#pragma omp for schedule(static)
    for (int c = 0; c < chunks; ++c) {
      const int first = c * kChunk;
      const int count = std::min(kChunk, n - first);
      dream_chunk(obs, commands, noise, first, count, scratch, actions);
    }
  }
  return actions;
}

BatchScorer::Result BatchScorer::score(const Vec& obs, const Mat& commands,
                                       const Mat& actions) const {
  if (obs.size() != obs_dim_) {
    throw ShapeError("observation does not match bundle obs_dim");
  }
  const int n = static_cast<int>(commands.cols());
  if (commands.rows() != 3 || actions.cols() != n ||
      actions.rows() != static_cast<Eigen::Index>(horizon_) * action_dim_) {
    throw ShapeError("candidate matrices do not match horizon/action_dim");
  }

  Result out;
  out.returns = Vec::Zero(n);
  out.constraint_values = Mat::Zero(static_cast<int>(constraints_.size()), n);
  out.feasible.assign(n, 0);

  const int chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel
  {
    Scratch scratch = make_scratch();
#pragma omp for schedule(static)
    for (int c = 0; c < chunks; ++c) {
      const int first = c * kChunk;
      const int count = std::min(kChunk, n - first);
      score_chunk(obs, commands, actions, first, count, scratch, out);
    }
  }
  return out;
}

}  // namespace dreamplan::mpc
