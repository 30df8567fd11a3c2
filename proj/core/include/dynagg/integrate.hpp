#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace dynagg {

/// Single-directional, single-layer gated recurrent unit with a linear
/// per-step output projection. The update convention is
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   c = tanh(Wh x + Uh (r .* h) + bh)
///   h' = (1 - z) .* h + z .* c
///   y  = Wo h' + bo
struct GruParams {
  Eigen::MatrixXd w_z, u_z;  // H x C_in, H x H
  Eigen::MatrixXd w_r, u_r;
  Eigen::MatrixXd w_h, u_h;
  Eigen::VectorXd b_z, b_r, b_h;  // H
  Eigen::MatrixXd w_o;            // C_out x H
  Eigen::VectorXd b_o;            // C_out

  Eigen::Index input_dim() const { return w_z.cols(); }
  Eigen::Index hidden_dim() const { return w_z.rows(); }
  Eigen::Index output_dim() const { return w_o.rows(); }

  void validate() const;

  static GruParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                         Eigen::Index output_dim);
  /// Uniform(-1/sqrt(H), 1/sqrt(H)) init, deterministic per seed.
  static GruParams seeded(Eigen::Index input_dim, Eigen::Index hidden_dim,
                          Eigen::Index output_dim, std::uint64_t seed);
};

/// Node features embedded in a fixed-length buffer: rows at and beyond
/// valid_len are zero pad.
struct PaddedSequence {
  Eigen::MatrixXd values;  // L x C_in
  Eigen::Index valid_len = 0;

  Eigen::Index length() const { return values.rows(); }
  void validate() const;
};

/// Embed an M x C feature block into a length-L padded buffer.
PaddedSequence pad_sequence(const Eigen::MatrixXd& features, Eigen::Index l);

/// Per-step activations retained for backpropagation through time.
struct GruContext {
  Eigen::MatrixXd z, r, c, h;  // valid_len rows each; h excludes h_0 = 0
};

/// Runs the recurrence over all L steps from a zero initial state and
/// returns the first valid_len projected outputs. Pad steps cannot reach
/// back into the returned rows, so they are computed and dropped.
Eigen::MatrixXd gru_forward(const PaddedSequence& seq, const GruParams& params,
                            GruContext* ctx = nullptr);

struct GruGradients {
  Eigen::MatrixXd seq;  // L x C_in, zero on pad rows
  GruParams params;
};

/// Exact backpropagation through time over the valid steps. grad_out has
/// one row per valid step.
GruGradients gru_backward(const Eigen::MatrixXd& grad_out,
                          const PaddedSequence& seq, const GruParams& params,
                          const GruContext& ctx);

/// Checkpoint: <path> holds the tensors as flat little-endian float64 in
/// manifest order; <path>.json lists {name, shape} per tensor.
void save_gru_checkpoint(const std::filesystem::path& path,
                         const GruParams& params);
GruParams load_gru_checkpoint(const std::filesystem::path& path);

}  // namespace dynagg
