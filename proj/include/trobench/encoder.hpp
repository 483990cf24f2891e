#pragma once

// Reference implementation of a hierarchical aggregation encoder on top of a
// candidate-elimination ViT backbone:
//
//   F_ha = (1 - rho) * P(Hd_n) + rho * sum_i G(Hp_i) * Hp_i
//
// where Hd_i are the features of the pruned chain, Hp_i those of the plain
// (unpruned) chain over the same blocks, P scatters the surviving pruned tokens
// back to their original positions and G is a scalar gate per level.
//
// Everything is double precision and seeded; the point is numerical checking,
// not speed.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trobench/image.hpp"

namespace trobench::encoder {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class EncoderError : public std::runtime_error {
 public:
  explicit EncoderError(const std::string& what) : std::runtime_error(what) {}
};

/// Rows are tokens: template tokens first, then search tokens.
struct TokenMap {
  Matrix tokens;
  int n_template{0};
  int n_search{0};

  [[nodiscard]] int size() const { return static_cast<int>(tokens.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(tokens.cols()); }
  [[nodiscard]] bool consistent() const {
    return n_template >= 0 && n_search >= 0 && tokens.rows() == n_template + n_search;
  }
};

struct LayerNorm {
  Vector scale;
  Vector shift;
};

struct BlockWeights {
  int heads{1};
  LayerNorm norm1;
  Matrix wq, wk, wv, wo;  // D x D, applied as X * W
  Vector bq, bk, bv, bo;
  LayerNorm norm2;
  Matrix w1;  // D x 4D
  Vector b1;
  Matrix w2;  // 4D x D
  Vector b2;
};

struct GateParams {
  Vector w;
  double b{0.0};
};

struct EmbedWeights {
  int patch{4};
  Matrix projection;  // (patch*patch) x D
  Vector bias;
};

struct EncoderConfig {
  int blocks{4};
  int dim{32};
  int heads{2};
  double keep_ratio{0.7};
  std::set<int> prune_stages{2, 3};  // 1-based block indices
  double rho{0.3};
  std::uint64_t seed{0};
  int patch{4};
  int template_grid{4};  // patches per side
  int search_grid{8};

  /// Throws EncoderError on inconsistent settings.
  void validate() const;
};

struct EncoderParams {
  EmbedWeights embed;
  std::vector<BlockWeights> blocks;
  std::vector<GateParams> gates;
};

/// Scaled-uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)); unit
/// normalization scales and zero shifts. Deterministic in cfg.seed.
EncoderParams init_params(const EncoderConfig& cfg);

/// Surviving search-token indices, 0-based, strictly increasing.
struct EliminationMask {
  std::vector<int> indices;

  static EliminationMask identity(int n);
  [[nodiscard]] int size() const { return static_cast<int>(indices.size()); }
  [[nodiscard]] bool strictly_increasing() const;
  /// Maps a mask expressed in this mask's survivor coordinates back to original indices.
  [[nodiscard]] EliminationMask compose(const EliminationMask& inner) const;

  friend bool operator==(const EliminationMask&, const EliminationMask&) = default;
};

// --- embedding ---------------------------------------------------------------

/// Row `position` of the fixed sinusoidal table.
RowVector positional_encoding(int position, int dim);

/// Cuts both images into patch x patch tiles (row-major), projects them to D and
/// adds positional encodings indexed over the concatenated token sequence.
TokenMap embed(const GrayFrame& template_image, const GrayFrame& search_image,
               const EmbedWeights& weights, int dim);

// --- transformer block --------------------------------------------------------

Matrix layer_norm(const Matrix& x, const LayerNorm& p);
void softmax_rows(Matrix& scores);

/// Multi-head self-attention on already normalized tokens. `attention` receives
/// the head-averaged N x N attention matrix.
Matrix multi_head_attention(const Matrix& normed, const BlockWeights& w, Matrix* attention);

struct BlockOutput {
  TokenMap tokens;
  Matrix attention;  // head-averaged, rows sum to 1
};

/// Pre-norm block: X + Attn(LN(X)), then + MLP(LN(.)) with a GELU hidden layer.
BlockOutput vit_block(const TokenMap& x, const BlockWeights& w);

// --- candidate elimination -------------------------------------------------------

/// ceil(keep_ratio * n_search), at least 1.
int survivor_count(double keep_ratio, int n_search);

/// Mean attention each search token receives from the template queries.
std::vector<double> search_token_scores(const TokenMap& x, const Matrix& attention);

/// Top-k search positions by score; ties go to the smaller index. Sorted ascending.
EliminationMask select_top_k(const std::vector<double>& scores, int k);

struct Elimination {
  TokenMap tokens;
  EliminationMask mask;  // in the coordinates of the input map
};

Elimination candidate_eliminate(const TokenMap& x, const Matrix& attention, double keep_ratio);

/// Template rows plus the masked search rows of a full-resolution map.
TokenMap gather(const TokenMap& full, const EliminationMask& mask);

// --- chains ------------------------------------------------------------------------

struct CeChainResult {
  TokenMap features;             // Hd_n
  EliminationMask mask;          // in original search-token coordinates
  std::vector<int> stage_survivors;  // search tokens kept after each pruning stage
  std::vector<Matrix> attentions;     // per block
};

CeChainResult ce_chain(const TokenMap& h0, const std::vector<BlockWeights>& blocks,
                       const EncoderConfig& cfg);
std::vector<TokenMap> plain_chain(const TokenMap& h0, const std::vector<BlockWeights>& blocks);

// --- aggregation ------------------------------------------------------------------------

RowVector mean_token(const TokenMap& h);
double gate(const TokenMap& h, const GateParams& g);

struct GateGradient {
  Vector dw;  // G (1 - G) m
  double db;  // G (1 - G)
};
GateGradient gate_gradient(const TokenMap& h, const GateParams& g);

/// Scatters surviving search rows back to their original slots and zero-fills the rest.
TokenMap pad_restore(const TokenMap& pruned, const EliminationMask& mask, int n_search_target);

/// sum_i G(Hp_i) * Hp_i
Matrix gated_sum(const std::vector<TokenMap>& levels, const std::vector<GateParams>& gates);

TokenMap aggregate_eq1(const TokenMap& pruned, const EliminationMask& mask,
                       const std::vector<TokenMap>& levels, const std::vector<GateParams>& gates,
                       double rho);

struct EncoderTrace {
  TokenMap h0;
  CeChainResult ce;
  std::vector<TokenMap> levels;
  TokenMap restored;  // P(Hd_n)
  std::vector<double> gate_values;
  TokenMap output;    // F_ha
};

EncoderTrace encoder_trace(const GrayFrame& template_image, const GrayFrame& search_image,
                           const EncoderParams& params, const EncoderConfig& cfg);
TokenMap encoder_forward(const GrayFrame& template_image, const GrayFrame& search_image,
                         const EncoderParams& params, const EncoderConfig& cfg);

/// Seeded uniform-noise input images sized for cfg's patch grids.
std::pair<GrayFrame, GrayFrame> random_inputs(const EncoderConfig& cfg, std::uint64_t seed);

double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace trobench::encoder
