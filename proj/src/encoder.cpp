#include "trobench/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace trobench::encoder {

namespace {

constexpr double kLayerNormEps = 1e-6;

#ifdef TROBENCH_FAULT_PAD_ONE_FILL
constexpr double kPadFill = 1.0;  // negative-control build: breaks zero-filling on purpose
#else
constexpr double kPadFill = 0.0;
#endif

class UniformInit {
 public:
  explicit UniformInit(std::uint64_t seed) : rng_(seed) {}

  Matrix matrix(int rows, int cols, int fan_in) {
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        m(r, c) = dist(rng_);
      }
    }
    return m;
  }

  Vector vector(int n, int fan_in) { return matrix(n, 1, fan_in).col(0); }

 private:
  std::mt19937_64 rng_;
};

LayerNorm unit_norm(int dim) { return {Vector::Ones(dim), Vector::Zero(dim)}; }

void require_finite(const Matrix& m, const char* where) {
  if (!m.allFinite()) {
    throw EncoderError(std::string("non-finite values in ") + where);
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
  Matrix y = x * w;
  y.rowwise() += b.transpose();
  return y;
}

void append_patches(const GrayFrame& image, int patch, std::vector<RowVector>& out) {
  if (image.empty() || image.height() % patch != 0 || image.width() % patch != 0) {
    throw EncoderError("image of " + std::to_string(image.height()) + "x" +
                       std::to_string(image.width()) + " does not divide into " +
                       std::to_string(patch) + "x" + std::to_string(patch) + " patches");
  }
  for (int pr = 0; pr < image.height() / patch; ++pr) {
    for (int pc = 0; pc < image.width() / patch; ++pc) {
      RowVector v(patch * patch);
      for (int r = 0; r < patch; ++r) {
        for (int c = 0; c < patch; ++c) {
          v(r * patch + c) = image.at(pr * patch + r, pc * patch + c);
        }
      }
      out.push_back(std::move(v));
    }
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (blocks < 1) throw EncoderError("encoder needs at least one block");
  if (dim < 1 || heads < 1 || dim % heads != 0) {
    throw EncoderError("token dimension must be a positive multiple of the head count");
  }
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw EncoderError("keep_ratio must lie in (0, 1]");
  }
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw EncoderError("rho must lie in [0, 1]");
  }
  for (int s : prune_stages) {
    if (s < 1 || s > blocks) {
      throw EncoderError("pruning stage " + std::to_string(s) + " outside 1.." +
                         std::to_string(blocks));
    }
  }
  if (patch < 1 || template_grid < 1 || search_grid < 1) {
    throw EncoderError("patch size and grids must be positive");
  }
}

EncoderParams init_params(const EncoderConfig& cfg) {
  cfg.validate();
  UniformInit init(cfg.seed);
  const int d = cfg.dim;
  const int pp = cfg.patch * cfg.patch;
  EncoderParams p;
  p.embed.patch = cfg.patch;
  p.embed.projection = init.matrix(pp, d, pp);
  p.embed.bias = init.vector(d, pp);
  for (int i = 0; i < cfg.blocks; ++i) {
    BlockWeights b;
    b.heads = cfg.heads;
    b.norm1 = unit_norm(d);
    b.wq = init.matrix(d, d, d);
    b.wk = init.matrix(d, d, d);
    b.wv = init.matrix(d, d, d);
    b.wo = init.matrix(d, d, d);
    b.bq = init.vector(d, d);
    b.bk = init.vector(d, d);
    b.bv = init.vector(d, d);
    b.bo = init.vector(d, d);
    b.norm2 = unit_norm(d);
    b.w1 = init.matrix(d, 4 * d, d);
    b.b1 = init.vector(4 * d, d);
    b.w2 = init.matrix(4 * d, d, 4 * d);
    b.b2 = init.vector(d, 4 * d);
    p.blocks.push_back(std::move(b));
  }
  for (int i = 0; i < cfg.blocks; ++i) {
    p.gates.push_back({init.vector(d, d), 0.0});
  }
  return p;
}

EliminationMask EliminationMask::identity(int n) {
  EliminationMask m;
  m.indices.resize(static_cast<std::size_t>(n));
  std::iota(m.indices.begin(), m.indices.end(), 0);
  return m;
}

bool EliminationMask::strictly_increasing() const {
  return std::adjacent_find(indices.begin(), indices.end(),
                            [](int a, int b) { return a >= b; }) == indices.end();
}

EliminationMask EliminationMask::compose(const EliminationMask& inner) const {
  EliminationMask out;
  out.indices.reserve(inner.indices.size());
  for (int j : inner.indices) {
    if (j < 0 || j >= size()) {
      throw EncoderError("mask index " + std::to_string(j) + " outside " + std::to_string(size()) +
                         " survivors");
    }
    out.indices.push_back(indices[static_cast<std::size_t>(j)]);
  }
  return out;
}

RowVector positional_encoding(int position, int dim) {
  RowVector pe(dim);
  for (int k = 0; k < dim; ++k) {
    const int pair = k / 2;
    const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(dim));
    pe(k) = (k % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
  }
  return pe;
}

TokenMap embed(const GrayFrame& template_image, const GrayFrame& search_image,
               const EmbedWeights& weights, int dim) {
  const int pp = weights.patch * weights.patch;
  if (weights.projection.rows() != pp || weights.projection.cols() != dim ||
      weights.bias.size() != dim) {
    throw EncoderError("embedding weights do not match patch size and token dimension");
  }
  std::vector<RowVector> patches;
  append_patches(template_image, weights.patch, patches);
  const int n_template = static_cast<int>(patches.size());
  append_patches(search_image, weights.patch, patches);

  TokenMap out;
  out.n_template = n_template;
  out.n_search = static_cast<int>(patches.size()) - n_template;
  out.tokens.resize(static_cast<Eigen::Index>(patches.size()), dim);
  for (int i = 0; i < static_cast<int>(patches.size()); ++i) {
    out.tokens.row(i) = patches[static_cast<std::size_t>(i)] * weights.projection +
                        weights.bias.transpose() + positional_encoding(i, dim);
  }
  return out;
}

Matrix layer_norm(const Matrix& x, const LayerNorm& p) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const RowVector centered = x.row(r).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(x.cols());
    y.row(r) = (centered / std::sqrt(var + kLayerNormEps)).cwiseProduct(p.scale.transpose()) +
               p.shift.transpose();
  }
  return y;
}

void softmax_rows(Matrix& scores) {
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double peak = scores.row(r).maxCoeff();
    scores.row(r) = (scores.row(r).array() - peak).exp();
    scores.row(r) /= scores.row(r).sum();
  }
}

Matrix multi_head_attention(const Matrix& normed, const BlockWeights& w, Matrix* attention) {
  const auto d = normed.cols();
  if (w.heads < 1 || d % w.heads != 0) {
    throw EncoderError("head count does not divide token dimension");
  }
  const auto dh = d / w.heads;
  const Matrix q = affine(normed, w.wq, w.bq);
  const Matrix k = affine(normed, w.wk, w.bk);
  const Matrix v = affine(normed, w.wv, w.bv);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix heads_out(normed.rows(), d);
  Matrix mean_attn = Matrix::Zero(normed.rows(), normed.rows());
  for (int h = 0; h < w.heads; ++h) {
    Matrix a = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * scale;
    softmax_rows(a);
    heads_out.middleCols(h * dh, dh) = a * v.middleCols(h * dh, dh);
    mean_attn += a;
  }
  if (attention != nullptr) {
    *attention = mean_attn / static_cast<double>(w.heads);
  }
  return affine(heads_out, w.wo, w.bo);
}

BlockOutput vit_block(const TokenMap& x, const BlockWeights& w) {
  if (!x.consistent() || w.wq.rows() != x.dim()) {
    throw EncoderError("token map does not match block weights");
  }
  BlockOutput out;
  out.tokens = x;
  out.tokens.tokens += multi_head_attention(layer_norm(x.tokens, w.norm1), w, &out.attention);
  require_finite(out.tokens.tokens, "attention sub-layer");
  Matrix hidden = affine(layer_norm(out.tokens.tokens, w.norm2), w.w1, w.b1);
  hidden = hidden.unaryExpr(&gelu);
  out.tokens.tokens += affine(hidden, w.w2, w.b2);
  require_finite(out.tokens.tokens, "MLP sub-layer");
  return out;
}

int survivor_count(double keep_ratio, int n_search) {
  // The slack absorbs products such as 0.7 * 10 = 7.000000000000001.
  const int k = static_cast<int>(std::ceil(keep_ratio * n_search - 1e-9));
  return std::clamp(k, 1, n_search);
}

std::vector<double> search_token_scores(const TokenMap& x, const Matrix& attention) {
  if (attention.rows() != x.size() || attention.cols() != x.size()) {
    throw EncoderError("attention matrix does not match token map");
  }
  if (x.n_template < 1) {
    throw EncoderError("candidate elimination needs template tokens");
  }
  const RowVector received =
      attention.topRows(x.n_template).rightCols(x.n_search).colwise().mean();
  return {received.data(), received.data() + received.size()};
}

EliminationMask select_top_k(const std::vector<double>& scores, int k) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  order.resize(static_cast<std::size_t>(std::clamp(k, 0, static_cast<int>(order.size()))));
  std::sort(order.begin(), order.end());
  return {order};
}

TokenMap gather(const TokenMap& full, const EliminationMask& mask) {
  TokenMap out;
  out.n_template = full.n_template;
  out.n_search = mask.size();
  out.tokens.resize(out.n_template + out.n_search, full.dim());
  out.tokens.topRows(full.n_template) = full.tokens.topRows(full.n_template);
  for (int j = 0; j < mask.size(); ++j) {
    const int src = mask.indices[static_cast<std::size_t>(j)];
    if (src < 0 || src >= full.n_search) {
      throw EncoderError("mask index outside search tokens");
    }
    out.tokens.row(full.n_template + j) = full.tokens.row(full.n_template + src);
  }
  return out;
}

Elimination candidate_eliminate(const TokenMap& x, const Matrix& attention, double keep_ratio) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) {
    throw EncoderError("keep_ratio must lie in (0, 1]");
  }
  if (x.n_search < 1) {
    throw EncoderError("candidate elimination needs search tokens");
  }
  const auto scores = search_token_scores(x, attention);
  Elimination e;
  e.mask = select_top_k(scores, survivor_count(keep_ratio, x.n_search));
  e.tokens = gather(x, e.mask);
  return e;
}

namespace {

BlockOutput run_block(const TokenMap& x, const BlockWeights& w, std::size_t index) {
  try {
    return vit_block(x, w);
  } catch (const EncoderError& e) {
    throw EncoderError("block " + std::to_string(index + 1) + ": " + e.what());
  }
}

}  // namespace

CeChainResult ce_chain(const TokenMap& h0, const std::vector<BlockWeights>& blocks,
                       const EncoderConfig& cfg) {
  CeChainResult r;
  r.features = h0;
  r.mask = EliminationMask::identity(h0.n_search);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    BlockOutput out = run_block(r.features, blocks[i], i);
    r.attentions.push_back(out.attention);
    if (cfg.prune_stages.contains(static_cast<int>(i) + 1)) {
      Elimination e = candidate_eliminate(out.tokens, out.attention, cfg.keep_ratio);
      r.mask = r.mask.compose(e.mask);
      r.stage_survivors.push_back(e.mask.size());
      r.features = std::move(e.tokens);
    } else {
      r.features = std::move(out.tokens);
    }
  }
  return r;
}

std::vector<TokenMap> plain_chain(const TokenMap& h0, const std::vector<BlockWeights>& blocks) {
  std::vector<TokenMap> levels;
  levels.reserve(blocks.size());
  const TokenMap* prev = &h0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    levels.push_back(run_block(*prev, blocks[i], i).tokens);
    prev = &levels.back();
  }
  return levels;
}

RowVector mean_token(const TokenMap& h) { return h.tokens.colwise().mean(); }

double gate(const TokenMap& h, const GateParams& g) {
  if (g.w.size() != h.dim()) {
    throw EncoderError("gate weights do not match token dimension");
  }
  const double z = mean_token(h).dot(g.w) + g.b;
  // Plain sigmoid rounds to 0 or 1 once |z| exceeds ~37.
  return std::clamp(1.0 / (1.0 + std::exp(-z)), std::numeric_limits<double>::min(),
                    std::nextafter(1.0, 0.0));
}

GateGradient gate_gradient(const TokenMap& h, const GateParams& g) {
  const double value = gate(h, g);
  const double slope = value * (1.0 - value);
  return {mean_token(h).transpose() * slope, slope};
}

TokenMap pad_restore(const TokenMap& pruned, const EliminationMask& mask, int n_search_target) {
  if (!pruned.consistent() || mask.size() != pruned.n_search) {
    throw EncoderError("mask length does not match pruned search tokens");
  }
  if (!mask.strictly_increasing() ||
      (!mask.indices.empty() && (mask.indices.front() < 0 || mask.indices.back() >= n_search_target))) {
    throw EncoderError("mask is not a strictly increasing subset of the target search slots");
  }
  TokenMap out;
  out.n_template = pruned.n_template;
  out.n_search = n_search_target;
  out.tokens = Matrix::Constant(pruned.n_template + n_search_target, pruned.dim(), kPadFill);
  out.tokens.topRows(pruned.n_template) = pruned.tokens.topRows(pruned.n_template);
  for (int j = 0; j < mask.size(); ++j) {
    out.tokens.row(pruned.n_template + mask.indices[static_cast<std::size_t>(j)]) =
        pruned.tokens.row(pruned.n_template + j);
  }
  return out;
}

Matrix gated_sum(const std::vector<TokenMap>& levels, const std::vector<GateParams>& gates) {
  if (levels.empty() || levels.size() != gates.size()) {
    throw EncoderError("need one gate per hierarchical level");
  }
  Matrix sum = Matrix::Zero(levels.front().size(), levels.front().dim());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i].tokens.rows() != sum.rows() || levels[i].tokens.cols() != sum.cols()) {
      throw EncoderError("hierarchical level " + std::to_string(i + 1) + " has a different shape");
    }
    sum += gate(levels[i], gates[i]) * levels[i].tokens;
  }
  return sum;
}

TokenMap aggregate_eq1(const TokenMap& pruned, const EliminationMask& mask,
                       const std::vector<TokenMap>& levels, const std::vector<GateParams>& gates,
                       double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw EncoderError("rho must lie in [0, 1]");
  }
  if (levels.empty()) {
    throw EncoderError("need at least one hierarchical level");
  }
  TokenMap out = pad_restore(pruned, mask, levels.front().n_search);
  if (out.n_template != levels.front().n_template) {
    throw EncoderError("template token count differs between chains");
  }
  const Matrix aggregated = gated_sum(levels, gates);
  if (aggregated.rows() != out.tokens.rows() || aggregated.cols() != out.tokens.cols()) {
    throw EncoderError("restored features and hierarchical levels differ in shape");
  }
  out.tokens = (1.0 - rho) * out.tokens + rho * aggregated;
  return out;
}

EncoderTrace encoder_trace(const GrayFrame& template_image, const GrayFrame& search_image,
                           const EncoderParams& params, const EncoderConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(params.blocks.size()) != cfg.blocks ||
      params.gates.size() != params.blocks.size()) {
    throw EncoderError("parameter set does not match block count");
  }
  EncoderTrace t;
  t.h0 = embed(template_image, search_image, params.embed, cfg.dim);
  t.ce = ce_chain(t.h0, params.blocks, cfg);
  t.levels = plain_chain(t.h0, params.blocks);
  t.restored = pad_restore(t.ce.features, t.ce.mask, t.h0.n_search);
  for (std::size_t i = 0; i < t.levels.size(); ++i) {
    t.gate_values.push_back(gate(t.levels[i], params.gates[i]));
  }
  t.output = aggregate_eq1(t.ce.features, t.ce.mask, t.levels, params.gates, cfg.rho);
  return t;
}

TokenMap encoder_forward(const GrayFrame& template_image, const GrayFrame& search_image,
                         const EncoderParams& params, const EncoderConfig& cfg) {
  return encoder_trace(template_image, search_image, params, cfg).output;
}

std::pair<GrayFrame, GrayFrame> random_inputs(const EncoderConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  auto make = [&](int grid) {
    GrayFrame f(grid * cfg.patch, grid * cfg.patch);
    for (int r = 0; r < f.height(); ++r) {
      for (int c = 0; c < f.width(); ++c) {
        f.at(r, c) = dist(rng);
      }
    }
    return f;
  };
  GrayFrame t = make(cfg.template_grid);
  GrayFrame s = make(cfg.search_grid);
  return {std::move(t), std::move(s)};
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw EncoderError("shape mismatch in comparison");
  }
  return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

}  // namespace trobench::encoder
