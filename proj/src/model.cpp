#include "ulv/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ulv/errors.hpp"
#include "ulv/kernels.hpp"

namespace ulv {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

struct CompactView {
  std::vector<NodeId> nodes;  // ascending present ids
  std::vector<int32_t> pos;   // node id -> compact index, -1 if absent
  Mat x;                      // np x d
};

CompactView make_compact(const Graph& g) {
  CompactView cv;
  cv.nodes = g.present_nodes();
  cv.pos.assign(g.n, -1);
  for (size_t i = 0; i < cv.nodes.size(); ++i) cv.pos[cv.nodes[i]] = static_cast<int32_t>(i);
  cv.x = Mat(cv.nodes.size(), g.dim);
  for (size_t i = 0; i < cv.nodes.size(); ++i) {
    const double* src = g.features.row(cv.nodes[i]);
    std::copy(src, src + g.dim, cv.x.row(i));
  }
  return cv;
}

// Neighbors-plus-self as CSR over compact indices, each row sorted.
struct Support {
  std::vector<size_t> off;
  std::vector<int32_t> nbr;
};

Support build_support(const Graph& g, const CompactView& cv) {
  auto adj = g.adjacency();
  Support s;
  const size_t np = cv.nodes.size();
  s.off.assign(np + 1, 0);
  for (size_t i = 0; i < np; ++i) s.off[i + 1] = s.off[i] + adj[cv.nodes[i]].size() + 1;
  s.nbr.resize(s.off[np]);
  for (size_t i = 0; i < np; ++i) {
    size_t w = s.off[i];
    bool self_placed = false;
    for (NodeId u : adj[cv.nodes[i]]) {
      int32_t j = cv.pos[u];
      if (!self_placed && static_cast<int32_t>(i) < j) {
        s.nbr[w++] = static_cast<int32_t>(i);
        self_placed = true;
      }
      s.nbr[w++] = j;
    }
    if (!self_placed) s.nbr[w++] = static_cast<int32_t>(i);
  }
  return s;
}

struct EngineContext {
  CompactView cv;
  Mat anorm;    // GCN only
  Support sup;  // GAT only
};

EngineContext make_context(const Graph& g, const ModelConfig& cfg) {
  EngineContext ctx;
  ctx.cv = make_compact(g);
  if (cfg.backbone == Backbone::GCN) {
    const size_t np = ctx.cv.nodes.size();
    ctx.anorm = Mat(np, np);
    auto adj = g.adjacency();
    std::vector<double> inv_sqrt_deg(np);
    for (size_t i = 0; i < np; ++i)
      inv_sqrt_deg[i] = 1.0 / std::sqrt(static_cast<double>(adj[ctx.cv.nodes[i]].size() + 1));
    for (size_t i = 0; i < np; ++i) {
      ctx.anorm(i, i) = inv_sqrt_deg[i] * inv_sqrt_deg[i];
      for (NodeId u : adj[ctx.cv.nodes[i]]) {
        size_t j = static_cast<size_t>(ctx.cv.pos[u]);
        ctx.anorm(i, j) = inv_sqrt_deg[i] * inv_sqrt_deg[j];
      }
    }
  } else {
    ctx.sup = build_support(g, ctx.cv);
  }
  return ctx;
}

std::vector<double> make_dropout_scales(size_t count, double p, Rng& rng) {
  // inverted dropout: kept entries scale by 1/(1-p)
  std::vector<double> scales(count);
  const double keep = 1.0 - p;
  const double boost = 1.0 / keep;
  for (size_t i = 0; i < count; ++i) scales[i] = rng.next_double() < keep ? boost : 0.0;
  return scales;
}

struct GatLayerTrace {
  Mat z;    // np x f
  std::vector<double> epre, alpha;  // aligned with Support::nbr
  Mat out;  // np x f, combined plus bias
};

struct Trace {
  // GCN
  Mat xw1, h1pre;
  Mat hw2;
  // GAT
  GatLayerTrace g1, g2;
  // shared
  Mat h1;                        // relu output
  Mat h1d;                       // after dropout (equals h1 in eval mode)
  std::vector<double> dropmask;  // empty when no dropout applied
  Mat logits;                    // np x C
};

GatLayerTrace gat_layer_forward(const Mat& x, const Mat& w, const std::vector<double>& al,
                                const std::vector<double>& ar, const std::vector<double>& b,
                                double slope, const Support& sup) {
  const auto& K = kern::active();
  GatLayerTrace t;
  t.z = matmul(x, w);
  const size_t np = x.rows;
  const size_t f = w.cols;
  std::vector<double> sl(np), sr(np);
  for (size_t i = 0; i < np; ++i) {
    sl[i] = K.dot(al.data(), t.z.row(i), f);
    sr[i] = K.dot(ar.data(), t.z.row(i), f);
  }
  t.epre.resize(sup.nbr.size());
  t.alpha.resize(sup.nbr.size());
  t.out = Mat(np, f);
  for (size_t i = 0; i < np; ++i) {
    const size_t begin = sup.off[i], end = sup.off[i + 1];
    double mx = -HUGE_VAL;
    for (size_t p = begin; p < end; ++p) {
      double pre = sl[i] + sr[sup.nbr[p]];
      t.epre[p] = pre;
      double e = pre > 0.0 ? pre : slope * pre;
      if (e > mx) mx = e;
      t.alpha[p] = e;  // store activated score, normalized below
    }
    double denom = 0.0;
    for (size_t p = begin; p < end; ++p) {
      t.alpha[p] = std::exp(t.alpha[p] - mx);
      denom += t.alpha[p];
    }
    for (size_t p = begin; p < end; ++p) t.alpha[p] /= denom;
    double* out_row = t.out.row(i);
    for (size_t p = begin; p < end; ++p)
      K.axpy(out_row, t.alpha[p], t.z.row(sup.nbr[p]), f);
  }
  add_row_vector(t.out, b);
  return t;
}

// Gradient of one attention layer. dout is consumed; dx may be null when
// input gradients are not needed.
void gat_layer_backward(const Mat& x, const Mat& w, const std::vector<double>& al,
                        const std::vector<double>& ar, double slope, const Support& sup,
                        const GatLayerTrace& t, const Mat& dout, Mat& dw, std::vector<double>& db,
                        std::vector<double>& dal, std::vector<double>& dar, Mat* dx) {
  const auto& K = kern::active();
  const size_t np = x.rows;
  const size_t f = w.cols;
  db = col_sums(dout);
  Mat dz(np, f);
  std::vector<double> dsl(np, 0.0), dsr(np, 0.0);
  std::vector<double> dalpha;
  for (size_t i = 0; i < np; ++i) {
    const size_t begin = sup.off[i], end = sup.off[i + 1];
    dalpha.assign(end - begin, 0.0);
    const double* dout_row = dout.row(i);
    double c = 0.0;
    for (size_t p = begin; p < end; ++p) {
      dalpha[p - begin] = K.dot(dout_row, t.z.row(sup.nbr[p]), f);
      c += t.alpha[p] * dalpha[p - begin];
    }
    for (size_t p = begin; p < end; ++p) {
      const int32_t j = sup.nbr[p];
      const double de = t.alpha[p] * (dalpha[p - begin] - c);
      const double dpre = t.epre[p] > 0.0 ? de : slope * de;
      dsl[i] += dpre;
      dsr[j] += dpre;
      K.axpy(dz.row(j), t.alpha[p], dout_row, f);
    }
  }
  dal.assign(f, 0.0);
  dar.assign(f, 0.0);
  for (size_t i = 0; i < np; ++i) {
    K.axpy(dz.row(i), dsl[i], al.data(), f);
    K.axpy(dz.row(i), dsr[i], ar.data(), f);
    K.axpy(dal.data(), dsl[i], t.z.row(i), f);
    K.axpy(dar.data(), dsr[i], t.z.row(i), f);
  }
  dw = matmul_at_b(x, dz);
  if (dx) *dx = matmul_a_bt(dz, w);
}

void check_finite(const Mat& m, const char* where) {
  if (!m.all_finite())
    throw NumericError(std::string(where) + " produced non-finite values");
}

Trace run_forward(const ModelParams& params, const ModelConfig& cfg, const EngineContext& ctx,
                  Mode mode, Rng* dropout_rng) {
  const auto& K = kern::active();
  Trace t;
  const size_t np = ctx.cv.nodes.size();
  const bool dropping = mode == Mode::Train && cfg.dropout > 0.0;
  if (mode == Mode::Train && cfg.dropout > 0.0 && dropout_rng == nullptr)
    throw ArgumentError("train-mode forward requires a dropout stream");
  if (np == 0) {
    t.logits = Mat(0, params.w2.cols);
    return t;
  }

  if (cfg.backbone == Backbone::GCN) {
    t.xw1 = matmul(ctx.cv.x, params.w1);
    t.h1pre = matmul(ctx.anorm, t.xw1);
    add_row_vector(t.h1pre, params.b1);
    check_finite(t.h1pre, "gcn layer 1");
    t.h1 = Mat(np, t.h1pre.cols);
    K.relu(t.h1.a.data(), t.h1pre.a.data(), t.h1pre.size());
  } else {
    t.g1 = gat_layer_forward(ctx.cv.x, params.w1, params.a_l1, params.a_r1, params.b1,
                             cfg.leaky_slope, ctx.sup);
    check_finite(t.g1.out, "gat layer 1");
    t.h1 = Mat(np, t.g1.out.cols);
    K.relu(t.h1.a.data(), t.g1.out.a.data(), t.g1.out.size());
  }

  t.h1d = t.h1;
  if (dropping) {
    t.dropmask = make_dropout_scales(t.h1.size(), cfg.dropout, *dropout_rng);
    for (size_t i = 0; i < t.h1d.size(); ++i) t.h1d.a[i] *= t.dropmask[i];
  }

  if (cfg.backbone == Backbone::GCN) {
    t.hw2 = matmul(t.h1d, params.w2);
    t.logits = matmul(ctx.anorm, t.hw2);
    add_row_vector(t.logits, params.b2);
    check_finite(t.logits, "gcn layer 2");
  } else {
    t.g2 = gat_layer_forward(t.h1d, params.w2, params.a_l2, params.a_r2, params.b2,
                             cfg.leaky_slope, ctx.sup);
    check_finite(t.g2.out, "gat layer 2");
    t.logits = t.g2.out;
  }
  return t;
}

// Numerically stable cross-entropy of one logit row.
double row_cross_entropy(const double* logits, size_t c, int32_t label) {
  double mx = logits[0];
  for (size_t j = 1; j < c; ++j) mx = std::max(mx, logits[j]);
  double sum = 0.0;
  for (size_t j = 0; j < c; ++j) sum += std::exp(logits[j] - mx);
  return mx + std::log(sum) - logits[label];
}

void check_node_set(const Graph& g, const std::vector<NodeId>& node_set, bool allow_empty) {
  if (node_set.empty() && !allow_empty) throw ArgumentError("node set is empty");
  for (NodeId v : node_set) {
    if (!g.is_present(v))
      throw ArgumentError("node " + std::to_string(v) + " is absent or out of range");
    if (g.labels[v] < 0 || g.labels[v] >= g.num_classes)
      throw ArgumentError("node " + std::to_string(v) + " has no valid label");
  }
}

// Parameters from one checkpoint can meet a config or graph from another;
// shapes must agree before any matmul indexes by them.
void check_params_shape(const ModelParams& p, const Graph& g, const ModelConfig& cfg) {
  if (p.backbone != cfg.backbone)
    throw ArgumentError("parameter backbone " + to_string(p.backbone) +
                        " does not match config backbone " + to_string(cfg.backbone));
  const size_t h = static_cast<size_t>(cfg.hidden);
  bool ok = p.w1.rows == g.dim && p.w1.cols == h && p.w2.rows == h && p.b1.size() == h &&
            p.b2.size() == p.w2.cols;
  if (ok && cfg.backbone == Backbone::GAT)
    ok = p.a_l1.size() == h && p.a_r1.size() == h && p.a_l2.size() == p.w2.cols &&
         p.a_r2.size() == p.w2.cols;
  if (!ok) throw ArgumentError("parameter shapes do not match the graph and config");
}

// Mean cross-entropy over node_set; writes softmax-minus-onehot rows scaled
// by 1/|node_set| into dlogits.
double seed_loss_gradient(const Mat& logits, const CompactView& cv, const Graph& g,
                          const std::vector<NodeId>& node_set, Mat& dlogits) {
  const size_t c = logits.cols;
  const double inv = 1.0 / static_cast<double>(node_set.size());
  double loss = 0.0;
  for (NodeId v : node_set) {
    const size_t i = static_cast<size_t>(cv.pos[v]);
    const double* row = logits.row(i);
    double mx = row[0];
    for (size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (size_t j = 0; j < c; ++j) sum += std::exp(row[j] - mx);
    const double lse = mx + std::log(sum);
    loss += (lse - row[g.labels[v]]) * inv;
    double* drow = dlogits.row(i);
    for (size_t j = 0; j < c; ++j) drow[j] += std::exp(row[j] - lse) * inv;
    drow[g.labels[v]] -= inv;
  }
  return loss;
}

struct BackwardRequest {
  bool params = false;
  bool inputs = false;
};

Gradients run_backward(const ModelParams& params, const Graph& g, const ModelConfig& cfg,
                       const EngineContext& ctx, const std::vector<NodeId>& node_set,
                       BackwardRequest req, Mode mode, Rng* dropout_rng) {
  const auto& K = kern::active();
  Trace t = run_forward(params, cfg, ctx, mode, dropout_rng);
  const size_t np = ctx.cv.nodes.size();
  const size_t h = params.w1.cols;

  Gradients out;
  Mat dlogits(np, params.w2.cols);
  out.loss = seed_loss_gradient(t.logits, ctx.cv, g, node_set, dlogits);

  Mat dh1d;
  if (cfg.backbone == Backbone::GCN) {
    out.b2 = col_sums(dlogits);
    Mat dhw2 = matmul(ctx.anorm, dlogits);  // anorm is symmetric
    out.w2 = matmul_at_b(t.h1d, dhw2);
    dh1d = matmul_a_bt(dhw2, params.w2);
  } else {
    gat_layer_backward(t.h1d, params.w2, params.a_l2, params.a_r2, cfg.leaky_slope, ctx.sup, t.g2,
                       dlogits, out.w2, out.b2, out.a_l2, out.a_r2, &dh1d);
  }

  if (!t.dropmask.empty())
    for (size_t i = 0; i < dh1d.size(); ++i) dh1d.a[i] *= t.dropmask[i];
  Mat dh1pre(np, h);
  const Mat& pre = cfg.backbone == Backbone::GCN ? t.h1pre : t.g1.out;
  K.relu_bwd(dh1pre.a.data(), dh1d.a.data(), pre.a.data(), pre.size());

  Mat dxc;
  if (cfg.backbone == Backbone::GCN) {
    out.b1 = col_sums(dh1pre);
    Mat dxw1 = matmul(ctx.anorm, dh1pre);
    out.w1 = matmul_at_b(ctx.cv.x, dxw1);
    if (req.inputs) dxc = matmul_a_bt(dxw1, params.w1);
  } else {
    gat_layer_backward(ctx.cv.x, params.w1, params.a_l1, params.a_r1, cfg.leaky_slope, ctx.sup,
                       t.g1, dh1pre, out.w1, out.b1, out.a_l1, out.a_r1,
                       req.inputs ? &dxc : nullptr);
  }

  if (req.inputs) {
    out.x = Mat(g.n, g.dim);
    for (size_t i = 0; i < np; ++i) {
      const double* src = dxc.row(i);
      std::copy(src, src + g.dim, out.x.row(ctx.cv.nodes[i]));
    }
  }
  if (!req.params) {
    out.w1 = Mat();
    out.w2 = Mat();
    out.b1.clear();
    out.b2.clear();
    out.a_l1.clear();
    out.a_r1.clear();
    out.a_l2.clear();
    out.a_r2.clear();
  }
  return out;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.backbone = p.backbone;
  z.seed = p.seed;
  z.w1 = Mat(p.w1.rows, p.w1.cols);
  z.w2 = Mat(p.w2.rows, p.w2.cols);
  z.b1.assign(p.b1.size(), 0.0);
  z.b2.assign(p.b2.size(), 0.0);
  z.a_l1.assign(p.a_l1.size(), 0.0);
  z.a_r1.assign(p.a_r1.size(), 0.0);
  z.a_l2.assign(p.a_l2.size(), 0.0);
  z.a_r2.assign(p.a_r2.size(), 0.0);
  return z;
}

template <class F>
void zip_tensors(ModelParams& p, const Gradients& g, ModelParams& m, ModelParams& v, F&& f) {
  f(p.w1.a, g.w1.a, m.w1.a, v.w1.a);
  f(p.b1, g.b1, m.b1, v.b1);
  f(p.w2.a, g.w2.a, m.w2.a, v.w2.a);
  f(p.b2, g.b2, m.b2, v.b2);
  if (!p.a_l1.empty()) {
    f(p.a_l1, g.a_l1, m.a_l1, v.a_l1);
    f(p.a_r1, g.a_r1, m.a_r1, v.a_r1);
    f(p.a_l2, g.a_l2, m.a_l2, v.a_l2);
    f(p.a_r2, g.a_r2, m.a_r2, v.a_r2);
  }
}

ModelParams adam_loop(ModelParams params, const Graph& g, const ModelConfig& cfg,
                      const std::vector<NodeId>& node_set, int epochs, Rng& dropout_rng) {
  EngineContext ctx = make_context(g, cfg);
  ModelParams m = zeros_like(params);
  ModelParams v = zeros_like(params);
  for (int t = 1; t <= epochs; ++t) {
    Gradients grads = run_backward(params, g, cfg, ctx, node_set, {.params = true, .inputs = false},
                                   Mode::Train, &dropout_rng);
    if (!std::isfinite(grads.loss))
      throw NumericError("training diverged at epoch " + std::to_string(t));
    const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
    zip_tensors(params, grads, m, v,
                [&](std::vector<double>& pv, const std::vector<double>& gv, std::vector<double>& mv,
                    std::vector<double>& vv) {
                  for (size_t i = 0; i < pv.size(); ++i) {
                    mv[i] = kAdamBeta1 * mv[i] + (1.0 - kAdamBeta1) * gv[i];
                    vv[i] = kAdamBeta2 * vv[i] + (1.0 - kAdamBeta2) * gv[i] * gv[i];
                    pv[i] -= cfg.lr * (mv[i] / bc1) / (std::sqrt(vv[i] / bc2) + kAdamEps);
                  }
                });
    if (!params.finite())
      throw NumericError("training diverged at epoch " + std::to_string(t));
  }
  return params;
}

}  // namespace

Backbone backbone_from_string(const std::string& s) {
  if (s == "gcn") return Backbone::GCN;
  if (s == "gat") return Backbone::GAT;
  throw ArgumentError("unknown backbone '" + s + "' (expected gcn or gat)");
}

std::string to_string(Backbone b) { return b == Backbone::GCN ? "gcn" : "gat"; }

void ModelConfig::validate() const {
  if (hidden < 1) throw ArgumentError("hidden must be >= 1");
  if (layers != 2) throw ArgumentError("only 2-layer models are supported");
  if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("dropout must be in [0, 1)");
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (lr <= 0.0) throw ArgumentError("lr must be positive");
  if (gat_heads != 1) throw ArgumentError("only single-head attention is supported");
  if (leaky_slope <= 0.0 || leaky_slope >= 1.0) throw ArgumentError("leaky_slope must be in (0, 1)");
}

std::string ModelConfig::digest_string() const {
  std::ostringstream os;
  os << std::setprecision(17) << "backbone=" << to_string(backbone) << ";hidden=" << hidden
     << ";layers=" << layers << ";dropout=" << dropout << ";lr=" << lr << ";epochs=" << epochs
     << ";seed=" << seed << ";gat_heads=" << gat_heads << ";leaky_slope=" << leaky_slope;
  return os.str();
}

bool ModelParams::finite() const {
  auto vec_ok = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return w1.all_finite() && w2.all_finite() && vec_ok(b1) && vec_ok(b2) && vec_ok(a_l1) &&
         vec_ok(a_r1) && vec_ok(a_l2) && vec_ok(a_r2);
}

Mat normalized_adjacency(const Graph& g) {
  ModelConfig cfg;
  cfg.backbone = Backbone::GCN;
  return make_context(g, cfg).anorm;
}

Mat forward(const ModelParams& params, const Graph& g, const ModelConfig& config, Mode mode,
            Rng* dropout_rng) {
  config.validate();
  check_params_shape(params, g, config);
  EngineContext ctx = make_context(g, config);
  Trace t = run_forward(params, config, ctx, mode, dropout_rng);
  Mat logits(g.n, params.w2.cols);
  for (size_t i = 0; i < ctx.cv.nodes.size(); ++i) {
    const double* src = t.logits.row(i);
    std::copy(src, src + logits.cols, logits.row(ctx.cv.nodes[i]));
  }
  return logits;
}

Gradients loss_and_gradients(const ModelParams& params, const Graph& g, const ModelConfig& config,
                             const std::vector<NodeId>& node_set, Wrt wrt) {
  config.validate();
  check_params_shape(params, g, config);
  check_node_set(g, node_set, false);
  EngineContext ctx = make_context(g, config);
  BackwardRequest req;
  req.params = wrt == Wrt::Parameters;
  req.inputs = wrt == Wrt::Inputs;
  return run_backward(params, g, config, ctx, node_set, req, Mode::Eval, nullptr);
}

ModelParams init_params(const Graph& g, const ModelConfig& config) {
  config.validate();
  const size_t d = g.dim;
  const size_t h = static_cast<size_t>(config.hidden);
  const size_t c = static_cast<size_t>(g.num_classes);
  if (c < 1) throw ArgumentError("graph has no classes");

  Rng rng = derive_stream(config.seed, "init");
  ModelParams p;
  p.backbone = config.backbone;
  p.seed = config.seed;
  p.w1 = Mat(d, h);
  p.w2 = Mat(h, c);
  p.b1.assign(h, 0.0);
  p.b2.assign(c, 0.0);

  auto glorot = [&](Mat& w, size_t fan_in, size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& x : w.a) x = rng.uniform(-limit, limit);
  };
  glorot(p.w1, d, h);
  glorot(p.w2, h, c);

  if (config.backbone == Backbone::GAT) {
    auto glorot_vec = [&](std::vector<double>& v, size_t f) {
      const double limit = std::sqrt(6.0 / static_cast<double>(f + 1));
      v.resize(f);
      for (double& x : v) x = rng.uniform(-limit, limit);
    };
    glorot_vec(p.a_l1, h);
    glorot_vec(p.a_r1, h);
    glorot_vec(p.a_l2, c);
    glorot_vec(p.a_r2, c);
  }
  return p;
}

ModelParams train(const Graph& g, const ModelConfig& config) {
  config.validate();
  std::vector<NodeId> train_nodes = g.nodes_with_mask(Mask::Train);
  if (train_nodes.empty()) throw ArgumentError("train mask is empty");
  check_node_set(g, train_nodes, false);
  ModelParams params = init_params(g, config);
  Rng dropout_rng = derive_stream(config.seed, "dropout");
  return adam_loop(std::move(params), g, config, train_nodes, config.epochs, dropout_rng);
}

ModelParams finetune(const ModelParams& start, const Graph& g, const ModelConfig& config,
                     const std::vector<NodeId>& node_set, int epochs) {
  config.validate();
  if (epochs < 0) throw ArgumentError("epochs must be >= 0");
  if (epochs == 0) return start;
  check_node_set(g, node_set, false);
  Rng dropout_rng = derive_stream(config.seed, "dropout");
  return adam_loop(start, g, config, node_set, epochs, dropout_rng);
}

std::vector<double> per_node_losses(const ModelParams& params, const Graph& g,
                                    const ModelConfig& config, const std::vector<NodeId>& node_set) {
  config.validate();
  check_node_set(g, node_set, true);
  Mat logits = forward(params, g, config, Mode::Eval);
  std::vector<double> losses;
  losses.reserve(node_set.size());
  for (NodeId v : node_set)
    losses.push_back(row_cross_entropy(logits.row(v), logits.cols, g.labels[v]));
  return losses;
}

namespace {

void write_tensor(std::ostream& os, const char* name, const std::vector<double>& v) {
  os << "tensor " << name << ' ' << v.size() << '\n';
  for (double x : v) os << x << '\n';
}

std::vector<double> read_tensor(std::istream& is, const std::string& expect_name) {
  std::string tag, name;
  size_t count = 0;
  if (!(is >> tag >> name >> count) || tag != "tensor" || name != expect_name)
    throw ParseError("params file: expected tensor " + expect_name);
  std::vector<double> v(count);
  for (size_t i = 0; i < count; ++i)
    if (!(is >> v[i])) throw ParseError("params file: truncated tensor " + expect_name);
  return v;
}

}  // namespace

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << std::setprecision(17);
  os << "ulv-params 1\n";
  os << "backbone " << to_string(params.backbone) << '\n';
  os << "seed " << params.seed << '\n';
  os << "shape " << params.w1.rows << ' ' << params.w1.cols << ' ' << params.w2.cols << '\n';
  write_tensor(os, "w1", params.w1.a);
  write_tensor(os, "b1", params.b1);
  write_tensor(os, "w2", params.w2.a);
  write_tensor(os, "b2", params.b2);
  if (params.backbone == Backbone::GAT) {
    write_tensor(os, "a_l1", params.a_l1);
    write_tensor(os, "a_r1", params.a_r1);
    write_tensor(os, "a_l2", params.a_l2);
    write_tensor(os, "a_r2", params.a_r2);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "ulv-params" || version != 1)
    throw ParseError(path.string() + ": not a version-1 params file");
  std::string key, backbone_name;
  uint64_t seed = 0;
  size_t d = 0, h = 0, c = 0;
  if (!(is >> key >> backbone_name) || key != "backbone")
    throw ParseError(path.string() + ": missing backbone");
  if (!(is >> key >> seed) || key != "seed") throw ParseError(path.string() + ": missing seed");
  if (!(is >> key >> d >> h >> c) || key != "shape")
    throw ParseError(path.string() + ": missing shape");

  ModelParams p;
  p.backbone = backbone_from_string(backbone_name);
  p.seed = seed;
  p.w1 = Mat(d, h);
  p.w1.a = read_tensor(is, "w1");
  if (p.w1.a.size() != d * h) throw ParseError(path.string() + ": w1 size mismatch");
  p.b1 = read_tensor(is, "b1");
  if (p.b1.size() != h) throw ParseError(path.string() + ": b1 size mismatch");
  p.w2 = Mat(h, c);
  p.w2.a = read_tensor(is, "w2");
  if (p.w2.a.size() != h * c) throw ParseError(path.string() + ": w2 size mismatch");
  p.b2 = read_tensor(is, "b2");
  if (p.b2.size() != c) throw ParseError(path.string() + ": b2 size mismatch");
  if (p.backbone == Backbone::GAT) {
    p.a_l1 = read_tensor(is, "a_l1");
    p.a_r1 = read_tensor(is, "a_r1");
    p.a_l2 = read_tensor(is, "a_l2");
    p.a_r2 = read_tensor(is, "a_r2");
    if (p.a_l1.size() != h || p.a_r1.size() != h || p.a_l2.size() != c || p.a_r2.size() != c)
      throw ParseError(path.string() + ": attention vector size mismatch");
  }
  return p;
}

}  // namespace ulv
