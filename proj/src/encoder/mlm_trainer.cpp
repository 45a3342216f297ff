// SPDX-License-Identifier: Apache-2.0
#include "winoattn/mlm_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "winoattn/error.hpp"
#include "winoattn/rng.hpp"

namespace winoattn {

namespace reference {

namespace {

using Vec = std::vector<double>;

struct LayerOffsets {
  std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

struct Offsets {
  std::size_t tok, pos;
  std::vector<LayerOffsets> layers;
  std::size_t fin_g, fin_b, mlm_b, total;
};

Offsets offsets(const EncoderConfig& c) {
  const std::size_t d = c.d_model, f = c.d_ff, v = c.vocab_size;
  Offsets o{};
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    const auto here = at;
    at += n;
    return here;
  };
  o.tok = take(v * d);
  o.pos = take(static_cast<std::size_t>(c.max_seq) * d);
  for (int l = 0; l < c.layers; ++l) {
    LayerOffsets lo{};
    lo.ln1_g = take(d);
    lo.ln1_b = take(d);
    lo.wq = take(d * d);
    lo.bq = take(d);
    lo.wk = take(d * d);
    lo.bk = take(d);
    lo.wv = take(d * d);
    lo.bv = take(d);
    lo.wo = take(d * d);
    lo.bo = take(d);
    lo.ln2_g = take(d);
    lo.ln2_b = take(d);
    lo.w1 = take(d * f);
    lo.b1 = take(f);
    lo.w2 = take(f * d);
    lo.b2 = take(d);
    o.layers.push_back(lo);
  }
  o.fin_g = take(d);
  o.fin_b = take(d);
  o.mlm_b = take(v);
  o.total = at;
  return o;
}

// Same order as offsets(): visit(tensor) for every tensor.
template <typename W, typename F>
void for_each_tensor(W& w, F&& visit) {
  visit(w.token_embedding);
  visit(w.position_embedding);
  for (auto& l : w.layers) {
    visit(l.ln1_gamma);
    visit(l.ln1_beta);
    visit(l.wq);
    visit(l.bq);
    visit(l.wk);
    visit(l.bk);
    visit(l.wv);
    visit(l.bv);
    visit(l.wo);
    visit(l.bo);
    visit(l.ln2_gamma);
    visit(l.ln2_beta);
    visit(l.w1);
    visit(l.b1);
    visit(l.w2);
    visit(l.b2);
  }
  visit(w.final_gamma);
  visit(w.final_beta);
  visit(w.mlm_bias);
}

// y[rows][out] = x[rows][in] W[in][out] + b
void lin(const double* x, int rows, int in, const double* w, const double* b, int out, double* y) {
  for (int i = 0; i < rows; ++i) {
    double* yi = y + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) yi[o] = b ? b[o] : 0.0;
    for (int k = 0; k < in; ++k) {
      const double xk = x[static_cast<std::size_t>(i) * in + k];
      const double* wk = w + static_cast<std::size_t>(k) * out;
      for (int o = 0; o < out; ++o) yi[o] += xk * wk[o];
    }
  }
}

// Accumulates dW += x^T dy, db += colsum(dy), dx += dy W^T.
void lin_back(const double* x, const double* dy, int rows, int in, int out, const double* w, double* dw, double* db,
              double* dx) {
  for (int i = 0; i < rows; ++i) {
    const double* dyi = dy + static_cast<std::size_t>(i) * out;
    const double* xi = x + static_cast<std::size_t>(i) * in;
    if (db)
      for (int o = 0; o < out; ++o) db[o] += dyi[o];
    for (int k = 0; k < in; ++k) {
      const double* wk = w + static_cast<std::size_t>(k) * out;
      double* dwk = dw + static_cast<std::size_t>(k) * out;
      double acc = 0.0;
      for (int o = 0; o < out; ++o) {
        dwk[o] += xi[k] * dyi[o];
        acc += dyi[o] * wk[o];
      }
      if (dx) dx[static_cast<std::size_t>(i) * in + k] += acc;
    }
  }
}

struct LnCache {
  Vec xhat, rstd;
};

void ln_fwd(const double* x, int rows, int dim, const double* g, const double* b, LnCache& c, double* y) {
  c.xhat.assign(static_cast<std::size_t>(rows) * dim, 0.0);
  c.rstd.assign(rows, 0.0);
  for (int i = 0; i < rows; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * dim;
    double mean = 0.0;
    for (int d = 0; d < dim; ++d) mean += xi[d];
    mean /= dim;
    double var = 0.0;
    for (int d = 0; d < dim; ++d) var += (xi[d] - mean) * (xi[d] - mean);
    var /= dim;
    const double rstd = 1.0 / std::sqrt(var + static_cast<double>(kLayerNormEps));
    c.rstd[i] = rstd;
    for (int d = 0; d < dim; ++d) {
      const double xh = (xi[d] - mean) * rstd;
      c.xhat[static_cast<std::size_t>(i) * dim + d] = xh;
      y[static_cast<std::size_t>(i) * dim + d] = xh * g[d] + b[d];
    }
  }
}

void ln_back(const LnCache& c, const double* dy, int rows, int dim, const double* g, double* dg, double* db,
             double* dx) {
  std::vector<double> dxh(dim);
  for (int i = 0; i < rows; ++i) {
    const double* dyi = dy + static_cast<std::size_t>(i) * dim;
    const double* xh = c.xhat.data() + static_cast<std::size_t>(i) * dim;
    double m1 = 0.0, m2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      dg[d] += dyi[d] * xh[d];
      db[d] += dyi[d];
      dxh[d] = dyi[d] * g[d];
      m1 += dxh[d];
      m2 += dxh[d] * xh[d];
    }
    m1 /= dim;
    m2 /= dim;
    for (int d = 0; d < dim; ++d)
      dx[static_cast<std::size_t>(i) * dim + d] += c.rstd[i] * (dxh[d] - m1 - xh[d] * m2);
  }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)) + x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

struct LayerCache {
  Vec x_in, a, q, k, v, probs, ctx, x_mid, b, u, g;
  LnCache ln1, ln2;
};

struct Cache {
  std::vector<LayerCache> layers;
  Vec x_final, hf, logits;
  LnCache lnf;
};

void run_forward(const EncoderConfig& c, const Offsets& off, std::span<const double> p, std::span<const int> ids,
                 Cache& cache) {
  const int n = static_cast<int>(ids.size());
  const int d = c.d_model, f = c.d_ff, H = c.heads, dh = c.d_head(), V = c.vocab_size;
  const std::size_t nd = static_cast<std::size_t>(n) * d;
  const double* P = p.data();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Vec x(nd);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      x[static_cast<std::size_t>(i) * d + j] =
          P[off.tok + static_cast<std::size_t>(ids[i]) * d + j] + P[off.pos + static_cast<std::size_t>(i) * d + j];

  cache.layers.assign(c.layers, {});
  for (int l = 0; l < c.layers; ++l) {
    const auto& o = off.layers[l];
    auto& lc = cache.layers[l];
    lc.x_in = x;
    lc.a.assign(nd, 0.0);
    ln_fwd(x.data(), n, d, P + o.ln1_g, P + o.ln1_b, lc.ln1, lc.a.data());
    lc.q.assign(nd, 0.0);
    lc.k.assign(nd, 0.0);
    lc.v.assign(nd, 0.0);
    lin(lc.a.data(), n, d, P + o.wq, P + o.bq, d, lc.q.data());
    lin(lc.a.data(), n, d, P + o.wk, P + o.bk, d, lc.k.data());
    lin(lc.a.data(), n, d, P + o.wv, P + o.bv, d, lc.v.data());
    lc.probs.assign(static_cast<std::size_t>(H) * n * n, 0.0);
    lc.ctx.assign(nd, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < n; ++i) {
        double* row = lc.probs.data() + (static_cast<std::size_t>(h) * n + i) * n;
        double mx = -INFINITY;
        for (int j = 0; j < n; ++j) {
          double s = 0.0;
          for (int e = 0; e < dh; ++e)
            s += lc.q[static_cast<std::size_t>(i) * d + h * dh + e] * lc.k[static_cast<std::size_t>(j) * d + h * dh + e];
          row[j] = s * scale;
          mx = std::max(mx, row[j]);
        }
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
          row[j] = std::exp(row[j] - mx);
          sum += row[j];
        }
        for (int j = 0; j < n; ++j) row[j] /= sum;
        for (int e = 0; e < dh; ++e) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += row[j] * lc.v[static_cast<std::size_t>(j) * d + h * dh + e];
          lc.ctx[static_cast<std::size_t>(i) * d + h * dh + e] = acc;
        }
      }
    }
    Vec out(nd);
    lin(lc.ctx.data(), n, d, P + o.wo, P + o.bo, d, out.data());
    for (std::size_t i = 0; i < nd; ++i) x[i] += out[i];
    lc.x_mid = x;
    lc.b.assign(nd, 0.0);
    ln_fwd(x.data(), n, d, P + o.ln2_g, P + o.ln2_b, lc.ln2, lc.b.data());
    lc.u.assign(static_cast<std::size_t>(n) * f, 0.0);
    lin(lc.b.data(), n, d, P + o.w1, P + o.b1, f, lc.u.data());
    lc.g.resize(lc.u.size());
    for (std::size_t i = 0; i < lc.u.size(); ++i) lc.g[i] = gelu(lc.u[i]);
    lin(lc.g.data(), n, f, P + o.w2, P + o.b2, d, out.data());
    for (std::size_t i = 0; i < nd; ++i) x[i] += out[i];
  }
  cache.x_final = x;
  cache.hf.assign(nd, 0.0);
  ln_fwd(x.data(), n, d, P + off.fin_g, P + off.fin_b, cache.lnf, cache.hf.data());
  cache.logits.assign(static_cast<std::size_t>(n) * V, 0.0);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < V; ++t) {
      double s = P[off.mlm_b + t];
      for (int j = 0; j < d; ++j)
        s += cache.hf[static_cast<std::size_t>(i) * d + j] * P[off.tok + static_cast<std::size_t>(t) * d + j];
      cache.logits[static_cast<std::size_t>(i) * V + t] = s;
    }
}

void check_inputs(const EncoderConfig& c, std::span<const double> params, std::span<const int> ids) {
  c.validate();
  if (params.size() != parameter_count(c)) throw ShapeError("reference: parameter vector size mismatch");
  if (ids.empty() || static_cast<int>(ids.size()) > c.max_seq) throw InvalidArgument("reference: bad sequence length");
  for (int id : ids)
    if (id < 0 || id >= c.vocab_size) throw InvalidArgument("reference: token id out of range");
}

}  // namespace

std::size_t parameter_count(const EncoderConfig& c) { return offsets(c).total; }

std::vector<double> flatten(const EncoderWeights& w) {
  w.validate();
  std::vector<double> out;
  out.reserve(parameter_count(w.config));
  for_each_tensor(w, [&](const std::vector<float>& t) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}

void unflatten(std::span<const double> flat, EncoderWeights& w) {
  if (flat.size() != parameter_count(w.config)) throw ShapeError("unflatten: size mismatch");
  std::size_t at = 0;
  for_each_tensor(w, [&](std::vector<float>& t) {
    for (auto& v : t) v = static_cast<float>(flat[at++]);
  });
}

ForwardResult forward(const EncoderConfig& c, std::span<const double> params, std::span<const int> ids) {
  check_inputs(c, params, ids);
  Cache cache;
  run_forward(c, offsets(c), params, ids, cache);
  ForwardResult r;
  r.logits = std::move(cache.logits);
  for (auto& l : cache.layers) r.attention.insert(r.attention.end(), l.probs.begin(), l.probs.end());
  return r;
}

double mlm_loss(const EncoderConfig& c, std::span<const double> params, std::span<const int> ids,
                std::span<const int> targets, std::span<double> grad) {
  check_inputs(c, params, ids);
  if (targets.size() != ids.size()) throw ShapeError("mlm_loss: targets length mismatch");
  const Offsets off = offsets(c);
  Cache cache;
  run_forward(c, off, params, ids, cache);

  const int n = static_cast<int>(ids.size());
  const int d = c.d_model, f = c.d_ff, H = c.heads, dh = c.d_head(), V = c.vocab_size;
  const std::size_t nd = static_cast<std::size_t>(n) * d;
  int count = 0;
  for (int t : targets) count += t >= 0;
  if (count == 0) {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }

  double loss = 0.0;
  Vec dlogits(static_cast<std::size_t>(n) * V, 0.0);
  for (int i = 0; i < n; ++i) {
    if (targets[i] < 0) continue;
    if (targets[i] >= V) throw InvalidArgument("mlm_loss: target id out of range");
    const double* row = cache.logits.data() + static_cast<std::size_t>(i) * V;
    double mx = *std::max_element(row, row + V);
    double sum = 0.0;
    for (int t = 0; t < V; ++t) sum += std::exp(row[t] - mx);
    const double lse = mx + std::log(sum);
    loss -= row[targets[i]] - lse;
    for (int t = 0; t < V; ++t)
      dlogits[static_cast<std::size_t>(i) * V + t] = std::exp(row[t] - lse) / count;
    dlogits[static_cast<std::size_t>(i) * V + targets[i]] -= 1.0 / count;
  }
  loss /= count;
  if (grad.empty()) return loss;
  if (grad.size() != params.size()) throw ShapeError("mlm_loss: gradient buffer size mismatch");

  std::fill(grad.begin(), grad.end(), 0.0);
  const double* P = params.data();
  double* G = grad.data();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // Tied head: logits = hf E^T + b.
  Vec dh_f(nd, 0.0);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < V; ++t) {
      const double g = dlogits[static_cast<std::size_t>(i) * V + t];
      if (g == 0.0) continue;
      G[off.mlm_b + t] += g;
      for (int j = 0; j < d; ++j) {
        G[off.tok + static_cast<std::size_t>(t) * d + j] += g * cache.hf[static_cast<std::size_t>(i) * d + j];
        dh_f[static_cast<std::size_t>(i) * d + j] += g * P[off.tok + static_cast<std::size_t>(t) * d + j];
      }
    }
  Vec dx(nd, 0.0);
  ln_back(cache.lnf, dh_f.data(), n, d, P + off.fin_g, G + off.fin_g, G + off.fin_b, dx.data());

  for (int l = c.layers - 1; l >= 0; --l) {
    const auto& o = off.layers[l];
    const auto& lc = cache.layers[l];
    // FFN block: x_out = x_mid + W2 gelu(W1 LN2(x_mid)).
    Vec dg(static_cast<std::size_t>(n) * f, 0.0);
    lin_back(lc.g.data(), dx.data(), n, f, d, P + o.w2, G + o.w2, G + o.b2, dg.data());
    for (std::size_t i = 0; i < dg.size(); ++i) dg[i] *= gelu_grad(lc.u[i]);
    Vec db(nd, 0.0);
    lin_back(lc.b.data(), dg.data(), n, d, f, P + o.w1, G + o.w1, G + o.b1, db.data());
    Vec dmid = dx;  // residual
    ln_back(lc.ln2, db.data(), n, d, P + o.ln2_g, G + o.ln2_g, G + o.ln2_b, dmid.data());

    // Attention block: x_mid = x_in + Wo ctx.
    Vec dctx(nd, 0.0);
    lin_back(lc.ctx.data(), dmid.data(), n, d, d, P + o.wo, G + o.wo, G + o.bo, dctx.data());
    Vec dq(nd, 0.0), dk(nd, 0.0), dv(nd, 0.0);
    std::vector<double> dp(n), ds(n);
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < n; ++i) {
        const double* row = lc.probs.data() + (static_cast<std::size_t>(h) * n + i) * n;
        const double* dci = dctx.data() + static_cast<std::size_t>(i) * d + h * dh;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) {
          const double* vj = lc.v.data() + static_cast<std::size_t>(j) * d + h * dh;
          double acc = 0.0;
          for (int e = 0; e < dh; ++e) {
            acc += dci[e] * vj[e];
            dv[static_cast<std::size_t>(j) * d + h * dh + e] += row[j] * dci[e];
          }
          dp[j] = acc;
          dot += acc * row[j];
        }
        for (int j = 0; j < n; ++j) ds[j] = row[j] * (dp[j] - dot) * scale;
        for (int j = 0; j < n; ++j) {
          if (ds[j] == 0.0) continue;
          for (int e = 0; e < dh; ++e) {
            dq[static_cast<std::size_t>(i) * d + h * dh + e] += ds[j] * lc.k[static_cast<std::size_t>(j) * d + h * dh + e];
            dk[static_cast<std::size_t>(j) * d + h * dh + e] += ds[j] * lc.q[static_cast<std::size_t>(i) * d + h * dh + e];
          }
        }
      }
    }
    Vec da(nd, 0.0);
    lin_back(lc.a.data(), dq.data(), n, d, d, P + o.wq, G + o.wq, G + o.bq, da.data());
    lin_back(lc.a.data(), dk.data(), n, d, d, P + o.wk, G + o.wk, G + o.bk, da.data());
    lin_back(lc.a.data(), dv.data(), n, d, d, P + o.wv, G + o.wv, G + o.bv, da.data());
    Vec din = dmid;  // residual
    ln_back(lc.ln1, da.data(), n, d, P + o.ln1_g, G + o.ln1_g, G + o.ln1_b, din.data());
    dx = std::move(din);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      const double g = dx[static_cast<std::size_t>(i) * d + j];
      G[off.tok + static_cast<std::size_t>(ids[i]) * d + j] += g;
      G[off.pos + static_cast<std::size_t>(i) * d + j] += g;
    }
  return loss;
}

}  // namespace reference

MlmTrainReport train_mlm(EncoderWeights& w, std::span<const std::vector<int>> corpus, int mask_id,
                         const MlmTrainConfig& cfg) {
  if (corpus.empty()) throw InvalidArgument("train_mlm: empty corpus");
  if (cfg.batch_size < 1 || cfg.steps < 0 || !(cfg.mask_prob > 0.0 && cfg.mask_prob <= 1.0))
    throw InvalidArgument("train_mlm: bad training config");
  if (mask_id < 0 || mask_id >= w.config.vocab_size) throw InvalidArgument("train_mlm: mask id out of range");

  auto params = reference::flatten(w);
  const std::size_t np = params.size();
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np), batch_grad(np);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Rng rng(cfg.seed);
  MlmTrainReport report;

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
    double batch_loss = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const auto& seq = corpus[rng.uniform_index(corpus.size())];
      std::vector<int> input = seq;
      std::vector<int> targets(seq.size(), -1);
      bool any = false;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (rng.uniform() < cfg.mask_prob) {
          input[i] = mask_id;
          targets[i] = seq[i];
          any = true;
        }
      }
      if (!any) {
        const auto i = rng.uniform_index(seq.size());
        input[i] = mask_id;
        targets[i] = seq[i];
      }
      batch_loss += reference::mlm_loss(w.config, params, input, targets, grad);
      for (std::size_t i = 0; i < np; ++i) batch_grad[i] += grad[i];
    }
    report.losses.push_back(batch_loss / cfg.batch_size);
    const double t = step + 1;
    const double c1 = 1.0 - std::pow(beta1, t), c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < np; ++i) {
      const double g = batch_grad[i] / cfg.batch_size;
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      params[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
  reference::unflatten(params, w);
  return report;
}

}  // namespace winoattn
