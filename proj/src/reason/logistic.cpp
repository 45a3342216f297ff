// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "winoattn/error.hpp"
#include "winoattn/reason.hpp"

namespace winoattn::reason {

namespace {

// log(1 + exp(m)) without overflow.
double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Design {
  std::size_t n = 0, dim = 0;
  std::vector<double> x;  // row-major n x dim
  std::vector<double> sign;  // +1 for class 1, -1 for class 0

  const double* row(std::size_t i) const { return x.data() + i * dim; }
};

Design make_design(std::span<const FeatureVector> xs, std::span<const int> y) {
  if (xs.size() != y.size()) throw ShapeError("train: features and labels differ in length");
  if (xs.empty()) throw InvalidArgument("train: empty training set");
  Design d;
  d.n = xs.size();
  d.dim = xs.front().values.size();
  if (d.dim != xs.front().layout.dim()) throw ShapeError("train: feature length does not match its layout");
  d.x.reserve(d.n * d.dim);
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!(xs[i].layout == xs.front().layout) || xs[i].values.size() != d.dim)
      throw ShapeError("train: inconsistent feature layouts (row " + std::to_string(i) + ")");
    for (float v : xs[i].values) {
      if (!std::isfinite(v)) throw InvalidArgument("train: non-finite feature in row " + std::to_string(i));
      d.x.push_back(v);
    }
    if (y[i] != 0 && y[i] != 1) throw InvalidArgument("train: labels must be 0 or 1");
    d.sign.push_back(y[i] == 1 ? 1.0 : -1.0);
  }
  return d;
}

// theta = (w, b). Returns the objective; fills grad when non-null.
double eval(const Design& d, std::span<const double> theta, double lambda, std::vector<double>* grad,
            std::vector<double>* curvature) {
  const std::size_t D = d.dim;
  double f = 0.0;
  for (std::size_t j = 0; j < D; ++j) f += 0.5 * lambda * theta[j] * theta[j];
  if (grad) {
    grad->assign(D + 1, 0.0);
    for (std::size_t j = 0; j < D; ++j) (*grad)[j] = lambda * theta[j];
  }
  if (curvature) curvature->assign(d.n, 0.0);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double* xi = d.row(i);
    double z = theta[D];
    for (std::size_t j = 0; j < D; ++j) z += theta[j] * xi[j];
    const double m = -d.sign[i] * z;
    f += softplus(m);
    if (grad) {
      const double coef = -d.sign[i] * sigmoid(m);
      for (std::size_t j = 0; j < D; ++j) (*grad)[j] += coef * xi[j];
      (*grad)[D] += coef;
    }
    if (curvature) {
      const double p = sigmoid(z);
      (*curvature)[i] = p * (1.0 - p);
    }
  }
  return f;
}

// In-place Cholesky of a symmetric positive definite matrix (lower
// triangle). Returns false if a pivot is not positive.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double s = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) s -= a[j * n + k] * a[j * n + k];
    if (!(s > 0.0)) return false;
    const double diag = std::sqrt(s);
    a[j * n + j] = diag;
    for (std::size_t i = j + 1; i < n; ++i) {
      double t = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) t -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = t / diag;
    }
  }
  return true;
}

void cholesky_solve(const std::vector<double>& l, std::size_t n, std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

double inf_norm(const std::vector<double>& g) {
  double m = 0.0;
  for (double v : g) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

double objective(std::span<const double> weights, double bias, std::span<const FeatureVector> x,
                 std::span<const int> y, double lambda, std::vector<double>* gradient) {
  auto d = make_design(x, y);
  if (weights.size() != d.dim) throw ShapeError("objective: weight length does not match features");
  std::vector<double> theta(weights.begin(), weights.end());
  theta.push_back(bias);
  return eval(d, theta, lambda, gradient, nullptr);
}

LinearModel train(std::span<const FeatureVector> x, std::span<const int> y, const TrainConfig& cfg) {
  if (!(cfg.lambda > 0.0)) throw InvalidArgument("train: lambda must be positive");
  const Design d = make_design(x, y);
  const bool has0 = std::find(y.begin(), y.end(), 0) != y.end();
  const bool has1 = std::find(y.begin(), y.end(), 1) != y.end();
  if (!(has0 && has1) && !cfg.allow_degenerate)
    throw InvalidArgument("train: both classes must be present (set allow_degenerate to override)");

  const std::size_t P = d.dim + 1;
  std::vector<double> theta(P, 0.0), grad, curv, hess(P * P), step(P), trial(P);
  double f = eval(d, theta, cfg.lambda, &grad, &curv);

  LinearModel m;
  m.layout = x.front().layout;
  m.lambda = cfg.lambda;
  m.meta.seed = cfg.seed;

  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (inf_norm(grad) <= cfg.tolerance) break;

    // Hessian: X~^T diag(curv) X~ + lambda on the weight block.
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < d.n; ++i) {
      const double c = curv[i];
      if (c == 0.0) continue;
      const double* xi = d.row(i);
      for (std::size_t r = 0; r < P; ++r) {
        const double xr = r < d.dim ? xi[r] : 1.0;
        if (xr == 0.0) continue;
        const double cr = c * xr;
        double* hr = hess.data() + r * P;
        for (std::size_t s = 0; s <= r; ++s) hr[s] += cr * (s < d.dim ? xi[s] : 1.0);
      }
    }
    for (std::size_t j = 0; j < d.dim; ++j) hess[j * P + j] += cfg.lambda;

    // Jitter the diagonal when saturation leaves the bias direction flat.
    std::vector<double> factor = hess;
    double jitter = 0.0;
    while (!cholesky(factor, P)) {
      jitter = jitter == 0.0 ? 1e-12 : jitter * 10.0;
      if (jitter > 1e6) throw Error("train: Hessian could not be factorized");
      factor = hess;
      for (std::size_t j = 0; j < P; ++j) factor[j * P + j] += jitter;
    }
    for (std::size_t j = 0; j < P; ++j) step[j] = -grad[j];
    cholesky_solve(factor, P, step);

    double slope = 0.0;
    for (std::size_t j = 0; j < P; ++j) slope += grad[j] * step[j];
    if (!(slope < 0.0)) break;

    // Backtracking (Armijo) line search.
    double t = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t j = 0; j < P; ++j) trial[j] = theta[j] + t * step[j];
      f_new = eval(d, trial, cfg.lambda, nullptr, nullptr);
      if (f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    theta.swap(trial);
    f = eval(d, theta, cfg.lambda, &grad, &curv);
  }

  m.weights.assign(theta.begin(), theta.begin() + static_cast<long>(d.dim));
  m.bias = theta[d.dim];
  m.meta.iterations = it;
  m.meta.gradient_norm = inf_norm(grad);
  m.meta.converged = m.meta.gradient_norm <= cfg.tolerance;
  return m;
}

Prediction predict(const LinearModel& m, const FeatureVector& x) {
  if (!(x.layout == m.layout) || x.values.size() != m.weights.size())
    throw ShapeError("predict: feature layout does not match the model");
  double z = m.bias;
  for (std::size_t j = 0; j < m.weights.size(); ++j) z += m.weights[j] * x.values[j];
  Prediction p;
  p.probability = sigmoid(z);
  p.label = p.probability > 0.5 ? 1 : 0;
  return p;
}

double accuracy(const LinearModel& m, std::span<const FeatureVector> x, std::span<const int> y) {
  if (x.size() != y.size()) throw ShapeError("accuracy: features and labels differ in length");
  if (x.empty()) throw InvalidArgument("accuracy: empty evaluation set");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < x.size(); ++i) hit += predict(m, x[i]).label == y[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(x.size());
}

std::string LinearModel::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json lay;
  lay["layers"] = layout.layers;
  lay["heads_per_layer"] = layout.heads_per_layer;
  lay["combination"] = features::to_string(layout.combination);
  lay["heads"] = nlohmann::ordered_json::array();
  for (const auto& h : layout.heads) lay["heads"].push_back(h.name());
  j["layout"] = lay;
  j["weights"] = weights;
  j["bias"] = bias;
  j["lambda"] = lambda;
  nlohmann::ordered_json meta;
  meta["seed"] = this->meta.seed;
  meta["iterations"] = this->meta.iterations;
  meta["gradient_norm"] = this->meta.gradient_norm;
  meta["converged"] = this->meta.converged;
  j["meta"] = meta;
  return j.dump(2) + "\n";
}

LinearModel LinearModel::from_json(std::string_view text) {
  LinearModel m;
  try {
    auto j = nlohmann::json::parse(text);
    const auto& lay = j.at("layout");
    m.layout.layers = lay.at("layers").get<int>();
    m.layout.heads_per_layer = lay.at("heads_per_layer").get<int>();
    m.layout.combination = features::parse_combination(lay.at("combination").get<std::string>());
    for (const auto& h : lay.at("heads")) m.layout.heads.push_back(parse_head(h.get<std::string>()));
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.lambda = j.at("lambda").get<double>();
    const auto& meta = j.at("meta");
    m.meta.seed = meta.at("seed").get<std::uint64_t>();
    m.meta.iterations = meta.at("iterations").get<int>();
    m.meta.gradient_norm = meta.at("gradient_norm").get<double>();
    m.meta.converged = meta.at("converged").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model json: ") + e.what());
  }
  if (m.weights.size() != m.layout.dim()) throw FormatError("model json: weight count does not match the layout");
  return m;
}

}  // namespace winoattn::reason
