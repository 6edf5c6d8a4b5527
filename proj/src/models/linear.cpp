#include <algorithm>
#include <cmath>
#include <numeric>

#include "learners.hpp"
#include "qiraa/errors.hpp"
#include "qiraa/util.hpp"

namespace qiraa::detail {

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void softmax_inplace(std::span<double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

namespace {

double dot_aug(std::span<const double> w, std::span<const double> x) {
  double s = w[x.size()];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[j] * x[j];
  return s;
}

void axpy_aug(double a, std::span<const double> x, std::span<double> w) {
  for (std::size_t j = 0; j < x.size(); ++j) w[j] += a * x[j];
  w[x.size()] += a;
}

double objective_on(const Matrix& W, const Matrix& X, std::span<const std::size_t> rows, std::span<const int> y,
                    double lambda, Matrix* grad) {
  const std::size_t K = W.rows();
  const std::size_t d = X.cols();
  if (grad) *grad = Matrix(K, d + 1);
  std::vector<double> p(K);
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(rows.size());
  for (auto i : rows) {
    const auto x = X.row(i);
    for (std::size_t k = 0; k < K; ++k) p[k] = dot_aug(W.row(k), x);
    const double mx = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double v : p) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    loss -= (p[y[i]] - log_z) * inv_n;
    if (grad) {
      for (std::size_t k = 0; k < K; ++k) {
        const double g = (std::exp(p[k] - log_z) - (static_cast<int>(k) == y[i] ? 1.0 : 0.0)) * inv_n;
        axpy_aug(g, x, grad->row(k));
      }
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      loss += 0.5 * lambda * W(k, j) * W(k, j);
      if (grad) (*grad)(k, j) += lambda * W(k, j);
    }
  }
  return loss;
}

}  // namespace

double softmax_objective(const Matrix& W, const Matrix& X, std::span<const int> y, double lambda, Matrix* grad) {
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return objective_on(W, X, rows, y, lambda, grad);
}

LinearState fit_softmax(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp,
                        TrainingDiagnostics& diag) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  Matrix W(static_cast<std::size_t>(n_classes), d + 1);
  Matrix grad;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(hp.seed);
  const std::size_t batch = hp.batch_size <= 0 ? n : static_cast<std::size_t>(hp.batch_size);
  diag.loss_history.clear();
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      objective_on(W, X, std::span<const std::size_t>(order).subspan(start, end - start), y, hp.lambda, &grad);
      for (std::size_t k = 0; k < W.data().size(); ++k) W.data()[k] -= hp.learning_rate * grad.data()[k];
    }
    diag.loss_history.push_back(softmax_objective(W, X, y, hp.lambda, nullptr));
  }
  return {std::move(W)};
}

// Pegasos: step 1/(lambda t), projection onto the 1/sqrt(lambda) ball, and
// iterate averaging over the second half of training.
LinearState fit_linear_svm(const Matrix& X, std::span<const int> y, int n_classes, const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  const auto K = static_cast<std::size_t>(n_classes);
  Matrix W(K, d + 1);
  const double radius = 1.0 / std::sqrt(hp.lambda);
  for (std::size_t c = 0; c < K; ++c) {
    std::mt19937_64 rng(util::derive_seed(hp.seed, c));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0);
    std::size_t averaged = 0;
    std::size_t t = 0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (hp.lambda * static_cast<double>(t));
        const double yi = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
        const double margin = yi * dot_aug(w, X.row(i));
        const double shrink = 1.0 - eta * hp.lambda;
        for (auto& v : w) v *= shrink;
        if (margin < 1.0) axpy_aug(eta * yi, X.row(i), w);
        double norm = 0.0;
        for (double v : w) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > radius) {
          for (auto& v : w) v *= radius / norm;
        }
        if (epoch >= hp.epochs / 2) {
          for (std::size_t j = 0; j <= d; ++j) avg[j] += w[j];
          ++averaged;
        }
      }
    }
    for (std::size_t j = 0; j <= d; ++j) W(c, j) = avg[j] / static_cast<double>(averaged);
  }
  return {std::move(W)};
}

LinearState fit_ridge(const Matrix& X, std::span<const double> y, const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  // Normal equations (X'X + lambda I) w = X'y; X is centred so no intercept
  // term is needed beyond the target mean kept by the caller.
  std::vector<double> A(d * d, 0.0), b(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = X.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      b[a] += x[a] * y[i];
      for (std::size_t c = 0; c <= a; ++c) A[a * d + c] += x[a] * x[c];
    }
  }
  for (std::size_t a = 0; a < d; ++a) A[a * d + a] += hp.lambda;
  // Cholesky, lower triangle in place.
  for (std::size_t j = 0; j < d; ++j) {
    double s = A[j * d + j];
    for (std::size_t k = 0; k < j; ++k) s -= A[j * d + k] * A[j * d + k];
    if (s <= 1e-12) throw DegenerateData("ridge system is singular; increase lambda");
    A[j * d + j] = std::sqrt(s);
    for (std::size_t i = j + 1; i < d; ++i) {
      double t = A[i * d + j];
      for (std::size_t k = 0; k < j; ++k) t -= A[i * d + k] * A[j * d + k];
      A[i * d + j] = t / A[j * d + j];
    }
  }
  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    double t = b[i];
    for (std::size_t k = 0; k < i; ++k) t -= A[i * d + k] * z[k];
    z[i] = t / A[i * d + i];
  }
  Matrix W(1, d + 1);
  for (std::size_t ii = d; ii-- > 0;) {
    double t = z[ii];
    for (std::size_t k = ii + 1; k < d; ++k) t -= A[k * d + ii] * W(0, k);
    W(0, ii) = t / A[ii * d + ii];
  }
  return {std::move(W)};
}

LinearState fit_linear_svr(const Matrix& X, std::span<const double> y, double epsilon, const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  std::vector<double> w(d + 1, 0.0), avg(d + 1, 0.0);
  std::size_t averaged = 0;
  std::size_t t = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(hp.seed);
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (hp.lambda * static_cast<double>(t));
      const double r = dot_aug(w, X.row(i)) - y[i];
      const double shrink = 1.0 - eta * hp.lambda;
      for (auto& v : w) v *= shrink;
      if (r > epsilon) axpy_aug(-eta, X.row(i), w);
      if (r < -epsilon) axpy_aug(eta, X.row(i), w);
      if (epoch >= hp.epochs / 2) {
        for (std::size_t j = 0; j <= d; ++j) avg[j] += w[j];
        ++averaged;
      }
    }
  }
  Matrix W(1, d + 1);
  for (std::size_t j = 0; j <= d; ++j) W(0, j) = avg[j] / static_cast<double>(averaged);
  return {std::move(W)};
}

Matrix linear_raw(const LinearState& s, const Matrix& X) {
  const std::size_t K = s.weights.rows();
  Matrix out(X.rows(), K);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t k = 0; k < K; ++k) out(i, k) = dot_aug(s.weights.row(k), X.row(i));
  }
  return out;
}

}  // namespace qiraa::detail
