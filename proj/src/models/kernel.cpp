#include <cmath>
#include <numeric>
#include <optional>

#include "learners.hpp"
#include "qiraa/util.hpp"

namespace qiraa::detail {

namespace {

// Kernels with the constant +1 term standing in for an unregularized bias.
double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    d2 += t * t;
  }
  return std::exp(-gamma * d2) + 1.0;
}

constexpr std::size_t kMaxCachedGram = 3000;

class Gram {
 public:
  Gram(const Matrix& X, double gamma) : X_(X), gamma_(gamma) {
    const std::size_t n = X.rows();
    if (n <= kMaxCachedGram) {
      cache_.emplace(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
          const double v = rbf(X.row(i), X.row(j), gamma);
          (*cache_)(i, j) = v;
          (*cache_)(j, i) = v;
        }
      }
    }
  }

  // g += a * K(i, :)
  void add_row(std::size_t i, double a, std::vector<double>& g) const {
    if (cache_) {
      const auto row = cache_->row(i);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += a * row[j];
    } else {
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += a * rbf(X_.row(i), X_.row(j), gamma_);
    }
  }

 private:
  const Matrix& X_;
  double gamma_;
  std::optional<Matrix> cache_;
};

KernelState pack(const Matrix& X, const std::vector<std::vector<double>>& coef, double gamma) {
  const std::size_t n = X.rows();
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < n; ++j) {
    for (const auto& c : coef) {
      if (c[j] != 0.0) {
        support.push_back(j);
        break;
      }
    }
  }
  KernelState s;
  s.gamma = gamma;
  s.support = X.select_rows(support);
  s.coef = Matrix(coef.size(), support.size());
  for (std::size_t c = 0; c < coef.size(); ++c) {
    for (std::size_t j = 0; j < support.size(); ++j) s.coef(c, j) = coef[c][support[j]];
  }
  return s;
}

}  // namespace

// Kernelized Pegasos, one-vs-rest. g[i] tracks sum_j alpha_j y_j K(j, i) so a
// margin check is O(1) and an update O(n).
KernelState fit_kernel_svm(const Matrix& X, std::span<const int> y, int n_classes, double gamma,
                           const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const Gram gram(X, gamma);
  std::vector<std::vector<double>> coef;
  const double T = static_cast<double>(hp.epochs) * static_cast<double>(n);
  for (int c = 0; c < n_classes; ++c) {
    std::mt19937_64 rng(util::derive_seed(hp.seed, static_cast<std::uint64_t>(c)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> alpha(n, 0.0), g(n, 0.0);
    std::size_t t = 0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        ++t;
        const double yi = y[i] == c ? 1.0 : -1.0;
        const double f = g[i] / (hp.lambda * static_cast<double>(t));
        if (yi * f < 1.0) {
          alpha[i] += 1.0;
          gram.add_row(i, yi, g);
        }
      }
    }
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = alpha[j] * (y[j] == c ? 1.0 : -1.0) / (hp.lambda * T);
    coef.push_back(std::move(w));
  }
  return pack(X, coef, gamma);
}

KernelState fit_kernel_svr(const Matrix& X, std::span<const double> y, double epsilon, double gamma,
                           const Hyperparams& hp) {
  const std::size_t n = X.rows();
  const Gram gram(X, gamma);
  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> beta(n, 0.0), g(n, 0.0);
  std::size_t t = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      ++t;
      const double r = g[i] / (hp.lambda * static_cast<double>(t)) - y[i];
      if (r > epsilon) {
        beta[i] -= 1.0;
        gram.add_row(i, -1.0, g);
      } else if (r < -epsilon) {
        beta[i] += 1.0;
        gram.add_row(i, 1.0, g);
      }
    }
  }
  const double T = static_cast<double>(t);
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = beta[j] / (hp.lambda * T);
  return pack(X, {w}, gamma);
}

Matrix kernel_raw(const KernelState& s, const Matrix& X) {
  const std::size_t K = s.coef.rows();
  Matrix out(X.rows(), K);
  std::vector<double> k(s.support.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < s.support.rows(); ++j) k[j] = rbf(s.support.row(j), X.row(i), s.gamma);
    for (std::size_t c = 0; c < K; ++c) {
      double f = 0.0;
      for (std::size_t j = 0; j < k.size(); ++j) f += s.coef(c, j) * k[j];
      out(i, c) = f;
    }
  }
  return out;
}

}  // namespace qiraa::detail
