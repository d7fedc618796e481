#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "sncert/plant.hpp"
#include "sncert/policy.hpp"

namespace testutil {

using sncert::Matrix;
using sncert::Vector;

inline Matrix gaussian(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  Matrix m(rows, cols);
  for (auto& v : m.reshaped()) v = scale * n01(rng);
  return m;
}

inline Matrix uniform_box(int rows, int cols, double half_width, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Matrix m(rows, cols);
  for (auto& v : m.reshaped()) v = u(rng);
  return m;
}

// Random layer widths nx -> hidden... -> nu, scaled like a fresh init.
inline std::vector<Matrix> random_layers(int nx, const std::vector<int>& hidden, int nu,
                                         std::mt19937_64& rng) {
  std::vector<Matrix> ws;
  int in = nx;
  for (int h : hidden) {
    ws.push_back(gaussian(h, in, rng, 1.0 / std::sqrt(in)));
    in = h;
  }
  ws.push_back(gaussian(nu, in, rng, 1.0 / std::sqrt(in)));
  return ws;
}

inline sncert::MlpPolicy random_post_policy(int nx, const std::vector<int>& hidden, int nu,
                                            double delta, std::uint64_t seed,
                                            double out_scale = 1.0) {
  std::mt19937_64 rng(seed);
  auto ws = random_layers(nx, hidden, nu, rng);
  ws.back() *= out_scale;
  return sncert::normalize(sncert::MlpPolicy(ws, std::vector<double>(hidden.size(), delta),
                                             sncert::NormalizationMode::Post));
}

inline sncert::MlpPolicy random_pre_policy(int nx, const std::vector<int>& hidden, int nu,
                                           double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto ws = random_layers(nx, hidden, nu, rng);
  return sncert::normalize(sncert::MlpPolicy(ws, std::vector<double>(hidden.size() + 1, delta),
                                             sncert::NormalizationMode::Pre));
}

// Random n x n matrix rescaled to the given spectral radius.
inline Matrix with_spectral_radius(int n, double rho, std::mt19937_64& rng) {
  Matrix a = gaussian(n, n, rng);
  const double r = a.eigenvalues().cwiseAbs().maxCoeff();
  return a * (rho / r);
}

inline sncert::MlpPolicy zero_policy(int nx, const std::vector<int>& hidden, int nu) {
  std::vector<Matrix> ws;
  int in = nx;
  for (int h : hidden) {
    ws.push_back(Matrix::Zero(h, in));
    in = h;
  }
  ws.push_back(Matrix::Zero(nu, in));
  return sncert::MlpPolicy(ws, {}, sncert::NormalizationMode::None);
}

// Discrete LQR gain by Riccati iteration, u = -K x.
inline Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  Matrix p = q;
  Matrix k;
  for (int it = 0; it < 10000; ++it) {
    k = (r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
    const Matrix next = q + a.transpose() * p * (a - b * k);
    const double change = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (change <= 1e-12 * p.norm()) break;
  }
  return k;
}

// u = -K x realized as W2 tanh(W1 x) with W1 = c I, which is close to linear
// for small c. Post mode with delta = c.
inline sncert::MlpPolicy lqr_tanh_policy(const sncert::DiscreteLtiPlant& plant, double c) {
  const int n = plant.state_dim();
  const Matrix k = lqr_gain(plant.a(), plant.b(), Matrix::Identity(n, n),
                            Matrix::Identity(plant.input_dim(), plant.input_dim()));
  return sncert::MlpPolicy({c * Matrix::Identity(n, n), -k / c}, {c},
                           sncert::NormalizationMode::Post);
}

}  // namespace testutil
