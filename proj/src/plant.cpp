#include "sncert/plant.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "sncert/errors.hpp"
#include "sncert/kernels.hpp"

namespace sncert {

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace

DiscreteLtiPlant::DiscreteLtiPlant(Matrix a, Matrix b, double ts)
    : a_(std::move(a)), b_(std::move(b)), ts_(ts) {
  if (a_.rows() != a_.cols() || a_.rows() == 0) {
    throw ContractViolation("plant: A must be square and non-empty");
  }
  if (b_.rows() != a_.rows()) {
    throw ContractViolation("plant: B must have the same row count as A");
  }
  if (!all_finite(a_) || !all_finite(b_) || !std::isfinite(ts_)) {
    throw ContractViolation("plant: entries must be finite");
  }
}

Vector step(const DiscreteLtiPlant& plant, const Vector& x, const Vector& u) {
  if (x.size() != plant.state_dim() || u.size() != plant.input_dim()) {
    throw ContractViolation("step: dimension mismatch (x " +
                            std::to_string(x.size()) + ", u " +
                            std::to_string(u.size()) + ")");
  }
  return plant.a() * x + plant.b() * u;
}

double spectral_radius(const DiscreteLtiPlant& plant) {
  Eigen::EigenSolver<Matrix> solver(plant.a(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    // Eigen's Hessenberg QR uses at most 40 iterations per eigenvalue.
    throw NumericError("spectral_radius: eigenvalue iteration did not converge",
                       40 * plant.state_dim(), 0.0);
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double frequency_gain(const Matrix& a, const Matrix& b, double omega) {
  using Complex = std::complex<double>;
  const auto n = a.rows();
  Eigen::MatrixXcd resolvent =
      std::polar(1.0, omega) * Eigen::MatrixXcd::Identity(n, n) -
      a.cast<Complex>();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(resolvent);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd g = lu.solve(b.cast<Complex>());
  if (g.cols() == 1) return g.norm();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
  return svd.singularValues()(0);
}

L2GainResult l2_gain(const DiscreteLtiPlant& plant, double tol,
                     int grid_points) {
  if (!(tol > 0.0)) throw ContractViolation("l2_gain: tol must be positive");
  grid_points = std::max(grid_points, 2048);

  L2GainResult result;
  result.spectral_radius = spectral_radius(plant);
  if (result.spectral_radius >= 1.0) return result;

  constexpr double pi = std::numbers::pi;
  std::vector<double> omegas(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    omegas[static_cast<std::size_t>(i)] = pi * i / (grid_points - 1);
  }
  // Lightly damped poles produce narrow peaks; seed the search at their angles.
  Eigen::EigenSolver<Matrix> eig(plant.a(), false);
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
    const double angle = std::abs(std::arg(eig.eigenvalues()(i)));
    omegas.push_back(angle);
  }
  std::sort(omegas.begin(), omegas.end());
  omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());

  const std::vector<double> gains =
      kernels::parallel::frequency_sweep(plant.a(), plant.b(), omegas);

  const auto best = static_cast<std::size_t>(
      std::max_element(gains.begin(), gains.end()) - gains.begin());
  if (!std::isfinite(gains[best])) return result;  // singular resolvent

  double lo = omegas[best == 0 ? 0 : best - 1];
  double hi = omegas[std::min(best + 1, omegas.size() - 1)];
  double best_omega = omegas[best];
  double best_gain = gains[best];

  const auto f = [&](double w) { return frequency_gain(plant.a(), plant.b(), w); };
  constexpr double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  double previous = best_gain;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
    const double candidate = std::max(fc, fd);
    if (candidate > best_gain) {
      best_gain = candidate;
      best_omega = fc > fd ? c : d;
    }
    const bool gain_settled = std::abs(candidate - previous) <= tol * best_gain;
    const bool interval_settled = (hi - lo) <= tol * std::max(best_omega, 1e-3);
    if (gain_settled && interval_settled) break;
    previous = candidate;
  }
  if (!std::isfinite(best_gain)) return result;

  result.finite = true;
  result.gain = best_gain;
  result.peak_frequency = best_omega;
  return result;
}

TrajectoryRecord simulate(const DiscreteLtiPlant& plant,
                          const Controller& controller, const Vector& x0,
                          int horizon, const Termination& termination) {
  if (horizon < 1) throw ContractViolation("simulate: horizon must be >= 1");
  if (x0.size() != plant.state_dim()) {
    throw ContractViolation("simulate: x0 dimension mismatch");
  }
  TrajectoryRecord rec;
  rec.states.reserve(static_cast<std::size_t>(horizon) + 1);
  rec.inputs.reserve(static_cast<std::size_t>(horizon));
  rec.states.push_back(x0);
  Vector x = x0;
  for (int k = 0; k < horizon; ++k) {
    if (termination && termination(x)) {
      rec.terminated = true;
      break;
    }
    Vector u = controller(x);
    Vector next = step(plant, x, u);
    rec.inputs.push_back(std::move(u));
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceBound) {
      rec.diverged = true;
      break;
    }
    rec.states.push_back(next);
    x = std::move(next);
  }
  return rec;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ParseError(std::string(what) + ": expected a non-empty array of rows");
  }
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ParseError(std::string(what) + ": row " + std::to_string(r) +
                       " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) {
        throw ParseError(std::string(what) + ": entry [" + std::to_string(r) +
                         "][" + std::to_string(c) + "] is not a number");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
    }
  }
  return m;
}

nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError(std::string(what) + ": entry " + std::to_string(i) +
                       " is not a number");
    }
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json plant_to_json(const DiscreteLtiPlant& plant) {
  return {{"A", matrix_to_json(plant.a())},
          {"B", matrix_to_json(plant.b())},
          {"ts", plant.ts()}};
}

DiscreteLtiPlant plant_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("B")) {
    throw ParseError("plant: expected object with \"A\" and \"B\"");
  }
  const double ts = j.contains("ts") ? j.at("ts").get<double>() : 1.0;
  try {
    return DiscreteLtiPlant(matrix_from_json(j.at("A"), "plant.A"),
                            matrix_from_json(j.at("B"), "plant.B"), ts);
  } catch (const ContractViolation& e) {
    throw ParseError(e.what());
  }
}

void save_plant(const DiscreteLtiPlant& plant, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path.string() + " for writing");
  out << plant_to_json(plant).dump(2) << "\n";
}

DiscreteLtiPlant load_plant(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open plant file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return plant_from_json(j);
}

}  // namespace sncert
