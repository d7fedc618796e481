#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <functional>
#include <vector>

#include <json.hpp>

namespace sncert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// x(k+1) = A x(k) + B u(k), full-state output.
class DiscreteLtiPlant {
 public:
  DiscreteLtiPlant(Matrix a, Matrix b, double ts);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  double ts() const { return ts_; }
  int state_dim() const { return static_cast<int>(a_.rows()); }
  int input_dim() const { return static_cast<int>(b_.cols()); }

 private:
  Matrix a_;
  Matrix b_;
  double ts_;
};

struct L2GainResult {
  bool finite = false;
  double gain = 0.0;            // valid when finite
  double peak_frequency = 0.0;  // rad/sample, valid when finite
  double spectral_radius = 0.0;
};

struct TrajectoryRecord {
  std::vector<Vector> states;  // x(0) .. x(K)
  std::vector<Vector> inputs;  // u(0) .. u(K-1)
  std::vector<double> rewards; // filled by the env layer, empty otherwise
  bool terminated = false;
  bool diverged = false;

  int steps() const { return static_cast<int>(inputs.size()); }
};

using Controller = std::function<Vector(const Vector&)>;
using Termination = std::function<bool(const Vector&)>;

Vector step(const DiscreteLtiPlant& plant, const Vector& x, const Vector& u);

double spectral_radius(const DiscreteLtiPlant& plant);

// Largest singular value of (e^{jw} I - A)^{-1} B for a single frequency.
double frequency_gain(const Matrix& a, const Matrix& b, double omega);

// H-infinity norm with C = I, D = 0: dense grid over [0, pi] (plus pole
// angles), then golden-section refinement around the best grid point.
L2GainResult l2_gain(const DiscreteLtiPlant& plant, double tol = 1e-4,
                     int grid_points = 4096);

// States whose magnitude exceeds this are treated as divergent.
inline constexpr double kDivergenceBound = 1e9;

// Iterates u(k) = controller(x(k)), x(k+1) = step(x(k), u(k)). Stops before
// acting when termination(x(k)) fires; truncates on non-finite or divergent
// states.
TrajectoryRecord simulate(const DiscreteLtiPlant& plant,
                          const Controller& controller, const Vector& x0,
                          int horizon, const Termination& termination = {});

nlohmann::json plant_to_json(const DiscreteLtiPlant& plant);
DiscreteLtiPlant plant_from_json(const nlohmann::json& j);
void save_plant(const DiscreteLtiPlant& plant, const std::filesystem::path& path);
DiscreteLtiPlant load_plant(const std::filesystem::path& path);

// Row-major nested arrays <-> Eigen.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const char* what);
nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j, const char* what);

}  // namespace sncert
