#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "sncert/certify_post.hpp"
#include "sncert/plant.hpp"
#include "sncert/policy.hpp"

namespace sncert {

struct GridAxis {
  int state_index = 0;
  double lo = 0.0;
  double hi = 0.0;
  int count = 2;
};

// Axis-aligned grid on a slice through the origin: states not listed stay 0.
struct GridSpec {
  int state_dim = 0;
  std::vector<GridAxis> axes;

  std::size_t point_count() const;
  // Points in row-major order (last axis fastest), one per column.
  Matrix points() const;
};

// "theta:-3:3:61,omega:-3:3:61". Axes are named by state name, by "x<i>", or
// by a bare index.
GridSpec parse_grid_spec(const std::string& text, const std::vector<std::string>& state_names);

inline constexpr int kRoaHorizon = 400;
inline constexpr double kRoaTolerance = 1e-3;

struct RoaGridReport {
  Matrix points;  // state_dim x N
  std::vector<bool> converged;
  int horizon = kRoaHorizon;
  double tol = kRoaTolerance;

  std::size_t size() const { return converged.size(); }
  std::size_t converged_count() const;
};

RoaGridReport empirical_roa(const DiscreteLtiPlant& plant, const MlpPolicy& policy,
                            const GridSpec& grid, int horizon = kRoaHorizon,
                            double tol = kRoaTolerance);

// Indices of grid points inside the ellipsoid that did not converge.
std::vector<std::size_t> soundness_audit(const Ellipsoid& e, const RoaGridReport& report);
std::vector<std::size_t> soundness_audit(const StabilityCertificate& cert,
                                         const RoaGridReport& report);

// det(P)^(-1/2). Throws ContractViolation unless P is symmetric positive definite.
double volume_proxy(const Ellipsoid& e);

// Boundary of the ellipsoid's slice in the (i, j) coordinate plane through the
// center, one point per column.
Matrix ellipse_boundary(const Ellipsoid& e, int i, int j, int angles = 256);

void write_roa_csv(std::ostream& os, const RoaGridReport& report,
                   const std::vector<std::string>& state_names);
void write_boundary_csv(std::ostream& os, const Matrix& boundary,
                        const std::vector<std::string>& axis_names);
void write_frontier_csv(std::ostream& os, const std::vector<FrontierPoint>& frontier);

}  // namespace sncert
