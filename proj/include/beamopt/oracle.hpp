#pragma once

// Explicit finite-difference solver for the heat equation on a truncated
// box below the surface, used only to validate the analytic model.

#include <cstddef>
#include <span>
#include <vector>

#include "beamopt/geometry.hpp"
#include "beamopt/scan_path.hpp"
#include "beamopt/thermal.hpp"

namespace beamopt {

struct FdGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double depth = 0.0;  // box spans z in [-depth, 0]
  double dx = 2e-5;
  double dy = 2e-5;
  double dz = 2e-5;
  double dt = 0.0;  // 0 picks 0.9 of the stability limit

  // kappa dt (1/dx^2 + 1/dy^2 + 1/dz^2); must be <= 1/2.
  double stability_number(double diffusivity) const;
  double stable_step(double diffusivity) const;
  void validate(double diffusivity) const;
};

struct FdOptions {
  std::size_t record_every = 1;    // steps between recorded probe samples
  double boundary_tolerance = 1e-3;  // K
  unsigned threads = 1;
};

struct FdResult {
  std::vector<double> times;                 // recorded times (s)
  std::vector<std::vector<double>> history;  // history[probe][sample] (K)
  std::vector<double> final_values;          // probe temperatures at t_final (K)
  double energy_injected = 0.0;              // time-integrated surface flux over the grid (J)
  double energy_stored = 0.0;                // \int rho c_p (u - u_init) dV at t_final (J)
  double boundary_rise = 0.0;                // max (u - u_init) on lateral/bottom faces (K)
  double min_temperature = 0.0;              // min u over the grid at t_final (K)
  bool boundary_contaminated = false;        // boundary_rise exceeded the tolerance
  std::size_t steps = 0;
};

// Node-centred grid, insulated lateral and bottom faces, Gaussian flux
// (power P, spread sigma_k) on z = 0 evaluated at the mid-step beam
// position, zero flux after the scan ends. Probes are interpolated
// trilinearly.
//
// Throws ConfigError for an unstable step, a probe outside the box or a
// non-positive final time.
FdResult fd_solve(const FdGrid& grid, const MaterialParams& material, const ScanPath& path, const BeamParameters& beam,
                  double jump_dwell, std::span<const Point3> probes, double t_final, const FdOptions& options = {});

}  // namespace beamopt
