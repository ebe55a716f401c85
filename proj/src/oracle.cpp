#include "beamopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "beamopt/error.hpp"
#include "beamopt/parallel.hpp"

namespace beamopt {

double FdGrid::stability_number(double diffusivity) const {
  return diffusivity * dt * (1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz));
}

double FdGrid::stable_step(double diffusivity) const {
  return 0.5 / (diffusivity * (1.0 / (dx * dx) + 1.0 / (dy * dy) + 1.0 / (dz * dz)));
}

void FdGrid::validate(double diffusivity) const {
  if (!(x_max > x_min && y_max > y_min && depth > 0.0)) throw ConfigError("finite-difference box is empty");
  if (!(dx > 0.0 && dy > 0.0 && dz > 0.0)) throw ConfigError("grid spacings must be > 0");
  if (!(dt >= 0.0)) throw ConfigError("time step must be >= 0");
  if (dt > 0.0 && stability_number(diffusivity) > 0.5) {
    throw ConfigError("explicit step unstable: kappa dt sum(1/h^2) = " + std::to_string(stability_number(diffusivity)) +
                      " > 1/2");
  }
}

namespace {

std::size_t cells(double extent, double h) {
  const double n = std::round(extent / h);
  if (std::abs(n * h - extent) > 1e-9 * extent) throw ConfigError("box extent is not a multiple of the spacing");
  return static_cast<std::size_t>(n);
}

// Trapezoid weight of a node in a direction with nodes 0..n.
double edge_weight(std::size_t i, std::size_t n) { return (i == 0 || i == n) ? 0.5 : 1.0; }

}  // namespace

FdResult fd_solve(const FdGrid& grid_in, const MaterialParams& material, const ScanPath& path,
                  const BeamParameters& beam, double jump_dwell, std::span<const Point3> probes, double t_final,
                  const FdOptions& options) {
  material.validate();
  beam.validate(path.num_segments());
  FdGrid grid = grid_in;
  const double kappa = material.diffusivity;
  grid.validate(kappa);
  if (grid.dt == 0.0) grid.dt = 0.9 * grid.stable_step(kappa);
  if (!(t_final > 0.0)) throw ConfigError("final time must be > 0");
  if (options.record_every == 0) throw ConfigError("record interval must be >= 1");

  const std::size_t nx = cells(grid.x_max - grid.x_min, grid.dx);
  const std::size_t ny = cells(grid.y_max - grid.y_min, grid.dy);
  const std::size_t nz = cells(grid.depth, grid.dz);
  const std::size_t sx = 1;
  const std::size_t sy = nx + 1;
  const std::size_t sz = (nx + 1) * (ny + 1);
  const std::size_t total = sz * (nz + 1);
  auto index = [&](std::size_t i, std::size_t j, std::size_t k) { return i * sx + j * sy + k * sz; };

  for (const auto& p : probes) {
    if (p.x < grid.x_min || p.x > grid.x_max || p.y < grid.y_min || p.y > grid.y_max || p.z > 0.0 ||
        p.z < -grid.depth) {
      throw ConfigError("probe outside the finite-difference box");
    }
  }

  const double u0 = material.initial_temperature;
  const double lambda = material.conductivity;
  const double rho_c = material.volumetric_heat_capacity();
  const ScanTiming timing(path, beam.speed, jump_dwell);
  const double scan_end = timing.total_time();

  // Temperature rise, k = 0 is the surface layer z = 0, k grows downward.
  std::vector<double> u(total, 0.0);
  std::vector<double> next(total, 0.0);
  std::vector<double> flux((nx + 1) * (ny + 1), 0.0);

  auto sample = [&](const Point3& p) {
    const double fx = std::clamp((p.x - grid.x_min) / grid.dx, 0.0, static_cast<double>(nx));
    const double fy = std::clamp((p.y - grid.y_min) / grid.dy, 0.0, static_cast<double>(ny));
    const double fz = std::clamp(-p.z / grid.dz, 0.0, static_cast<double>(nz));
    const auto i = std::min(static_cast<std::size_t>(fx), nx - 1);
    const auto j = std::min(static_cast<std::size_t>(fy), ny - 1);
    const auto k = std::min(static_cast<std::size_t>(fz), nz - 1);
    const double ax = fx - static_cast<double>(i);
    const double ay = fy - static_cast<double>(j);
    const double az = fz - static_cast<double>(k);
    double value = 0.0;
    for (int c = 0; c < 8; ++c) {
      const std::size_t di = c & 1;
      const std::size_t dj = (c >> 1) & 1;
      const std::size_t dk = (c >> 2) & 1;
      const double w = (di ? ax : 1.0 - ax) * (dj ? ay : 1.0 - ay) * (dk ? az : 1.0 - az);
      value += w * u[index(i + di, j + dj, k + dk)];
    }
    return u0 + value;
  };

  FdResult result;
  result.history.assign(probes.size(), {});
  auto record = [&](double t) {
    result.times.push_back(t);
    for (std::size_t p = 0; p < probes.size(); ++p) result.history[p].push_back(sample(probes[p]));
  };
  record(0.0);

  const double cx = kappa / (grid.dx * grid.dx);
  const double cy = kappa / (grid.dy * grid.dy);
  const double cz = kappa / (grid.dz * grid.dz);
  const double surface_gain = 2.0 * kappa / (lambda * grid.dz);
  const double cell_area = grid.dx * grid.dy;

  double t = 0.0;
  while (t < t_final * (1.0 - 1e-12)) {
    const double dt = std::min(grid.dt, t_final - t);
    const double mid = t + 0.5 * dt;

    // Surface flux at the mid-step beam position.
    double injected_rate = 0.0;
    if (mid < scan_end) {
      const std::size_t k = timing.active_segment(mid);
      const Point3 centre = beam_position(path, timing, mid);
      const double s2 = beam.spot_size[k] * beam.spot_size[k];
      const double amplitude = material.power / (2.0 * std::numbers::pi * s2);
      for (std::size_t j = 0; j <= ny; ++j) {
        const double y = grid.y_min + static_cast<double>(j) * grid.dy - centre.y;
        for (std::size_t i = 0; i <= nx; ++i) {
          const double x = grid.x_min + static_cast<double>(i) * grid.dx - centre.x;
          const double phi = amplitude * std::exp(-(x * x + y * y) / (2.0 * s2));
          flux[i + j * sy] = phi;
          injected_rate += edge_weight(i, nx) * edge_weight(j, ny) * cell_area * phi;
        }
      }
    } else {
      std::fill(flux.begin(), flux.end(), 0.0);
    }
    result.energy_injected += injected_rate * dt;

    // Mirror ghosts give zero flux; the surface ghost carries the flux.
    parallel_for(nz + 1, options.threads, [&](std::size_t k) {
      const std::size_t kd = k == nz ? nz - 1 : k + 1;
      const std::size_t ku = k == 0 ? 1 : k - 1;
      for (std::size_t j = 0; j <= ny; ++j) {
        const std::size_t jn = j == ny ? ny - 1 : j + 1;
        const std::size_t js = j == 0 ? 1 : j - 1;
        for (std::size_t i = 0; i <= nx; ++i) {
          const std::size_t ie = i == nx ? nx - 1 : i + 1;
          const std::size_t iw = i == 0 ? 1 : i - 1;
          const double c = u[index(i, j, k)];
          double lap = cx * (u[index(ie, j, k)] + u[index(iw, j, k)] - 2.0 * c) +
                       cy * (u[index(i, jn, k)] + u[index(i, js, k)] - 2.0 * c) +
                       cz * (u[index(i, j, kd)] + u[index(i, j, ku)] - 2.0 * c);
          if (k == 0) lap += surface_gain * flux[i + j * sy];
          next[index(i, j, k)] = c + dt * lap;
        }
      }
    });
    u.swap(next);
    t += dt;
    ++result.steps;
    if (result.steps % options.record_every == 0 || t >= t_final * (1.0 - 1e-12)) record(t);
  }

  for (const auto& p : probes) result.final_values.push_back(sample(p));

  double stored = 0.0;
  double boundary = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  const double volume = grid.dx * grid.dy * grid.dz;
  for (std::size_t k = 0; k <= nz; ++k) {
    for (std::size_t j = 0; j <= ny; ++j) {
      for (std::size_t i = 0; i <= nx; ++i) {
        const double value = u[index(i, j, k)];
        stored += edge_weight(i, nx) * edge_weight(j, ny) * edge_weight(k, nz) * volume * value;
        lowest = std::min(lowest, value);
        if (i == 0 || i == nx || j == 0 || j == ny || k == nz) boundary = std::max(boundary, value);
      }
    }
  }
  result.energy_stored = rho_c * stored;
  result.boundary_rise = boundary;
  result.min_temperature = u0 + lowest;
  result.boundary_contaminated = boundary > options.boundary_tolerance;
  return result;
}

}  // namespace beamopt
