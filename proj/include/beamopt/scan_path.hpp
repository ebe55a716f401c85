#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "beamopt/geometry.hpp"

namespace beamopt {

// All indices in the C++ API are 0-based. Files and reports use 1-based
// segment/line numbers.

struct Segment {
  std::size_t index = 0;
  Point3 start;
  Point3 end;
  double length = 0.0;  // m
  double angle = 0.0;   // rad, atan2(dy, dx)

  // Unit direction (cos angle, sin angle, 0).
  Point3 direction() const;
};

struct HatchLine {
  std::size_t index = 0;
  std::size_t first_segment = 0;
  std::size_t last_segment = 0;  // inclusive
  double angle = 0.0;

  std::size_t num_segments() const { return last_segment - first_segment + 1; }
};

using SegmentEndpoints = std::pair<Point3, Point3>;

// Immutable piecewise-linear beam path. Holds the cumulative scanning
// distance table and the hatch-line partition.
class ScanPath {
 public:
  static constexpr double kAngleTolerance = 1e-9;        // rad
  static constexpr double kConnectionTolerance = 1e-12;  // m

  // Throws ConfigError on zero-length segments or nonzero z.
  explicit ScanPath(std::span<const SegmentEndpoints> endpoints);

  std::size_t num_segments() const { return segments_.size(); }
  std::size_t num_lines() const { return lines_.size(); }

  const Segment& segment(std::size_t k) const { return segments_.at(k); }
  const std::vector<Segment>& segments() const { return segments_; }
  const HatchLine& line(std::size_t l) const { return lines_.at(l); }
  const std::vector<HatchLine>& hatch_lines() const { return lines_; }

  // Scanning distance at the start / end of segment k.
  double start_distance(std::size_t k) const { return cumulative_.at(k); }
  double end_distance(std::size_t k) const { return cumulative_.at(k + 1); }
  double total_length() const { return cumulative_.back(); }

  // Scanning distance of the point at arclength fraction s in [0, 1] on
  // segment k. Throws ConfigError for s outside [0, 1].
  double scan_distance(std::size_t k, double fraction) const;

  Point3 point_at(std::size_t k, double fraction) const;

  // True when x_k^f coincides with x_{k+1}^i.
  bool connected_to_next(std::size_t k) const;

  // First segment of line l and line containing segment k.
  std::size_t first_segment_of_line(std::size_t l) const { return lines_.at(l).first_segment; }
  std::size_t line_of_segment(std::size_t k) const { return line_of_segment_.at(k); }

  std::vector<SegmentEndpoints> endpoints() const;

 private:
  std::vector<Segment> segments_;
  std::vector<HatchLine> lines_;
  std::vector<double> cumulative_;  // size N + 1
  std::vector<std::size_t> line_of_segment_;
};

// Segment start/end times induced by per-segment speeds. Jumps between
// disconnected segments take `jump_dwell` seconds (default instantaneous).
class ScanTiming {
 public:
  ScanTiming(const ScanPath& path, std::span<const double> speeds, double jump_dwell = 0.0);

  std::size_t size() const { return start_.size(); }
  double start(std::size_t k) const { return start_[k]; }
  double end(std::size_t k) const { return end_[k]; }
  double duration(std::size_t k) const { return end_[k] - start_[k]; }
  double total_time() const { return end_.back(); }

  // Segment active at time t, i.e. the k with t in (t_k^i, t_k^f]; t = 0
  // maps to segment 0. During a dwell the preceding segment is returned.
  std::size_t active_segment(double t) const;

 private:
  std::vector<double> start_;
  std::vector<double> end_;
};

// Beam centre at time t in [0, T]. Throws ConfigError outside that range.
Point3 beam_position(const ScanPath& path, const ScanTiming& timing, double t);

enum class OffsetMode { global_offset, normal_offset };

struct SecondaryPathSpec {
  double width = 0.0;  // m
  double depth = 0.0;  // m, >= 0
  OffsetMode mode = OffsetMode::global_offset;
};

// Image of the beam path under the offset map: global_offset gives
// (x, y + w, -d), normal_offset gives (x + w sin th, y - w cos th, -d).
class SecondaryPath {
 public:
  SecondaryPath(const ScanPath& path, SecondaryPathSpec spec);

  const SecondaryPathSpec& spec() const { return spec_; }
  std::size_t num_segments() const { return start_.size(); }
  const Point3& start(std::size_t k) const { return start_.at(k); }
  const Point3& end(std::size_t k) const { return end_.at(k); }
  Point3 point_at(std::size_t k, double fraction) const { return lerp(start_.at(k), end_.at(k), fraction); }

 private:
  SecondaryPathSpec spec_;
  std::vector<Point3> start_;
  std::vector<Point3> end_;
};

namespace generators {

// Snake hatching in +y: line l sits at y = l * offset and alternates +x / -x.
std::vector<SegmentEndpoints> snake(std::size_t lines, double line_length, double line_offset,
                                    std::size_t segments_per_line);

// Radial lines of a first-quadrant annulus at angles l * delta. Lines run
// from r_outer to r_inner when `inward` is set.
std::vector<SegmentEndpoints> annulus_quadrant(double r_inner, double r_outer, std::size_t n_lines,
                                               double delta_angle_rad, std::size_t segments_per_line,
                                               bool inward = true);

}  // namespace generators

}  // namespace beamopt
