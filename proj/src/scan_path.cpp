#include "beamopt/scan_path.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "beamopt/error.hpp"

namespace beamopt {

namespace {

double angle_difference(double a, double b) {
  double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::abs(d);
}

}  // namespace

Point3 Segment::direction() const { return {std::cos(angle), std::sin(angle), 0.0}; }

ScanPath::ScanPath(std::span<const SegmentEndpoints> endpoints) {
  if (endpoints.empty()) throw ConfigError("scan path needs at least one segment");
  segments_.reserve(endpoints.size());
  cumulative_.reserve(endpoints.size() + 1);
  cumulative_.push_back(0.0);
  for (std::size_t k = 0; k < endpoints.size(); ++k) {
    const auto& [a, b] = endpoints[k];
    if (a.z != 0.0 || b.z != 0.0) {
      throw ConfigError("segment " + std::to_string(k + 1) + " has nonzero z");
    }
    Segment s;
    s.index = k;
    s.start = a;
    s.end = b;
    s.length = distance(a, b);
    if (!(s.length > 0.0)) throw ConfigError("segment " + std::to_string(k + 1) + " has zero length");
    s.angle = std::atan2(b.y - a.y, b.x - a.x);
    segments_.push_back(s);
    cumulative_.push_back(cumulative_.back() + s.length);
  }

  // A new hatch line starts where the path breaks or turns. Out-of-range
  // neighbours at the path ends count as different.
  line_of_segment_.resize(segments_.size());
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const bool starts_line = k == 0 || !connected_to_next(k - 1) ||
                             angle_difference(segments_[k].angle, segments_[k - 1].angle) > kAngleTolerance;
    if (starts_line) {
      HatchLine line;
      line.index = lines_.size();
      line.first_segment = k;
      line.angle = segments_[k].angle;
      lines_.push_back(line);
    }
    lines_.back().last_segment = k;
    line_of_segment_[k] = lines_.back().index;
  }
}

double ScanPath::scan_distance(std::size_t k, double fraction) const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw ConfigError("arclength fraction " + std::to_string(fraction) + " outside [0, 1]");
  }
  return cumulative_.at(k) + fraction * segments_.at(k).length;
}

Point3 ScanPath::point_at(std::size_t k, double fraction) const {
  const auto& s = segments_.at(k);
  return lerp(s.start, s.end, fraction);
}

bool ScanPath::connected_to_next(std::size_t k) const {
  if (k + 1 >= segments_.size()) return false;
  return distance(segments_[k].end, segments_[k + 1].start) <= kConnectionTolerance;
}

std::vector<SegmentEndpoints> ScanPath::endpoints() const {
  std::vector<SegmentEndpoints> out;
  out.reserve(segments_.size());
  for (const auto& s : segments_) out.emplace_back(s.start, s.end);
  return out;
}

ScanTiming::ScanTiming(const ScanPath& path, std::span<const double> speeds, double jump_dwell) {
  const std::size_t n = path.num_segments();
  if (speeds.size() != n) {
    throw ConfigError("expected " + std::to_string(n) + " speeds, got " + std::to_string(speeds.size()));
  }
  if (!(jump_dwell >= 0.0)) throw ConfigError("jump dwell must be >= 0");
  start_.resize(n);
  end_.resize(n);
  double t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(speeds[k] > 0.0) || !std::isfinite(speeds[k])) {
      throw ConfigError("speed on segment " + std::to_string(k + 1) + " must be positive");
    }
    if (k > 0 && !path.connected_to_next(k - 1)) t += jump_dwell;
    start_[k] = t;
    t += path.segment(k).length / speeds[k];
    end_[k] = t;
  }
}

std::size_t ScanTiming::active_segment(double t) const {
  // First k with end_[k] >= t.
  auto it = std::lower_bound(end_.begin(), end_.end(), t);
  if (it == end_.end()) return end_.size() - 1;
  return static_cast<std::size_t>(it - end_.begin());
}

Point3 beam_position(const ScanPath& path, const ScanTiming& timing, double t) {
  if (!(t >= 0.0) || t > timing.total_time()) {
    throw ConfigError("time " + std::to_string(t) + " outside [0, T]");
  }
  const std::size_t k = timing.active_segment(t);
  const double frac = std::clamp((t - timing.start(k)) / timing.duration(k), 0.0, 1.0);
  return path.point_at(k, frac);
}

SecondaryPath::SecondaryPath(const ScanPath& path, SecondaryPathSpec spec) : spec_(spec) {
  if (!(spec.depth >= 0.0)) throw ConfigError("secondary path depth must be >= 0");
  const std::size_t n = path.num_segments();
  start_.reserve(n);
  end_.reserve(n);
  for (const auto& s : path.segments()) {
    Point3 shift;
    if (spec.mode == OffsetMode::global_offset) {
      shift = {0.0, spec.width, 0.0};
    } else {
      shift = {spec.width * std::sin(s.angle), -spec.width * std::cos(s.angle), 0.0};
    }
    Point3 a = s.start + shift;
    Point3 b = s.end + shift;
    a.z = -spec.depth;
    b.z = -spec.depth;
    start_.push_back(a);
    end_.push_back(b);
  }
}

namespace generators {

std::vector<SegmentEndpoints> snake(std::size_t lines, double line_length, double line_offset,
                                    std::size_t segments_per_line) {
  if (lines == 0 || segments_per_line == 0 || !(line_length > 0.0)) {
    throw ConfigError("snake generator needs lines >= 1, segments >= 1 and positive length");
  }
  std::vector<SegmentEndpoints> out;
  out.reserve(lines * segments_per_line);
  const double step = line_length / static_cast<double>(segments_per_line);
  for (std::size_t l = 0; l < lines; ++l) {
    const double y = static_cast<double>(l) * line_offset;
    const bool forward = l % 2 == 0;
    for (std::size_t j = 0; j < segments_per_line; ++j) {
      // Endpoints are computed from the line ends so that consecutive
      // segments share bit-identical coordinates.
      const double a = static_cast<double>(j) * step;
      const double b = j + 1 == segments_per_line ? line_length : static_cast<double>(j + 1) * step;
      if (forward) {
        out.push_back({{a, y, 0.0}, {b, y, 0.0}});
      } else {
        out.push_back({{line_length - a, y, 0.0}, {line_length - b, y, 0.0}});
      }
    }
  }
  return out;
}

std::vector<SegmentEndpoints> annulus_quadrant(double r_inner, double r_outer, std::size_t n_lines,
                                               double delta_angle_rad, std::size_t segments_per_line,
                                               bool inward) {
  if (!(r_outer > r_inner) || !(r_inner >= 0.0) || n_lines == 0 || segments_per_line == 0) {
    throw ConfigError("annulus generator needs 0 <= r_inner < r_outer, lines >= 1, segments >= 1");
  }
  std::vector<SegmentEndpoints> out;
  out.reserve(n_lines * segments_per_line);
  const double step = (r_outer - r_inner) / static_cast<double>(segments_per_line);
  for (std::size_t l = 0; l < n_lines; ++l) {
    const double phi = static_cast<double>(l) * delta_angle_rad;
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    auto radial = [&](std::size_t j) {
      const double r = inward ? (j == segments_per_line ? r_inner : r_outer - static_cast<double>(j) * step)
                              : (j == segments_per_line ? r_outer : r_inner + static_cast<double>(j) * step);
      return Point3{r * c, r * s, 0.0};
    };
    for (std::size_t j = 0; j < segments_per_line; ++j) out.push_back({radial(j), radial(j + 1)});
  }
  return out;
}

}  // namespace generators

}  // namespace beamopt
