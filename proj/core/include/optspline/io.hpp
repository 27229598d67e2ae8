#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "optspline/model.hpp"
#include "optspline/simkit.hpp"
#include "optspline/spline.hpp"

namespace optspline::io {

/// Shortest round-trip style formatting used for all CSV numbers, so equal
/// inputs produce byte-identical files.
std::string format_double(double value);

/// Measurement CSV schema: header "t,y1,...,yn", one row per measurement,
/// strictly increasing times. f0_hint == 0 infers f0 = K / (t_K - t_0).
MeasurementSet read_measurements_csv(const std::string& path, double f0_hint = 0.0);
void write_measurements_csv(const std::string& path, const MeasurementSet& ms);

/// Trajectory CSV schema: header "t,x1,...,xn", one row per grid node.
Trajectory read_trajectory_csv(const std::string& path);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Spline serialization. Segment transition caches are rebuilt on load, so
/// files stay at the mathematical content: knot data plus per-segment
/// constants.
nlohmann::json spline_to_json(const Spline& spline);
Spline spline_from_json(const nlohmann::json& j);

/// Whole-file JSON helpers (2-space indent, trailing newline, sorted keys).
void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace optspline::io
