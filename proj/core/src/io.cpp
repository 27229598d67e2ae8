#include "optspline/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "optspline/linear_solver.hpp"

namespace optspline::io {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& cell, const std::string& path, int line_no) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{}) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": cannot parse '" << cell << "' as a number";
    throw std::runtime_error(msg.str());
  }
  return value;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  CsvTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (table.header.empty()) {
      table.header = split_csv_line(line);
      continue;
    }
    const auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": expected " << table.header.size()
          << " columns, found " << cells.size();
      throw std::runtime_error(msg.str());
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) row.push_back(parse_double(cell, path, line_no));
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) {
    throw std::runtime_error(path + ": empty file");
  }
  return table;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) {
    throw std::runtime_error("spline file: expected a matrix (array of rows)");
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) {
      throw std::runtime_error("spline file: ragged matrix rows");
    }
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw std::runtime_error("spline file: expected an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

nlohmann::json vec_list_to_json(const std::vector<Vec>& list) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : list) arr.push_back(vec_to_json(v));
  return arr;
}

std::vector<Vec> vec_list_from_json(const nlohmann::json& j) {
  std::vector<Vec> list;
  list.reserve(j.size());
  for (const auto& item : j) list.push_back(vec_from_json(item));
  return list;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

MeasurementSet read_measurements_csv(const std::string& path, double f0_hint) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "t") {
    throw std::runtime_error(path + ": first column must be 't'");
  }
  const int ny = static_cast<int>(table.header.size()) - 1;
  if (ny < 1) throw std::runtime_error(path + ": no measurement columns");
  std::vector<double> times;
  std::vector<Vec> values;
  times.reserve(table.rows.size());
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    times.push_back(row[0]);
    Vec y(ny);
    for (int c = 0; c < ny; ++c) y[c] = row[c + 1];
    values.push_back(std::move(y));
  }
  double f0 = f0_hint;
  if (f0 <= 0.0) {
    if (times.size() < 2) {
      throw std::invalid_argument("MeasurementSet: need K >= 1 intervals");
    }
    f0 = (static_cast<double>(times.size()) - 1.0) / (times.back() - times.front());
  }
  return MeasurementSet(std::move(times), std::move(values), f0);
}

void write_measurements_csv(const std::string& path, const MeasurementSet& ms) {
  std::ostringstream out;
  out << "t";
  for (int c = 1; c <= ms.n_y(); ++c) out << ",y" << c;
  out << "\n";
  for (int k = 0; k < ms.count(); ++k) {
    out << format_double(ms.time(k));
    for (int c = 0; c < ms.n_y(); ++c) out << "," << format_double(ms.value(k)[c]);
    out << "\n";
  }
  write_file(path, out.str());
}

Trajectory read_trajectory_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "t") {
    throw std::runtime_error(path + ": first column must be 't'");
  }
  const int nx = static_cast<int>(table.header.size()) - 1;
  if (nx < 1) throw std::runtime_error(path + ": no state columns");
  Trajectory traj;
  traj.times.reserve(table.rows.size());
  traj.states.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    traj.times.push_back(row[0]);
    Vec x(nx);
    for (int c = 0; c < nx; ++c) x[c] = row[c + 1];
    traj.states.push_back(std::move(x));
  }
  return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  if (traj.states.empty()) {
    throw std::invalid_argument("write_trajectory_csv: empty trajectory");
  }
  std::ostringstream out;
  out << "t";
  for (Eigen::Index c = 1; c <= traj.states.front().size(); ++c) out << ",x" << c;
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << format_double(traj.times[i]);
    for (Eigen::Index c = 0; c < traj.states[i].size(); ++c) {
      out << "," << format_double(traj.states[i][c]);
    }
    out << "\n";
  }
  write_file(path, out.str());
}

nlohmann::json spline_to_json(const Spline& spline) {
  spline.validate();
  nlohmann::json j;
  j["kind"] = spline.kind();
  j["tool_version"] = kToolVersion;
  j["f0"] = spline.f0;

  nlohmann::json model;
  if (const auto* info = std::get_if<LinearGaussianInfo>(&spline.model)) {
    model["A"] = mat_to_json(info->A);
    model["B"] = mat_to_json(info->B);
    model["Q"] = mat_to_json(info->Q);
  } else if (const auto* alpha = std::get_if<AlphaInfo>(&spline.model)) {
    model["alpha"] = alpha->alpha;
    model["sigma_p"] = alpha->sigma_p;
  } else {
    const auto& poly = std::get<PolynomialInfo>(spline.model);
    model["B"] = mat_to_json(poly.B);
    model["Q"] = mat_to_json(poly.Q);
  }
  j["model"] = std::move(model);

  nlohmann::json knots;
  knots["t"] = spline.knot_times;
  knots["x"] = vec_list_to_json(spline.knot_x);
  knots["xdot"] = vec_list_to_json(spline.knot_xdot);
  knots["v"] = vec_list_to_json(spline.knot_v);
  knots["w"] = vec_list_to_json(spline.knot_w);
  knots["eta"] = vec_list_to_json(spline.knot_eta);
  knots["lambda"] = vec_list_to_json(spline.knot_lambda);
  knots["lambda_minus"] = vec_list_to_json(spline.lambda_minus);
  knots["lambda_plus"] = vec_list_to_json(spline.lambda_plus);
  j["knots"] = std::move(knots);

  nlohmann::json segments = nlohmann::json::array();
  for (int k = 0; k < spline.intervals(); ++k) {
    nlohmann::json seg;
    seg["t_start"] = spline.knot_times[k];
    seg["t_end"] = spline.knot_times[k + 1];
    if (const auto* lin = std::get_if<LinearGaussianSegment>(&spline.segments[k])) {
      seg["c_lambda"] = vec_to_json(lin->c_lambda);
      seg["c_x"] = vec_to_json(lin->c_x);
    } else if (const auto* a = std::get_if<AlphaSegment>(&spline.segments[k])) {
      seg["a"] = a->a;
      seg["b"] = a->b;
      seg["c"] = a->c;
      seg["d"] = a->d;
    } else {
      const auto& poly = std::get<PolynomialSegment>(spline.segments[k]);
      seg["nodes"] = poly.nodes;
      seg["x_nodes"] = mat_to_json(poly.x_nodes);
      seg["lambda_nodes"] = mat_to_json(poly.lambda_nodes);
    }
    segments.push_back(std::move(seg));
  }
  j["segments"] = std::move(segments);
  return j;
}

Spline spline_from_json(const nlohmann::json& j) {
  try {
    Spline spline;
    const std::string kind = j.at("kind").get<std::string>();
    spline.f0 = j.at("f0").get<double>();
    spline.knot_times = j.at("knots").at("t").get<std::vector<double>>();

    const auto& model = j.at("model");
    if (kind == "linear-gaussian") {
      spline.model = LinearGaussianInfo{mat_from_json(model.at("A")),
                                        mat_from_json(model.at("B")),
                                        mat_from_json(model.at("Q"))};
    } else if (kind == "alpha") {
      spline.model =
          AlphaInfo{model.at("alpha").get<int>(), model.at("sigma_p").get<double>()};
    } else if (kind == "polynomial") {
      spline.model = PolynomialInfo{mat_from_json(model.at("B")),
                                    mat_from_json(model.at("Q"))};
    } else {
      throw std::runtime_error("spline file: unknown kind '" + kind + "'");
    }

    const auto& knots = j.at("knots");
    spline.knot_x = vec_list_from_json(knots.at("x"));
    spline.knot_xdot = vec_list_from_json(knots.at("xdot"));
    spline.knot_v = vec_list_from_json(knots.at("v"));
    spline.knot_w = vec_list_from_json(knots.at("w"));
    spline.knot_eta = vec_list_from_json(knots.at("eta"));
    spline.knot_lambda = vec_list_from_json(knots.at("lambda"));
    spline.lambda_minus = vec_list_from_json(knots.at("lambda_minus"));
    spline.lambda_plus = vec_list_from_json(knots.at("lambda_plus"));

    for (const auto& seg : j.at("segments")) {
      if (kind == "linear-gaussian") {
        const auto& info = std::get<LinearGaussianInfo>(spline.model);
        LinearGaussianSegment s;
        s.c_lambda = vec_from_json(seg.at("c_lambda"));
        s.c_x = vec_from_json(seg.at("c_x"));
        const double gap = seg.at("t_end").get<double>() - seg.at("t_start").get<double>();
        const TransitionTriplet tr = transition_matrices(info.A, info.B, info.Q, gap);
        s.Phi = tr.Phi;
        s.Psi = tr.Psi;
        s.G = tr.G;
        spline.segments.push_back(std::move(s));
      } else if (kind == "alpha") {
        spline.segments.push_back(
            AlphaSegment{seg.at("a").get<double>(), seg.at("b").get<double>(),
                         seg.at("c").get<double>(), seg.at("d").get<double>()});
      } else {
        PolynomialSegment s;
        s.nodes = seg.at("nodes").get<std::vector<double>>();
        s.x_nodes = mat_from_json(seg.at("x_nodes"));
        s.lambda_nodes = mat_from_json(seg.at("lambda_nodes"));
        spline.segments.push_back(std::move(s));
      }
    }
    spline.validate();
    return spline;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("spline file: ") + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  write_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace optspline::io
