#include "drcc/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "drcc/error.hpp"

namespace drcc::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

stats::SampleSet parse_samples_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("samples CSV: empty input");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split(trim(line));
  const auto l = static_cast<Eigen::Index>(header.size());
  for (Eigen::Index j = 0; j < l; ++j) {
    if (trim(header[static_cast<std::size_t>(j)]) != "w" + std::to_string(j + 1))
      throw InputError("samples CSV: header must read w1,...,wl");
  }

  std::vector<double> values;
  Eigen::Index rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto cells = split(t);
    if (static_cast<Eigen::Index>(cells.size()) != l)
      throw InputError("samples CSV line " + std::to_string(line_no) + ": expected " + std::to_string(l) + " values");
    for (const auto& c : cells) {
      const std::string v = trim(c);
      char* end = nullptr;
      errno = 0;
      const double d = std::strtod(v.c_str(), &end);
      if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
        throw InputError("samples CSV line " + std::to_string(line_no) + ": bad value '" + v + "'");
      values.push_back(d);
    }
    ++rows;
  }
  Eigen::MatrixXd data(rows, l);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < l; ++j) data(i, j) = values[static_cast<std::size_t>(i * l + j)];
  return stats::SampleSet(std::move(data));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

stats::SampleSet read_samples_csv(const std::string& path) { return parse_samples_csv(read_text(path)); }

stats::GeneratorSpec parse_generator_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("generator config: ") + e.what());
  }
  if (!j.is_object()) throw InputError("generator config: top level must be an object");
  auto num = [](const nlohmann::json& o, const char* key, double fallback) {
    if (!o.contains(key)) return fallback;
    if (!o.at(key).is_number()) throw InputError(std::string("generator config: '") + key + "' must be a number");
    return o.at(key).get<double>();
  };
  stats::GeneratorSpec s;
  if (!j.contains("family") || !j.at("family").is_string()) throw InputError("generator config: missing family");
  s.family = stats::parse_family(j.at("family").get<std::string>());
  s.dimension = static_cast<int>(num(j, "dimension", s.dimension));
  s.count = static_cast<Eigen::Index>(num(j, "count", static_cast<double>(s.count)));
  s.correlation = num(j, "correlation", s.correlation);
  s.mean = num(j, "mean", s.mean);
  s.stddev = num(j, "stddev", s.stddev);
  s.lower = num(j, "lower", s.lower);
  s.upper = num(j, "upper", s.upper);
  s.peak = num(j, "peak", s.peak);
  if (j.contains("components")) {
    if (!j.at("components").is_array()) throw InputError("generator config: components must be an array");
    for (const auto& c : j.at("components")) {
      stats::GeneratorSpec::BetaComponent b;
      b.weight = num(c, "weight", b.weight);
      b.a = num(c, "a", b.a);
      b.b = num(c, "b", b.b);
      b.lower = num(c, "lower", b.lower);
      b.upper = num(c, "upper", b.upper);
      s.components.push_back(b);
    }
  }
  stats::check_generator_spec(s);
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_samples_csv(const stats::SampleSet& samples) {
  std::string out;
  const auto& X = samples.data();
  for (Eigen::Index j = 0; j < X.cols(); ++j) out += (j ? ",w" : "w") + std::to_string(j + 1);
  out += '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) out += ',';
      out += fmt(X(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_samples_csv(const std::string& path, const stats::SampleSet& samples) {
  write_text(path, format_samples_csv(samples));
}

}  // namespace drcc::io
