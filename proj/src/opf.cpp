#include "drcc/opf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "drcc/error.hpp"

namespace drcc::opf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using json = nlohmann::json;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Index NetworkCase::bus_index(int id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<Index>(i);
  throw InputError("unknown bus id " + std::to_string(id));
}

double NetworkCase::total_load() const {
  double s = 0.0;
  for (const auto& b : buses) s += b.load;
  return s;
}

double NetworkCase::total_forecast() const {
  double s = 0.0;
  for (const auto& w : wind) s += w.forecast;
  return s;
}

void NetworkCase::validate() const {
  if (buses.empty()) throw InputError("case has no buses");
  if (generators.empty()) throw InputError("case has no generators");
  std::set<int> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw InputError("duplicate bus id " + std::to_string(b.id));
    if (!std::isfinite(b.load)) throw InputError("non-finite load at bus " + std::to_string(b.id));
  }
  if (!ids.count(slack)) throw InputError("slack bus " + std::to_string(slack) + " does not exist");
  if (!(base_mva > 0.0)) throw InputError("base_mva must be positive");
  for (const auto& l : lines) {
    bus_index(l.from);
    bus_index(l.to);
    if (l.from == l.to) throw InputError("line connects a bus to itself");
    if (!(l.reactance > 0.0) || !std::isfinite(l.reactance))
      throw InputError("line reactance must be positive");
    if (!(l.limit > 0.0)) throw InputError("line limit must be positive");
  }
  for (const auto& g : generators) {
    bus_index(g.bus);
    if (!std::isfinite(g.pmin) || !std::isfinite(g.pmax) || g.pmin > g.pmax)
      throw InputError("generator bounds invalid at bus " + std::to_string(g.bus));
    if (g.c1 < 0.0) throw InputError("negative quadratic cost at bus " + std::to_string(g.bus));
    if (!std::isfinite(g.c1) || !std::isfinite(g.c2) || !std::isfinite(g.cr))
      throw InputError("non-finite cost coefficient");
  }
  for (const auto& w : wind) {
    bus_index(w.bus);
    if (!std::isfinite(w.forecast)) throw InputError("non-finite wind forecast");
  }

  // Connectivity by breadth-first search.
  std::vector<std::vector<Index>> adj(buses.size());
  for (const auto& l : lines) {
    const Index a = bus_index(l.from), b = bus_index(l.to);
    adj[static_cast<std::size_t>(a)].push_back(b);
    adj[static_cast<std::size_t>(b)].push_back(a);
  }
  std::vector<bool> seen(buses.size(), false);
  std::queue<Index> q;
  q.push(bus_index(slack));
  seen[static_cast<std::size_t>(bus_index(slack))] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const Index u = q.front();
    q.pop();
    for (Index v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++reached;
        q.push(v);
      }
    }
  }
  if (reached != buses.size()) throw NetworkError("network is disconnected");
}

// ---------------------------------------------------------------------------
// Loaders

namespace {

double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  if (!j.at(key).is_number()) throw InputError(where + ": field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw InputError(where + ": field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

int integer(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number_integer())
    throw InputError(where + ": field '" + key + "' must be an integer");
  return j.at(key).get<int>();
}

const json& array(const json& j, const char* key, bool required) {
  static const json empty = json::array();
  if (!j.contains(key)) {
    if (required) throw InputError(std::string("case: missing array '") + key + "'");
    return empty;
  }
  if (!j.at(key).is_array()) throw InputError(std::string("case: '") + key + "' must be an array");
  return j.at(key);
}

}  // namespace

NetworkCase parse_case_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("case JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("case JSON: top level must be an object");

  NetworkCase c;
  c.name = j.value("name", std::string("case"));
  c.base_mva = number_or(j, "base_mva", 100.0, "case");
  c.slack = integer(j, "slack", "case");
  for (const auto& b : array(j, "buses", true))
    c.buses.push_back(Bus{integer(b, "id", "bus"), number_or(b, "load", 0.0, "bus")});
  for (const auto& l : array(j, "lines", false)) {
    c.lines.push_back(Line{integer(l, "from", "line"), integer(l, "to", "line"), number(l, "x", "line"),
                           number_or(l, "limit", kInf, "line")});
  }
  for (const auto& g : array(j, "generators", true)) {
    Generator gen;
    gen.bus = integer(g, "bus", "generator");
    gen.pmin = number_or(g, "pmin", 0.0, "generator");
    gen.pmax = number(g, "pmax", "generator");
    gen.c1 = number_or(g, "c1", 0.0, "generator");
    gen.c2 = number_or(g, "c2", 0.0, "generator");
    gen.cr = number_or(g, "cr", kReservePriceFactor * gen.c2, "generator");
    c.generators.push_back(gen);
  }
  for (const auto& w : array(j, "wind", false))
    c.wind.push_back(WindPlant{integer(w, "bus", "wind"), number(w, "forecast", "wind")});

  if (j.contains("wind_total")) {
    const double total = number(j, "wind_total", "case");
    if (std::abs(total - c.total_forecast()) > 1e-6 * std::max(1.0, std::abs(total)))
      throw InputError("case: wind forecasts do not add up to wind_total");
  }
  c.validate();
  return c;
}

namespace {

// Rows of an `mpc.<name> = [ ... ];` block.
std::vector<std::vector<double>> matrix_block(const std::string& text, const std::string& name,
                                              bool required) {
  const std::regex head("mpc\\." + name + "\\s*=\\s*\\[");
  std::smatch m;
  if (!std::regex_search(text, m, head)) {
    if (required) throw InputError("case file: missing mpc." + name);
    return {};
  }
  const auto start = static_cast<std::size_t>(m.position(0) + m.length(0));
  const auto stop = text.find(']', start);
  if (stop == std::string::npos) throw InputError("case file: unterminated mpc." + name);

  std::vector<std::vector<double>> rows;
  std::vector<double> row;
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) return;
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      row.push_back(v);
    } catch (const std::exception&) {
      throw InputError("case file: bad number '" + token + "' in mpc." + name);
    }
    token.clear();
  };
  auto flush_row = [&] {
    flush_token();
    if (!row.empty()) rows.push_back(std::move(row));
    row.clear();
  };
  bool comment = false;
  for (std::size_t i = start; i < stop; ++i) {
    const char ch = text[i];
    if (comment) {
      if (ch == '\n') {
        comment = false;
        flush_row();
      }
      continue;
    }
    if (ch == '%') {
      flush_token();
      comment = true;
    } else if (ch == ';' || ch == '\n') {
      flush_row();
    } else if (ch == ' ' || ch == '\t' || ch == ',' || ch == '\r') {
      flush_token();
    } else {
      token.push_back(ch);
    }
  }
  flush_row();
  return rows;
}

}  // namespace

NetworkCase parse_case_matpower(const std::string& text) {
  NetworkCase c;
  std::smatch m;
  if (std::regex_search(text, m, std::regex("function\\s+mpc\\s*=\\s*(\\w+)"))) c.name = m[1];
  if (std::regex_search(text, m, std::regex("mpc\\.baseMVA\\s*=\\s*([0-9.eE+-]+)")))
    c.base_mva = std::stod(m[1]);

  bool have_slack = false;
  for (const auto& r : matrix_block(text, "bus", true)) {
    if (r.size() < 3) throw InputError("mpc.bus rows need at least 3 columns");
    c.buses.push_back(Bus{static_cast<int>(r[0]), r[2]});
    if (static_cast<int>(r[1]) == 3) {
      if (have_slack) throw InputError("mpc.bus: more than one reference bus");
      c.slack = static_cast<int>(r[0]);
      have_slack = true;
    }
  }
  if (!have_slack) throw InputError("mpc.bus: no reference bus (type 3)");

  for (const auto& r : matrix_block(text, "branch", true)) {
    if (r.size() < 6) throw InputError("mpc.branch rows need at least 6 columns");
    if (r.size() >= 11 && r[10] <= 0.0) continue;
    const double limit = r[5] > 0.0 ? r[5] : kInf;
    c.lines.push_back(Line{static_cast<int>(r[0]), static_cast<int>(r[1]), r[3], limit});
  }

  const auto gens = matrix_block(text, "gen", true);
  const auto costs = matrix_block(text, "gencost", true);
  if (costs.size() < gens.size()) throw InputError("mpc.gencost has fewer rows than mpc.gen");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto& r = gens[i];
    if (r.size() < 10) throw InputError("mpc.gen rows need at least 10 columns");
    if (r[7] <= 0.0) continue;
    const auto& k = costs[i];
    if (k.size() < 4 || static_cast<int>(k[0]) != 2)
      throw InputError("mpc.gencost: only polynomial (model 2) costs are supported");
    const auto ncoef = static_cast<std::size_t>(k[3]);
    if (k.size() < 4 + ncoef || ncoef > 3) throw InputError("mpc.gencost: unsupported polynomial");
    Generator g;
    g.bus = static_cast<int>(r[0]);
    g.pmax = r[8];
    g.pmin = r[9];
    // Coefficients are stored highest order first.
    const std::size_t base = 4;
    if (ncoef == 3) {
      g.c1 = k[base];
      g.c2 = k[base + 1];
    } else if (ncoef == 2) {
      g.c2 = k[base];
    }
    g.cr = kReservePriceFactor * g.c2;
    c.generators.push_back(g);
  }

  for (const auto& r : matrix_block(text, "wind", false)) {
    if (r.size() < 2) throw InputError("mpc.wind rows need bus and forecast");
    c.wind.push_back(WindPlant{static_cast<int>(r[0]), r[1]});
  }
  c.validate();
  return c;
}

NetworkCase load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open case file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  auto ends_with = [&](const std::string& suffix) {
    return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".json")) return parse_case_json(text);
  if (ends_with(".m")) return parse_case_matpower(text);
  throw InputError("case file '" + path + "': expected a .json or .m extension");
}

std::string case_to_json(const NetworkCase& c) {
  json j;
  j["name"] = c.name;
  j["base_mva"] = c.base_mva;
  j["slack"] = c.slack;
  j["buses"] = json::array();
  for (const auto& b : c.buses) j["buses"].push_back({{"id", b.id}, {"load", b.load}});
  j["lines"] = json::array();
  for (const auto& l : c.lines) {
    json row = {{"from", l.from}, {"to", l.to}, {"x", l.reactance}};
    row["limit"] = std::isfinite(l.limit) ? json(l.limit) : json(nullptr);
    j["lines"].push_back(row);
  }
  j["generators"] = json::array();
  for (const auto& g : c.generators) {
    j["generators"].push_back(
        {{"bus", g.bus}, {"pmin", g.pmin}, {"pmax", g.pmax}, {"c1", g.c1}, {"c2", g.c2}, {"cr", g.cr}});
  }
  j["wind"] = json::array();
  for (const auto& w : c.wind) j["wind"].push_back({{"bus", w.bus}, {"forecast", w.forecast}});
  return j.dump(2);
}

void allocate_wind(NetworkCase& c, const std::vector<int>& buses, double total) {
  if (buses.empty()) throw InputError("allocate_wind: no buses given");
  std::vector<double> weight;
  double sum = 0.0;
  for (int b : buses) {
    c.bus_index(b);
    double w = 0.0;
    for (const auto& g : c.generators)
      if (g.bus == b) w += g.pmax;
    weight.push_back(w);
    sum += w;
  }
  c.wind.clear();
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const double share = sum > 0.0 ? weight[i] / sum : 1.0 / static_cast<double>(buses.size());
    c.wind.push_back(WindPlant{buses[i], total * share});
  }
}

// ---------------------------------------------------------------------------

MatrixXd build_ptdf(const NetworkCase& c) {
  const Index nb = c.bus_count(), nl = static_cast<Index>(c.lines.size());
  MatrixXd inc = MatrixXd::Zero(nl, nb);
  VectorXd y(nl);
  for (Index k = 0; k < nl; ++k) {
    const auto& l = c.lines[static_cast<std::size_t>(k)];
    if (!(l.reactance > 0.0)) throw NetworkError("build_ptdf: reactance must be positive");
    inc(k, c.bus_index(l.from)) += 1.0;
    inc(k, c.bus_index(l.to)) -= 1.0;
    y(k) = 1.0 / l.reactance;
  }
  const MatrixXd B = inc.transpose() * y.asDiagonal() * inc;

  const Index s = c.bus_index(c.slack);
  std::vector<Index> keep;
  for (Index i = 0; i < nb; ++i)
    if (i != s) keep.push_back(i);
  const auto nr = static_cast<Index>(keep.size());
  MatrixXd Br(nr, nr);
  for (Index i = 0; i < nr; ++i)
    for (Index j = 0; j < nr; ++j) Br(i, j) = B(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);

  MatrixXd X = MatrixXd::Zero(nb, nb);
  if (nr > 0) {
    Eigen::LLT<MatrixXd> llt(Br);
    if (llt.info() != Eigen::Success) throw NetworkError("build_ptdf: singular susceptance matrix (disconnected network)");
    const MatrixXd Xr = llt.solve(MatrixXd::Identity(nr, nr));
    const double cond = Xr.cwiseAbs().maxCoeff() * Br.cwiseAbs().maxCoeff();
    if (!Xr.allFinite() || cond > 1e14)
      throw NetworkError("build_ptdf: singular susceptance matrix (disconnected network)");
    for (Index i = 0; i < nr; ++i)
      for (Index j = 0; j < nr; ++j) X(keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]) = Xr(i, j);
  }
  return y.asDiagonal() * inc * X;
}

// ---------------------------------------------------------------------------

Decision Decision::from_vector(const Layout& layout, const VectorXd& x) {
  if (x.size() < layout.size()) throw DomainError("decision vector too short");
  const Index n = layout.ng;
  return Decision{x.segment(0, n), x.segment(n, n), x.segment(2 * n, n), x.segment(3 * n, n)};
}

VectorXd Decision::to_vector() const {
  const Index n = pg.size();
  VectorXd x(4 * n);
  x << pg, rup, rdn, dist;
  return x;
}

std::vector<cuts::AffineChanceConstraint> extract_chance_constraints(const NetworkCase& c,
                                                                     const MatrixXd& ptdf) {
  const Layout L{c.gen_count()};
  const Index n = L.size(), l = c.wind_count();
  if (ptdf.rows() != static_cast<Index>(c.lines.size()) || ptdf.cols() != c.bus_count())
    throw DomainError("extract_chance_constraints: PTDF shape mismatch");

  VectorXd injection_fixed = VectorXd::Zero(c.bus_count());  // C_W P_f - C_L P_L
  for (const auto& w : c.wind) injection_fixed(c.bus_index(w.bus)) += w.forecast;
  for (Index b = 0; b < c.bus_count(); ++b) injection_fixed(b) -= c.buses[static_cast<std::size_t>(b)].load;

  std::vector<cuts::AffineChanceConstraint> out;
  auto blank = [&](const std::string& label) {
    cuts::AffineChanceConstraint cc;
    cc.A = MatrixXd::Zero(l, n);
    cc.a0 = VectorXd::Zero(l);
    cc.b = VectorXd::Zero(n);
    cc.label = label;
    return cc;
  };

  for (std::size_t k = 0; k < c.lines.size(); ++k) {
    const auto& line = c.lines[k];
    if (!std::isfinite(line.limit)) continue;
    const auto row = ptdf.row(static_cast<Index>(k));
    cuts::AffineChanceConstraint up = blank("line:" + std::to_string(k) + ":" + std::to_string(line.from) + "-" +
                                            std::to_string(line.to) + ":upper");
    for (Index i = 0; i < l; ++i) up.a0(i) = row(c.bus_index(c.wind[static_cast<std::size_t>(i)].bus));
    for (Index g = 0; g < c.gen_count(); ++g) {
      const double f = row(c.bus_index(c.generators[static_cast<std::size_t>(g)].bus));
      up.A.col(L.dist(g)).setConstant(-f);
      up.b(L.pg(g)) = -f;
    }
    up.b0 = line.limit - row.dot(injection_fixed);

    cuts::AffineChanceConstraint lo = blank(up.label.substr(0, up.label.size() - 5) + "lower");
    lo.A = -up.A;
    lo.a0 = -up.a0;
    lo.b = -up.b;
    lo.b0 = line.limit + row.dot(injection_fixed);
    out.push_back(std::move(up));
    out.push_back(std::move(lo));
  }

  for (Index g = 0; g < c.gen_count(); ++g) {
    const auto& gen = c.generators[static_cast<std::size_t>(g)];
    const std::string tag = "gen:" + std::to_string(g) + ":";
    cuts::AffineChanceConstraint pmax = blank(tag + "pmax");
    pmax.A.col(L.dist(g)).setConstant(-1.0);
    pmax.b(L.pg(g)) = -1.0;
    pmax.b0 = gen.pmax;
    cuts::AffineChanceConstraint pmin = blank(tag + "pmin");
    pmin.A.col(L.dist(g)).setConstant(1.0);
    pmin.b(L.pg(g)) = 1.0;
    pmin.b0 = -gen.pmin;
    cuts::AffineChanceConstraint rup = blank(tag + "reserve-up");
    rup.A.col(L.dist(g)).setConstant(-1.0);
    rup.b(L.rup(g)) = 1.0;
    cuts::AffineChanceConstraint rdn = blank(tag + "reserve-down");
    rdn.A.col(L.dist(g)).setConstant(1.0);
    rdn.b(L.rdn(g)) = 1.0;
    out.push_back(std::move(pmax));
    out.push_back(std::move(pmin));
    out.push_back(std::move(rup));
    out.push_back(std::move(rdn));
  }
  return out;
}

bool LinearConstraint::satisfied(const VectorXd& x, double tol) const {
  const double r = residual(x);
  return sense == Sense::Equal ? std::abs(r) <= tol : r >= -tol;
}

std::vector<LinearConstraint> deterministic_constraints(const NetworkCase& c) {
  const Layout L{c.gen_count()};
  const Index n = L.size();
  std::vector<LinearConstraint> out;

  LinearConstraint simplex{VectorXd::Zero(n), 1.0, LinearConstraint::Sense::Equal, "sum-distribution"};
  LinearConstraint balance{VectorXd::Zero(n), c.total_load() - c.total_forecast(),
                           LinearConstraint::Sense::Equal, "nominal-balance"};
  for (Index g = 0; g < L.ng; ++g) {
    simplex.row(L.dist(g)) = 1.0;
    balance.row(L.pg(g)) = 1.0;
  }
  out.push_back(std::move(simplex));
  out.push_back(std::move(balance));
  for (Index i = 0; i < n; ++i) {
    LinearConstraint nonneg{VectorXd::Zero(n), 0.0, LinearConstraint::Sense::GreaterEqual,
                            "nonnegative:" + std::to_string(i)};
    nonneg.row(i) = 1.0;
    out.push_back(std::move(nonneg));
  }
  return out;
}

double QuadraticObjective::operator()(const VectorXd& x) const {
  return x.dot(quad.cwiseProduct(x)) + linear.dot(x);
}

QuadraticObjective objective(const NetworkCase& c) {
  const Layout L{c.gen_count()};
  QuadraticObjective obj{VectorXd::Zero(L.size()), VectorXd::Zero(L.size())};
  for (Index g = 0; g < L.ng; ++g) {
    const auto& gen = c.generators[static_cast<std::size_t>(g)];
    if (gen.c1 < 0.0) throw DomainError("objective: negative quadratic cost coefficient");
    obj.quad(L.pg(g)) = gen.c1;
    obj.linear(L.pg(g)) = gen.c2;
    obj.linear(L.rup(g)) = gen.cr;
    obj.linear(L.rdn(g)) = gen.cr;
  }
  return obj;
}

}  // namespace drcc::opf
