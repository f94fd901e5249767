#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drcc/cuts.hpp"

namespace drcc::opf {

struct Bus {
  int id = 0;
  double load = 0.0;  ///< P_L, MW
};

struct Line {
  int from = 0;
  int to = 0;
  double reactance = 0.0;  ///< p.u. on base_mva
  double limit = 0.0;      ///< MW; +inf means unconstrained
};

struct Generator {
  int bus = 0;
  double pmin = 0.0;
  double pmax = 0.0;
  double c1 = 0.0;  ///< quadratic cost, $/MW^2
  double c2 = 0.0;  ///< linear cost, $/MW
  double cr = 0.0;  ///< reserve price, $/MW
};

struct WindPlant {
  int bus = 0;
  double forecast = 0.0;  ///< P_W^f, MW
};

/// DC network with generators, wind plants and fixed loads.
struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  int slack = 0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<WindPlant> wind;

  Eigen::Index bus_count() const noexcept { return static_cast<Eigen::Index>(buses.size()); }
  Eigen::Index gen_count() const noexcept { return static_cast<Eigen::Index>(generators.size()); }
  Eigen::Index wind_count() const noexcept { return static_cast<Eigen::Index>(wind.size()); }
  /// Position of a bus id in `buses`; throws InputError when unknown.
  Eigen::Index bus_index(int id) const;
  double total_load() const;
  double total_forecast() const;

  /// Throws InputError / NetworkError when the case breaks an invariant:
  /// unique bus ids, known slack, positive reactances and limits, C1 >= 0,
  /// pmin <= pmax, connected network.
  void validate() const;
};

/// Reserve price default used by loaders when a generator omits it.
inline constexpr double kReservePriceFactor = 10.0;

/// JSON schema:
///   {"name": str, "base_mva": 100, "slack": id,
///    "buses": [{"id", "load"}], "lines": [{"from", "to", "x", "limit"?}],
///    "generators": [{"bus", "pmin", "pmax", "c1", "c2", "cr"?}],
///    "wind": [{"bus", "forecast"}], "wind_total"?: MW}
/// A missing or null line limit means unconstrained; missing "cr" defaults to
/// 10 * c2. Throws InputError.
NetworkCase parse_case_json(const std::string& text);
/// Text matrix format subset: mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch,
/// mpc.gencost (polynomial model 2), optional mpc.wind = [bus forecast; ...].
NetworkCase parse_case_matpower(const std::string& text);
/// Dispatches on extension (.json, .m). Throws InputError.
NetworkCase load_case(const std::string& path);
std::string case_to_json(const NetworkCase& c);

/// Replaces the wind plants by plants at `buses` sharing `total` MW in
/// proportion to the generation limit installed at each bus (equal shares if
/// none of the buses hosts a generator).
void allocate_wind(NetworkCase& c, const std::vector<int>& buses, double total);

/// Line x bus sensitivities; the slack column is zero. Throws NetworkError for
/// a disconnected network.
Eigen::MatrixXd build_ptdf(const NetworkCase& c);

/// Decision vector layout x = [P_G, R_up, R_dn, d_G], each of length N_G.
struct Layout {
  Eigen::Index ng = 0;
  Eigen::Index size() const noexcept { return 4 * ng; }
  Eigen::Index pg(Eigen::Index g) const noexcept { return g; }
  Eigen::Index rup(Eigen::Index g) const noexcept { return ng + g; }
  Eigen::Index rdn(Eigen::Index g) const noexcept { return 2 * ng + g; }
  Eigen::Index dist(Eigen::Index g) const noexcept { return 3 * ng + g; }
};

struct Decision {
  Eigen::VectorXd pg, rup, rdn, dist;
  static Decision from_vector(const Layout& layout, const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;
};

/// Two constraints per limited line (flow upper/lower) and four per generator
/// (output upper/lower, up/down reserve), in that order.
std::vector<cuts::AffineChanceConstraint> extract_chance_constraints(const NetworkCase& c,
                                                                     const Eigen::MatrixXd& ptdf);

struct LinearConstraint {
  enum class Sense { Equal, GreaterEqual };
  Eigen::VectorXd row;
  double rhs = 0.0;
  Sense sense = Sense::Equal;
  std::string label;
  double residual(const Eigen::VectorXd& x) const { return row.dot(x) - rhs; }
  bool satisfied(const Eigen::VectorXd& x, double tol) const;
};

/// sum d = 1, nominal balance, and non-negativity of every decision entry.
std::vector<LinearConstraint> deterministic_constraints(const NetworkCase& c);

/// x^T diag(quad) x + linear^T x over the decision vector.
struct QuadraticObjective {
  Eigen::VectorXd quad;
  Eigen::VectorXd linear;
  double operator()(const Eigen::VectorXd& x) const;
};

/// P_G^T C1 P_G + C2^T P_G + C_R^T (R_up + R_dn). Throws DomainError for C1 < 0.
QuadraticObjective objective(const NetworkCase& c);

}  // namespace drcc::opf
