#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpr/equilibrium.hpp"
#include "cpr/experiments.hpp"
#include "cpr/game.hpp"

namespace cpr::io {

/// Malformed or schema-violating configuration. `where` is either
/// "line L, column C" or a field path such as "game.players[2].mu_s".
class ConfigError : public Error {
 public:
  ConfigError(std::string where, const std::string& what)
      : Error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct ModelSection {
  std::string family = "exponential";
  double A = 5.0;
  double B = 0.5;
};

/// Game definition with players in input order.
struct GameSection {
  std::vector<PlayerParams<double>> players;
  double r_s = 1.0;
  ModelSection model;

  GameConfig<double> build() const;
};

struct RunConfig {
  std::optional<GameSection> game;
  BrdOptions<double> solver;
  std::optional<SweepSpec> sweep;
};

/// Parses and schema-checks a config document; unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

nlohmann::json config_to_json(const RunConfig& config);

// Result documents.

struct VerificationDoc {
  bool passed = false;
  bool slope_positive = false;
  bool zero_iff_nonpositive = false;
  bool first_order = false;
  bool monotone_structure = false;
  bool zero_suffix = false;
  bool no_profitable_deviation = false;
  double max_deviation_gain = 0;
  std::vector<std::string> findings;

  static VerificationDoc from(const PneReport& r);
  bool operator==(const VerificationDoc&) const = default;
};

struct PneDoc {
  std::string schedule;
  std::size_t starts = 0;
  std::vector<double> profile_input_order;
  std::vector<double> profile_h_order;
  std::vector<std::size_t> h_order;  // input index of each canonical player
  double x = 0;
  std::vector<double> incentives_h_order;
  std::vector<int> iterations;  // per start
  double max_pairwise_sup_norm = 0;
  VerificationDoc verification;

  bool operator==(const PneDoc&) const = default;
};

struct WelfareDoc {
  double c_star = 0;
  double psi_star = 0;
  std::size_t pivot = 0;  // canonical index; N when every player is saturated
  std::vector<double> profile_input_order;
  std::vector<double> profile_h_order;
  std::vector<std::size_t> h_order;

  bool operator==(const WelfareDoc&) const = default;
};

struct BoundsDoc {
  double xbar = 0;
  double poa_bound = 0;
  double tri_bound = 0;
  double li_bound = 0;
  bool precondition = false;

  bool operator==(const BoundsDoc&) const = default;
};

struct OracleDoc {
  std::size_t deviation_grid = 0;
  std::size_t welfare_grid = 0;
  std::vector<double> pne_input_order;
  double max_deviation_gain = 0;
  double relative_deviation_gain = 0;  // gain / Psi(PNE)
  std::vector<double> sw_input_order;
  double sw_psi = 0;
  std::vector<double> brute_input_order;
  double brute_psi = 0;
  double sw_relative_gap = 0;  // |Psi_sw - Psi_brute| / Psi_brute
  bool pne_confirmed = false;
  bool sw_confirmed = false;

  bool operator==(const OracleDoc&) const = default;
};

void to_json(nlohmann::json& j, const VerificationDoc& d);
void from_json(const nlohmann::json& j, VerificationDoc& d);
void to_json(nlohmann::json& j, const PneDoc& d);
void from_json(const nlohmann::json& j, PneDoc& d);
void to_json(nlohmann::json& j, const WelfareDoc& d);
void from_json(const nlohmann::json& j, WelfareDoc& d);
void to_json(nlohmann::json& j, const BoundsDoc& d);
void from_json(const nlohmann::json& j, BoundsDoc& d);
void to_json(nlohmann::json& j, const OracleDoc& d);
void from_json(const nlohmann::json& j, OracleDoc& d);

// CSV output. Fields are comma separated, LF terminated, reals printed with
// 17 significant digits.

/// 17 significant digits, "nan" for NaN.
std::string format_real(double v);

extern const std::vector<std::string> kRecordColumns;

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SweepRecord>& records);

}  // namespace cpr::io
