#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncsr/multitop.hpp"
#include "ncsr/profile.hpp"

namespace ncsr {

/// Configuration problem with the 1-based line it was detected on (0 when no
/// line applies, e.g. a missing required key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line);
  int line() const { return line_; }

 private:
  int line_ = 0;
};

// ---------------------------------------------------------------------------
// Strict TOML subset
// ---------------------------------------------------------------------------
//
// Supported grammar, one construct per line:
//   # comment                           (also allowed after a value)
//   [section]                           named table
//   [[list]]                            appends a table to the named list
//   key = value                         value: string, number, bool, array
// Arrays are single-line, homogeneous, and may hold only scalars. Keys are
// bare ([A-Za-z0-9_-]). Anything else is rejected with its line number.

struct TomlValue {
  enum class Kind { kString, kNumber, kBool, kArray };
  Kind kind = Kind::kNumber;
  std::string str;
  double num = 0.0;
  bool flag = false;
  bool is_integer = false;  // numeric literal had integer form
  std::vector<TomlValue> items;
  int line = 0;
};

struct TomlTable {
  std::map<std::string, TomlValue> values;
  int line = 0;
};

struct TomlDocument {
  TomlTable root;
  std::map<std::string, TomlTable> sections;
  std::map<std::string, std::vector<TomlTable>> lists;
};

TomlDocument parse_toml(const std::string& text);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------
//
// Document schema (root keys; [[piece]] is the only table list):
//   [[piece]]  breakpoint = F   left edge of one polynomial piece
//              coeffs = [a0, a1, ...]   ascending powers
//   z_max = F          right edge of the working window (required)
//   epsilon = F | [F, ...]              step size(s) (required, > 0)
//   R = F              radius constant (optional)
//   y_max = F          enumeration ceiling (optional)
//   n_max = N          trivial-lattice window count (optional, default 8)
//   seed = N           random-suite seed (optional, default 0)
//   compromise = "merge" | "split" | "remove" | "add" | "none"
//   mode = "over" | "under"             hop family (defaulted per compromise)
//   suites = ["..."]   suite selection for verify / calculus (optional)
//   archive = "path"   lattice archive to check during verify (optional)
//   window = [lo, hi]  axial window for scaling-limit / inner suites
//   grid = [n_z, n_phi]   surface sampling grid (optional, default [64, 48])
//   out = "dir"        output directory (optional, default ".")

struct RunConfig {
  std::vector<ProfileCurve::Piece> pieces;
  double z_max = 0.0;
  std::vector<double> epsilons;
  std::optional<double> R;
  std::optional<double> y_max;
  int n_max = 8;
  unsigned seed = 0;
  Compromise compromise = Compromise::kNone;
  bool mode_given = false;
  HopMode mode = HopMode::kOver;
  std::optional<std::vector<std::string>> suites;
  std::optional<std::string> archive;
  std::optional<std::pair<double, double>> window;
  int grid_z = 64;
  int grid_phi = 48;
  std::string out_dir = ".";
  std::string raw_text;  // exact file content, hashed into reports

  /// Curve assembled from the pieces (validated on construction).
  ProfileCurve profile() const;
};

/// Parses and validates a configuration document. Unknown keys, missing
/// required keys, malformed values, and incompatible compromise/mode
/// combinations are ConfigErrors carrying the offending line.
RunConfig parse_run_config(const std::string& text);

/// Reads `path` and parses it. Unreadable file -> ConfigError (line 0).
RunConfig load_run_config(const std::string& path);

/// The hop family every compromise supports (merge/remove carry over-hops,
/// split/add under-hops, an untouched lattice either).
HopMode default_mode(Compromise c);

}  // namespace ncsr
