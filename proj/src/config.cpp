#include "ncsr/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ncsr {

namespace {

std::string with_line(const std::string& msg, int line) {
  if (line <= 0) return msg;
  return msg + " (line " + std::to_string(line) + ")";
}

}  // namespace

ConfigError::ConfigError(const std::string& msg, int line)
    : std::runtime_error(with_line(msg, line)), line_(line) {}

// ---------------------------------------------------------------------------
// TOML subset parser
// ---------------------------------------------------------------------------

namespace {

struct Cursor {
  const std::string& s;
  size_t i = 0;
  int line;

  bool done() const { return i >= s.size(); }
  char peek() const { return s[i]; }
  void skip_ws() {
    while (!done() && (s[i] == ' ' || s[i] == '\t')) ++i;
  }
};

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_bare_key(Cursor& c) {
  size_t start = c.i;
  while (!c.done() && is_bare_key_char(c.peek())) ++c.i;
  if (c.i == start) throw ConfigError("expected a key", c.line);
  return c.s.substr(start, c.i - start);
}

TomlValue parse_value(Cursor& c);

TomlValue parse_string(Cursor& c) {
  TomlValue v;
  v.kind = TomlValue::Kind::kString;
  v.line = c.line;
  ++c.i;  // opening quote
  while (true) {
    if (c.done()) throw ConfigError("unterminated string", c.line);
    char ch = c.s[c.i++];
    if (ch == '"') break;
    if (ch == '\\') {
      if (c.done()) throw ConfigError("unterminated string escape", c.line);
      char e = c.s[c.i++];
      switch (e) {
        case '"': v.str += '"'; break;
        case '\\': v.str += '\\'; break;
        case 'n': v.str += '\n'; break;
        case 't': v.str += '\t'; break;
        default:
          throw ConfigError(std::string("unsupported string escape \\") + e,
                            c.line);
      }
      continue;
    }
    v.str += ch;
  }
  return v;
}

TomlValue parse_number_or_bool(Cursor& c) {
  size_t start = c.i;
  while (!c.done() && c.peek() != ',' && c.peek() != ']' && c.peek() != '#' &&
         c.peek() != ' ' && c.peek() != '\t')
    ++c.i;
  std::string tok = c.s.substr(start, c.i - start);
  if (tok.empty()) throw ConfigError("expected a value", c.line);

  TomlValue v;
  v.line = c.line;
  if (tok == "true" || tok == "false") {
    v.kind = TomlValue::Kind::kBool;
    v.flag = (tok == "true");
    return v;
  }
  // Number: optional sign, digits, optional fraction / exponent. Reject
  // anything strtod would not consume completely.
  const char* begin = tok.c_str();
  char* end = nullptr;
  double d = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(d))
    throw ConfigError("malformed value '" + tok + "'", c.line);
  v.kind = TomlValue::Kind::kNumber;
  v.num = d;
  v.is_integer = tok.find_first_of(".eEnN") == std::string::npos;
  return v;
}

TomlValue parse_array(Cursor& c) {
  TomlValue v;
  v.kind = TomlValue::Kind::kArray;
  v.line = c.line;
  ++c.i;  // opening bracket
  c.skip_ws();
  if (!c.done() && c.peek() == ']') {
    ++c.i;
    return v;
  }
  while (true) {
    c.skip_ws();
    if (c.done() || c.peek() == '#')
      throw ConfigError("unterminated array", c.line);
    if (c.peek() == '[')
      throw ConfigError("nested arrays are not supported", c.line);
    v.items.push_back(parse_value(c));
    c.skip_ws();
    if (c.done() || c.peek() == '#')
      throw ConfigError("unterminated array", c.line);
    char ch = c.s[c.i++];
    if (ch == ']') break;
    if (ch != ',')
      throw ConfigError("expected ',' or ']' in array", c.line);
  }
  return v;
}

TomlValue parse_value(Cursor& c) {
  c.skip_ws();
  if (c.done()) throw ConfigError("expected a value", c.line);
  char ch = c.peek();
  if (ch == '"') return parse_string(c);
  if (ch == '[') return parse_array(c);
  return parse_number_or_bool(c);
}

}  // namespace

TomlDocument parse_toml(const std::string& text) {
  TomlDocument doc;
  TomlTable* target = &doc.root;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    Cursor c{raw, 0, line_no};
    c.skip_ws();
    if (c.done() || c.peek() == '#') continue;

    if (c.peek() == '[') {
      ++c.i;
      bool is_list = !c.done() && c.peek() == '[';
      if (is_list) ++c.i;
      c.skip_ws();
      std::string name = parse_bare_key(c);
      c.skip_ws();
      if (c.done() || c.s[c.i++] != ']')
        throw ConfigError("unterminated table header", line_no);
      if (is_list && (c.done() || c.s[c.i++] != ']'))
        throw ConfigError("unterminated table-list header", line_no);
      c.skip_ws();
      if (!c.done() && c.peek() != '#')
        throw ConfigError("trailing characters after table header", line_no);
      if (is_list) {
        doc.lists[name].push_back(TomlTable{{}, line_no});
        target = &doc.lists[name].back();
      } else {
        auto [it, fresh] = doc.sections.emplace(name, TomlTable{{}, line_no});
        if (!fresh)
          throw ConfigError("duplicate table [" + name + "]", line_no);
        target = &it->second;
      }
      continue;
    }

    std::string key = parse_bare_key(c);
    c.skip_ws();
    if (c.done() || c.s[c.i++] != '=')
      throw ConfigError("expected '=' after key '" + key + "'", line_no);
    TomlValue value = parse_value(c);
    value.line = line_no;
    c.skip_ws();
    if (!c.done() && c.peek() != '#')
      throw ConfigError("trailing characters after value", line_no);
    if (!target->values.emplace(key, std::move(value)).second)
      throw ConfigError("duplicate key '" + key + "'", line_no);
  }
  return doc;
}

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

namespace {

double require_number(const TomlValue& v, const std::string& key) {
  if (v.kind != TomlValue::Kind::kNumber)
    throw ConfigError("'" + key + "' must be a number", v.line);
  return v.num;
}

long require_integer(const TomlValue& v, const std::string& key) {
  if (v.kind != TomlValue::Kind::kNumber || !v.is_integer)
    throw ConfigError("'" + key + "' must be an integer", v.line);
  return static_cast<long>(v.num);
}

std::string require_string(const TomlValue& v, const std::string& key) {
  if (v.kind != TomlValue::Kind::kString)
    throw ConfigError("'" + key + "' must be a string", v.line);
  return v.str;
}

std::vector<double> number_list(const TomlValue& v, const std::string& key) {
  std::vector<double> out;
  if (v.kind == TomlValue::Kind::kNumber) {
    out.push_back(v.num);
    return out;
  }
  if (v.kind != TomlValue::Kind::kArray)
    throw ConfigError("'" + key + "' must be a number or array of numbers",
                      v.line);
  for (const TomlValue& item : v.items)
    out.push_back(require_number(item, key));
  return out;
}

}  // namespace

HopMode default_mode(Compromise c) {
  switch (c) {
    case Compromise::kSplit:
    case Compromise::kAdd:
      return HopMode::kUnder;
    default:
      return HopMode::kOver;
  }
}

ProfileCurve RunConfig::profile() const {
  return ProfileCurve::make(pieces, z_max);
}

RunConfig parse_run_config(const std::string& text) {
  TomlDocument doc = parse_toml(text);
  RunConfig cfg;
  cfg.raw_text = text;

  if (!doc.sections.empty()) {
    const auto& [name, table] = *doc.sections.begin();
    throw ConfigError("unknown table [" + name + "]", table.line);
  }
  for (const auto& [name, tables] : doc.lists) {
    if (name != "piece")
      throw ConfigError("unknown table list [[" + name + "]]",
                        tables.front().line);
  }

  auto pieces_it = doc.lists.find("piece");
  if (pieces_it == doc.lists.end() || pieces_it->second.empty())
    throw ConfigError("at least one [[piece]] table is required", 0);
  for (const TomlTable& t : pieces_it->second) {
    double breakpoint = 0.0;
    std::vector<double> coeffs;
    bool have_bp = false;
    for (const auto& [key, value] : t.values) {
      if (key == "breakpoint") {
        breakpoint = require_number(value, key);
        have_bp = true;
      } else if (key == "coeffs") {
        coeffs = number_list(value, key);
      } else {
        throw ConfigError("unknown [[piece]] key '" + key + "'", value.line);
      }
    }
    if (!have_bp)
      throw ConfigError("[[piece]] is missing 'breakpoint'", t.line);
    if (coeffs.empty())
      throw ConfigError("[[piece]] is missing 'coeffs'", t.line);
    cfg.pieces.push_back({breakpoint, Poly(coeffs)});
  }

  bool have_z_max = false;
  bool have_epsilon = false;
  std::optional<std::string> compromise_name;
  std::optional<std::string> mode_name;
  for (const auto& [key, value] : doc.root.values) {
    if (key == "z_max") {
      cfg.z_max = require_number(value, key);
      have_z_max = true;
    } else if (key == "epsilon") {
      cfg.epsilons = number_list(value, key);
      have_epsilon = true;
      for (double e : cfg.epsilons)
        if (!(e > 0.0))
          throw ConfigError("'epsilon' entries must be > 0", value.line);
      if (cfg.epsilons.empty())
        throw ConfigError("'epsilon' list must not be empty", value.line);
    } else if (key == "R") {
      cfg.R = require_number(value, key);
    } else if (key == "y_max") {
      cfg.y_max = require_number(value, key);
    } else if (key == "n_max") {
      long n = require_integer(value, key);
      if (n < 1) throw ConfigError("'n_max' must be >= 1", value.line);
      cfg.n_max = static_cast<int>(n);
    } else if (key == "seed") {
      long s = require_integer(value, key);
      if (s < 0) throw ConfigError("'seed' must be >= 0", value.line);
      cfg.seed = static_cast<unsigned>(s);
    } else if (key == "compromise") {
      compromise_name = require_string(value, key);
    } else if (key == "mode") {
      mode_name = require_string(value, key);
    } else if (key == "suites") {
      if (value.kind != TomlValue::Kind::kArray)
        throw ConfigError("'suites' must be an array of strings", value.line);
      std::vector<std::string> names;
      for (const TomlValue& item : value.items)
        names.push_back(require_string(item, key));
      cfg.suites = std::move(names);
    } else if (key == "archive") {
      cfg.archive = require_string(value, key);
    } else if (key == "window") {
      std::vector<double> w = number_list(value, key);
      if (w.size() != 2 || !(w[0] < w[1]))
        throw ConfigError("'window' must be [lo, hi] with lo < hi",
                          value.line);
      cfg.window = std::make_pair(w[0], w[1]);
    } else if (key == "grid") {
      std::vector<double> g = number_list(value, key);
      if (g.size() != 2 || g[0] < 2 || g[1] < 2)
        throw ConfigError("'grid' must be [n_z, n_phi] with entries >= 2",
                          value.line);
      cfg.grid_z = static_cast<int>(g[0]);
      cfg.grid_phi = static_cast<int>(g[1]);
    } else if (key == "out") {
      cfg.out_dir = require_string(value, key);
    } else {
      throw ConfigError("unknown key '" + key + "'", value.line);
    }
  }

  if (!have_z_max) throw ConfigError("'z_max' is required", 0);
  if (!have_epsilon) throw ConfigError("'epsilon' is required", 0);
  if (cfg.pieces.back().z_left >= cfg.z_max)
    throw ConfigError("'z_max' must lie right of the last breakpoint", 0);

  if (compromise_name) {
    const std::string& s = *compromise_name;
    if (s == "none")
      cfg.compromise = Compromise::kNone;
    else if (s == "merge" || s == "split" || s == "remove" || s == "add")
      cfg.compromise = compromise_from_string(s);
    else
      throw ConfigError(
          "'compromise' must be one of merge, split, remove, add, none", 0);
  }
  if (mode_name) {
    const std::string& s = *mode_name;
    if (s != "over" && s != "under")
      throw ConfigError("'mode' must be 'over' or 'under'", 0);
    cfg.mode = hop_mode_from_string(s);
    cfg.mode_given = true;
  } else {
    cfg.mode = default_mode(cfg.compromise);
  }
  // Merge and remove lattices only carry the over-hop family, split and add
  // only the under family; reject the configurations that cannot execute.
  if (cfg.mode_given && cfg.compromise != Compromise::kNone &&
      cfg.mode != default_mode(cfg.compromise)) {
    throw ConfigError(std::string("compromise '") +
                          to_string(cfg.compromise) +
                          "' does not support mode '" + to_string(cfg.mode) +
                          "'",
                      0);
  }

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'", 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace ncsr
