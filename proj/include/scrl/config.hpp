#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace scrl::config {

// Invalid configuration input: unknown key, malformed value, unreadable file.
// Callers map this to the invalid-input exit code.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_commas(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream iss(value);
  while (std::getline(iss, item, ',')) out.push_back(trim(item));
  if (!value.empty() && value.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

// Plain-text config: one `key = value` per line, keys dotted by module,
// values taken verbatim up to end of line.  Blank lines and lines starting
// with '#' are skipped.  The echo written into every run directory is in
// this same format, so a run can be reproduced with `--config <run>/config.txt`.
inline KeyValues parse_config_stream(std::istream& in,
                                     const std::string& source = "<stream>") {
  KeyValues out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + stripped + "'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": empty key");
    if (out.count(key))
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

inline KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config_stream(in, path);
}

// A command's configuration after layering command-line overrides on top of
// file values on top of built-in defaults.  The schema is the default map:
// a key outside it is rejected no matter which layer supplies it.
class Resolved {
 public:
  Resolved(std::string command, KeyValues defaults)
      : command_(std::move(command)), values_(std::move(defaults)) {}

  void apply(const KeyValues& layer, const std::string& origin) {
    for (const auto& [key, value] : layer) {
      const auto it = values_.find(key);
      if (it == values_.end())
        throw ConfigError(origin + ": unknown key '" + key +
                          "' for command '" + command_ + "'");
      it->second = value;
    }
  }

  const std::string& command() const { return command_; }
  const KeyValues& values() const { return values_; }

  const std::string& get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("no such config key '" + key + "' for command '" +
                        command_ + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
  }

  long get_long(const std::string& key) const {
    return parse_long(key, get_string(key));
  }

  int get_int(const std::string& key) const {
    const long v = get_long(key);
    if (v < INT_MIN_ || v > INT_MAX_)
      throw ConfigError("config key '" + key + "' out of int range: " +
                        get_string(key));
    return static_cast<int>(v);
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string& value = get_string(key);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key +
                        "' expects a non-negative integer, got '" + value +
                        "'");
    }
  }

  bool get_bool(const std::string& key) const {
    const std::string& value = get_string(key);
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key +
                      "' expects true/false, got '" + value + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : detail::split_commas(get_string(key)))
      out.push_back(parse_double(key, tok));
    return out;
  }

  std::vector<int> get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& tok : detail::split_commas(get_string(key))) {
      const long v = parse_long(key, tok);
      if (v < INT_MIN_ || v > INT_MAX_)
        throw ConfigError("config key '" + key + "' out of int range: " + tok);
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key) const {
    std::vector<std::uint64_t> out;
    for (const auto& tok : detail::split_commas(get_string(key))) {
      try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        out.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key +
                          "' expects non-negative integers, got '" + tok +
                          "'");
      }
    }
    return out;
  }

  std::vector<std::string> get_string_list(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& tok : detail::split_commas(get_string(key)))
      if (!tok.empty()) out.push_back(tok);
    return out;
  }

  // Canonical form: sorted `key = value` lines.  This is what gets hashed
  // and what the run directory's config.txt contains.
  void echo(std::ostream& os) const {
    for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
  }

  std::string echo_string() const {
    std::ostringstream os;
    echo(os);
    return os.str();
  }

  // FNV-1a over the canonical echo, as 16 hex digits.  Two runs with equal
  // hashes saw byte-identical resolved configurations.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : echo_string()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h;
    return os.str();
  }

 private:
  static double parse_double(const std::string& key, const std::string& tok) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects a number, got '" +
                        tok + "'");
    }
  }

  static long parse_long(const std::string& key, const std::string& tok) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' expects an integer, got '" +
                        tok + "'");
    }
  }

  static constexpr long INT_MIN_ = -2147483648L;
  static constexpr long INT_MAX_ = 2147483647L;

  std::string command_;
  KeyValues values_;
};

// Where run directories go when --out is not given: $SCRL_RUN_ROOT if set,
// ./runs otherwise.  The one environment variable in the tool; experiment
// parameters never come from the environment.
inline std::string run_root() {
  if (const char* root = std::getenv("SCRL_RUN_ROOT")) return root;
  return "runs";
}

// Creates and returns the run directory.  An explicit path wins unchanged;
// otherwise the directory is named <command>-<hash prefix>-<UTC timestamp>
// under the run root, with a numeric suffix if that name is already taken.
inline std::string make_run_dir(const std::string& explicit_out,
                                const std::string& command,
                                const std::string& config_hash) {
  namespace fs = std::filesystem;
  if (!explicit_out.empty()) {
    fs::create_directories(explicit_out);
    return explicit_out;
  }
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream stamp;
  stamp << std::put_time(&utc, "%Y%m%d-%H%M%S");
  const std::string base = command + "-" + config_hash.substr(0, 8) + "-" +
                           stamp.str();
  fs::path dir = fs::path(run_root()) / base;
  for (int k = 1; fs::exists(dir); ++k)
    dir = fs::path(run_root()) / (base + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir.string();
}

inline void write_config_echo(const std::string& run_dir,
                              const Resolved& resolved) {
  std::ofstream os(std::filesystem::path(run_dir) / "config.txt");
  resolved.echo(os);
}

}  // namespace scrl::config
