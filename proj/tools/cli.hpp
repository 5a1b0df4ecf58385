#pragma once

// Experiment runner: config parsing (line-oriented key = value with [section]
// headers), dispatch to the library, atomic CSV/JSON emission, and run
// manifests.  Flags override file values; exit codes: 0 ok, 2 config,
// 3 resonance, 4 numerical, 5 I/O.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sto::cli {

struct ConfigError {
  std::string message;
  int line = 0;
};

/// Parsed configuration: section -> key -> value (verbatim strings).
class Config {
public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text, const std::string& origin = "<inline>");

  void set(const std::string& section, const std::string& key, const std::string& value);
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const;
  std::vector<int> get_int_list(const std::string& section, const std::string& key,
                                const std::vector<int>& fallback) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections() const {
    return sections_;
  }

private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Validated experiment description.
struct ExperimentConfig {
  std::string kind;  // design-dump | dn-spectrum | cloak-converge | quantum-converge |
                     // trapped-scan | rays | wormhole-rays
  Config raw;
  std::string out_path;
  int threads = 1;
  double tol = 1e-10;
  unsigned seed = 20260808u;
};

/// Range/precondition validation; throws sto::ParameterError with a message
/// naming the violated constraint.
void validate_config(const ExperimentConfig& cfg);

/// Dry-run diagnostics (schema + precondition warnings); returns human-readable
/// lines, throws on hard errors.
std::vector<std::string> validate_report(const ExperimentConfig& cfg);

/// Run the experiment, write data file(s) + manifest; returns the list of
/// files written.
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

/// Map an in-flight exception to the documented exit code.
int exit_code_for_current_exception();

inline constexpr const char* kVersion = "0.1.0";

}  // namespace sto::cli
