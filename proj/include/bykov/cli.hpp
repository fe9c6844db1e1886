#pragma once

// Command-line surface: configuration, validation, dispatch and the CSV/JSON
// writers used by the `bykov` executable and the acceptance suite.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bykov/orbit.hpp"
#include "bykov/resonance.hpp"

namespace bykov::cli {

/// One configurable key of a subcommand.
struct KeySpec {
  std::string name;
  std::string fallback;  // empty means no default
  std::string help;
  bool required = false;
};

/// Raw bindings are kept as text until validate() normalises them; `values`
/// holds the merged config-file and flag bindings (flags win).
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;
  std::string out;  // empty: stdout
  std::string format;
  unsigned threads = 0;
  std::uint64_t seed = 0;
  bool gnuplot_hint = false;
  std::vector<std::string> warnings;
  bool validated = false;
};

const std::vector<std::string>& subcommands();
const std::string& describe(const std::string& subcommand);

/// Subcommand-specific keys followed by the shared ones (out, threads, seed).
std::vector<KeySpec> keys_for(const std::string& subcommand);

/// key=value lines; '#' starts a comment; blank lines ignored. Keys may be
/// written with or without a leading "--". Throws InvalidArgument with the
/// offending line number.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Fills defaults, rejects unknown keys and violated invariants, and records
/// warnings. Throws InvalidArgument naming the problem.
RunConfig validate(RunConfig config);

/// Dispatches a validated config; returns the process exit status. Failures
/// are written to `err` as a one-line JSON error record.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

/// One-line JSON error record {"error":{"kind":...,"message":...}}.
void write_error_record(std::ostream& err, const std::string& kind, const std::string& message);

/// Closed interval "a:b" or a single value "a" (min = max).
struct Range {
  double min = 0.0;
  double max = 0.0;
  bool is_range() const { return max != min; }
};

double parse_double(const std::string& key, const std::string& text);
long parse_int(const std::string& key, const std::string& text);
Range parse_range(const std::string& key, const std::string& text);
std::vector<long> parse_int_list(const std::string& key, const std::string& text);
std::vector<double> parse_double_list(const std::string& key, const std::string& text);

/// Shortest form is not used: every number is written with 17 significant
/// digits; non-finite values become nan / inf / -inf.
std::string format_double(double v);

void write_grid_csv(const ScanGrid& grid, std::size_t exponent_columns, std::ostream& os);
void write_surfaces_csv(const std::vector<SurfaceSample>& samples, std::ostream& os);
void write_trace_csv(const std::vector<ManifoldTrace>& traces, std::ostream& os);

/// Minimal JSON emitter with fixed 17-digit numbers (null for non-finite).
class JsonWriter {
 public:
  explicit JsonWriter(std::ostream& os) : os_(os) {}
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(int v);
  JsonWriter& value(long v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  template <class T>
  JsonWriter& field(const std::string& k, const T& v) {
    key(k);
    return value(v);
  }
  void finish();

 private:
  void separator();
  std::ostream& os_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

std::string gnuplot_hint(const RunConfig& config);

}  // namespace bykov::cli
