#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rtt::cli {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "RTT_OUT_DIR";

/// One metric of a run, serialized as experiment,parameters,metric,value,fitted.
struct ReportRow {
  std::string experiment;
  std::string parameters;  // "key=value;key=value"
  std::string metric;
  double value = 0.0;
  bool fitted = false;
};

std::string report_csv(const std::vector<ReportRow>& rows);

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kCheckFailed = 1;  // a tolerance given on the command line was exceeded
inline constexpr int kInvalidConfig = 2;
inline constexpr int kIoError = 3;

/// Parse args (args[0] is the program name) and run one subcommand.
/// Artifacts go to <out>/<command>.csv, <out>/<command>_summary.csv and, with --plot,
/// <out>/<command>.dat.  Human-readable progress goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rtt::cli
