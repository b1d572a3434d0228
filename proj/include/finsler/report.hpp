#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace finsler {

enum class Status { Pass, Fail, Info };
enum class Provenance { ClosedForm, Quadrature, Fit };
enum class ReportFormat { Csv, Json };

std::string_view to_string(Status s);
std::string_view to_string(Provenance p);

// One quantity of a scenario run. Info records are reported but not
// asserted (e.g. conclusions whose curvature hypothesis was not certified).
struct ReportRecord {
  std::string scenario;
  std::string quantity;
  double value = 0.0;
  double error_bar = 0.0;
  Status status = Status::Info;
  Provenance provenance = Provenance::Quadrature;
  std::string anchor;   // statement the assertion checks
  std::string witness;  // required on failures

  bool operator==(const ReportRecord&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;
// CSV header, in column order.
inline constexpr std::string_view kCsvHeader = "scenario,quantity,value,error_bar,status,provenance,anchor,witness";

// Values rounded to the 12 significant digits used on output.
double round12(double v);
std::vector<ReportRecord> normalized(std::vector<ReportRecord> records);

// EmptyInput on an empty list.
std::string to_csv(const std::vector<ReportRecord>& records);
std::string to_json(const std::vector<ReportRecord>& records);
// ParseError on malformed text or a schema mismatch.
std::vector<ReportRecord> parse_json(std::string_view text);

// Writes <dir>/<stem>.csv or .json and returns the path; IoFailure when the
// file cannot be written.
std::filesystem::path emit_report(const std::vector<ReportRecord>& records, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& stem);

// Every non-Info record passed.
bool all_asserted_pass(const std::vector<ReportRecord>& records);

}  // namespace finsler
