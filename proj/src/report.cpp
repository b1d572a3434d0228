#include "finsler/report.hpp"

#include "finsler/types.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace finsler {

namespace {

using nlohmann::ordered_json;

std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

ordered_json json_number(double v) {
  if (std::isfinite(v)) return round12(v);
  return fmt12(v);
}

double number_from_json(const ordered_json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(ErrorCode::ParseError, "expected a number");
}

Status status_from(std::string_view s) {
  if (s == "pass") return Status::Pass;
  if (s == "fail") return Status::Fail;
  if (s == "info") return Status::Info;
  throw Error(ErrorCode::ParseError, "unknown status '" + std::string(s) + "'");
}

Provenance provenance_from(std::string_view s) {
  if (s == "closed-form") return Provenance::ClosedForm;
  if (s == "quadrature") return Provenance::Quadrature;
  if (s == "fit") return Provenance::Fit;
  throw Error(ErrorCode::ParseError, "unknown provenance '" + std::string(s) + "'");
}

void require_records(const std::vector<ReportRecord>& records) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "refusing to emit an empty report");
}

}  // namespace

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Info: return "info";
  }
  return "info";
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::ClosedForm: return "closed-form";
    case Provenance::Quadrature: return "quadrature";
    case Provenance::Fit: return "fit";
  }
  return "quadrature";
}

double round12(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(fmt12(v).c_str(), nullptr);
}

std::vector<ReportRecord> normalized(std::vector<ReportRecord> records) {
  for (ReportRecord& r : records) {
    r.value = round12(r.value);
    r.error_bar = round12(r.error_bar);
  }
  return records;
}

std::string to_csv(const std::vector<ReportRecord>& records) {
  require_records(records);
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const ReportRecord& r : records)
    os << csv_field(r.scenario) << ',' << csv_field(r.quantity) << ',' << fmt12(r.value) << ',' << fmt12(r.error_bar)
       << ',' << to_string(r.status) << ',' << to_string(r.provenance) << ',' << csv_field(r.anchor) << ','
       << csv_field(r.witness) << '\n';
  return os.str();
}

std::string to_json(const std::vector<ReportRecord>& records) {
  require_records(records);
  ordered_json doc;
  doc["schema"] = "finsler-lab-report";
  doc["version"] = kReportSchemaVersion;
  ordered_json list = ordered_json::array();
  for (const ReportRecord& r : records) {
    ordered_json j;
    j["scenario"] = r.scenario;
    j["quantity"] = r.quantity;
    j["value"] = json_number(r.value);
    j["error_bar"] = json_number(r.error_bar);
    j["status"] = to_string(r.status);
    j["provenance"] = to_string(r.provenance);
    j["anchor"] = r.anchor;
    j["witness"] = r.witness;
    list.push_back(std::move(j));
  }
  doc["records"] = std::move(list);
  return doc.dump(2) + "\n";
}

std::vector<ReportRecord> parse_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!doc.is_object() || doc.value("schema", "") != "finsler-lab-report")
    throw Error(ErrorCode::ParseError, "not a finsler-lab report");
  if (doc.value("version", 0) != kReportSchemaVersion)
    throw Error(ErrorCode::ParseError, "unsupported report version");
  std::vector<ReportRecord> out;
  try {
    for (const ordered_json& j : doc.at("records")) {
      ReportRecord r;
      r.scenario = j.at("scenario").get<std::string>();
      r.quantity = j.at("quantity").get<std::string>();
      r.value = number_from_json(j.at("value"));
      r.error_bar = number_from_json(j.at("error_bar"));
      r.status = status_from(j.at("status").get<std::string>());
      r.provenance = provenance_from(j.at("provenance").get<std::string>());
      r.anchor = j.at("anchor").get<std::string>();
      r.witness = j.at("witness").get<std::string>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return out;
}

std::filesystem::path emit_report(const std::vector<ReportRecord>& records, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& stem) {
  const std::string body = format == ReportFormat::Csv ? to_csv(records) : to_json(records);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::filesystem::path path = dir / (stem + (format == ReportFormat::Csv ? ".csv" : ".json"));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  out << body;
  if (!out.flush()) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  return path;
}

bool all_asserted_pass(const std::vector<ReportRecord>& records) {
  for (const ReportRecord& r : records)
    if (r.status == Status::Fail) return false;
  return true;
}

}  // namespace finsler
