#include "finsler/report.hpp"
#include "finsler/types.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

using namespace finsler;

namespace {

std::vector<ReportRecord> sample_records() {
  return {
      {"demo", "volume entropy", 0.99876543210987654, 0.0123, Status::Pass, Provenance::Fit,
       "isoperimetric inequality m+(E) >= VE m(E)", ""},
      {"demo", "kappa", 9.0, 0.0, Status::Info, Provenance::ClosedForm, "", "sampled, \"quoted\", comma"},
      {"demo", "lambda1 R=10", 1.0 / 3.0, 1e-17, Status::Fail, Provenance::Quadrature, "monotone exhaustion",
       "worst at (0.5,\n1)"},
      {"demo", "unbounded", std::numeric_limits<double>::infinity(), 0.0, Status::Info, Provenance::ClosedForm, "", ""},
  };
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_CASE("round12 keeps 12 significant digits") {
  CHECK(round12(0.123456789012345) == 0.123456789012);
  CHECK(round12(-98765.4321098765432) == -98765.4321099);
  CHECK(round12(0.0) == 0.0);
  CHECK(std::isinf(round12(std::numeric_limits<double>::infinity())));
}

TEST_CASE("JSON emit then parse returns the normalized records") {
  auto recs = sample_records();
  auto back = parse_json(to_json(recs));
  CHECK(back == normalized(recs));
  CHECK(to_json(back) == to_json(recs));
}

TEST_CASE("JSON carries the schema name and version") {
  std::string js = to_json(sample_records());
  CHECK(js.find("\"schema\"") != std::string::npos);
  CHECK(js.find("finsler-lab-report") != std::string::npos);
  CHECK(js.find("\"version\"") != std::string::npos);
}

TEST_CASE("CSV has the fixed header and quotes awkward fields") {
  std::string csv = to_csv(sample_records());
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == kCsvHeader);
  CHECK(csv.find("\"sampled, \"\"quoted\"\", comma\"") != std::string::npos);
  CHECK(csv.find(",pass,") != std::string::npos);
}

TEST_CASE("empty reports are refused") {
  CHECK(code_of([] { to_json({}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { to_csv({}); }) == ErrorCode::EmptyInput);
}

TEST_CASE("malformed JSON is a parse error") {
  CHECK(code_of([] { parse_json("{not json"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_json(R"({"schema":"other","version":1,"records":[]})"); }) == ErrorCode::ParseError);
}

TEST_CASE("emit_report writes the file and fails cleanly when the directory cannot exist") {
  auto dir = std::filesystem::temp_directory_path() / "finsler-lab-report-test";
  std::filesystem::create_directories(dir);
  auto path = emit_report(sample_records(), ReportFormat::Json, dir, "demo-run");
  CHECK(path.filename() == "demo-run.json");
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(parse_json(ss.str()) == normalized(sample_records()));
  CHECK(code_of([&] { emit_report(sample_records(), ReportFormat::Csv, path / "under-a-file", "x"); }) ==
        ErrorCode::IoFailure);
  std::filesystem::remove_all(dir);
}

TEST_CASE("all_asserted_pass ignores info records") {
  auto recs = sample_records();
  CHECK_FALSE(all_asserted_pass(recs));
  recs[2].status = Status::Info;
  CHECK(all_asserted_pass(recs));
}
