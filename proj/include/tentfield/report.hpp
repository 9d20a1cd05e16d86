#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tentfield/bumps.hpp"
#include "tentfield/check.hpp"

namespace tentfield {

// CSV table meant for direct plotting.
struct Table {
  using Cell = std::variant<double, long long, std::string>;

  Table(std::string name, std::vector<std::string> columns)
      : name(std::move(name)), columns(std::move(columns)) {}

  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  std::string csv() const;
};

enum class Status { Pass, Fail, Constant };

struct ReportEntry {
  std::string name;
  Status status = Status::Pass;
  nlohmann::json value;  // measured constant or summary numbers
  std::string detail;
};

struct Report {
  std::string command;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<ReportEntry> checks;
  std::vector<Table> tables;
  nlohmann::json artifacts = nlohmann::json::object();

  void pass(const std::string& name, nlohmann::json value = {}, std::string detail = {});
  void fail(const std::string& name, nlohmann::json value = {}, std::string detail = {});
  void check(const std::string& name, bool ok, nlohmann::json value = {}, std::string detail = {});
  void constant(const std::string& name, double value, std::string detail = {});
  void add(const CheckResult& r);
  void merge(const Report& other);

  const ReportEntry* find(const std::string& name) const;
  bool passed() const;
  int exit_code() const { return passed() ? 0 : 1; }
  nlohmann::json to_json() const;

  // report.json plus one <table>.csv per table; file names are prefixed with the command
  std::vector<std::string> write(const std::string& dir) const;
};

const char* to_string(Status s);

// Binary field container: 8 byte magic "TFFIELD1", little-endian uint64 header
// length, UTF-8 JSON header, then beta-major complex128 values (re, im).
void save_field(const std::string& path, const Field& F, const nlohmann::json& extra = {});
Field load_field(const std::string& path, nlohmann::json* header = nullptr);

}  // namespace tentfield
