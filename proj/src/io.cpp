#include "hetrx/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "hetrx/errors.hpp"

namespace hetrx::io {

std::string fmt(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

Table::Table(std::string kind_, std::vector<std::string> columns_)
    : kind(std::move(kind_)), columns(std::move(columns_)) {}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw Error("CSV row width differs from the header");
  rows.push_back(std::move(row));
}

void write(std::ostream& out, const Table& t) {
  out << "# schema=hetrx." << t.kind << ".v1\n";
  for (const auto& [k, v] : t.meta) out << "# " << k << '=' << v << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
}

void write_file(const std::string& path, const Table& t) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  write(f, t);
  if (!f) throw Error("write failed for " + path);
}

Table cir_table(const CirSeries& s) {
  Table t("cir", {"time_s", "hitting_rate_per_s", "cumulative_fraction"});
  t.meta = s.metadata;
  t.meta["model"] = s.model;
  t.meta["provenance"] = s.provenance == Provenance::analytic ? "analytic" : "simulated";
  t.meta["asymptote"] = fmt(s.asymptote);
  t.meta["accurate"] = s.accurate ? "true" : "false";
  if (s.truncation > 0) t.meta["truncation"] = std::to_string(s.truncation);
  if (s.seed) t.meta["seed"] = std::to_string(*s.seed);
  for (std::size_t i = 0; i < s.time.size(); ++i) {
    t.add({fmt(s.time[i]), fmt(s.rate[i]), fmt(s.cumulative[i])});
  }
  return t;
}

Table hits_table(const SimResult& r) {
  Table t("hits", {"absorption_time_s", "patch_index", "realization", "x_um", "y_um", "z_um"});
  t.meta["realizations"] = std::to_string(r.realizations);
  t.meta["molecules_per_realization"] = std::to_string(r.molecules_per_realization);
  if (r.cir.seed) t.meta["seed"] = std::to_string(*r.cir.seed);
  for (const HitRecord& h : r.hits) {
    t.add({fmt(h.time), std::to_string(h.patch), std::to_string(h.realization), fmt(h.x),
           fmt(h.y), fmt(h.z)});
  }
  return t;
}

Table release_table(const SimResult& r) {
  Table t("release", {"release_time_s"});
  if (r.cir.seed) t.meta["seed"] = std::to_string(*r.cir.seed);
  for (double x : r.release_times) t.add({fmt(x)});
  return t;
}

}  // namespace hetrx::io
