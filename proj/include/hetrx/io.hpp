#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "hetrx/channel.hpp"
#include "hetrx/particle_sim.hpp"

namespace hetrx::io {

/// Shortest round-trip decimal form of a double.
std::string fmt(double v);

/// CSV with a leading "# schema=hetrx.<kind>.v1" line, then "# key=value"
/// metadata lines, a column header and data rows.
struct Table {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  Table(std::string kind_, std::vector<std::string> columns_);
  void add(std::vector<std::string> row);
};

void write(std::ostream& out, const Table& t);
void write_file(const std::string& path, const Table& t);

Table cir_table(const CirSeries& s);
Table hits_table(const SimResult& r);
/// Empirical release times, one row per fused vesicle.
Table release_table(const SimResult& r);

}  // namespace hetrx::io
