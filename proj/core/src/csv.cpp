#include "retrylock/csv.hpp"

#include <cstdio>

namespace retrylock {

namespace {

void append_cell(std::string& out, const std::optional<double>& v) {
  out += ',';
  if (!v) {
    out += "NA";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", *v);
  out += buf;
}

}  // namespace

std::string format_csv_row(const CsvRow& row) {
  std::string out = row.scenario;
  out += ',';
  out += row.scheme;
  append_cell(out, row.spin_count);
  append_cell(out, row.threads_or_lambda);
  append_cell(out, row.rho);
  append_cell(out, row.k);
  append_cell(out, row.kappa);
  append_cell(out, row.gamma);
  append_cell(out, row.w);
  append_cell(out, row.w_o);
  append_cell(out, row.w_bar_o);
  append_cell(out, row.throughput);
  append_cell(out, row.cpu_s);
  out += ',';
  out += row.source;
  return out;
}

}  // namespace retrylock
