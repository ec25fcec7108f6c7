#pragma once

#include <optional>
#include <string>

namespace retrylock {

// The one CSV schema every command emits. Absent values are the literal NA.
inline constexpr const char* kCsvHeader =
    "scenario,scheme,spin_count,threads_or_lambda,rho,k,kappa,gamma,W,W_o,"
    "w_bar_o,throughput,cpu_s,source";

struct CsvRow {
  std::string scenario;
  std::string scheme;
  std::optional<double> spin_count;
  std::optional<double> threads_or_lambda;
  std::optional<double> rho;
  std::optional<double> k;
  std::optional<double> kappa;
  std::optional<double> gamma;
  std::optional<double> w;
  std::optional<double> w_o;
  std::optional<double> w_bar_o;
  std::optional<double> throughput;
  std::optional<double> cpu_s;
  std::string source;  // model | sim | bench
};

// No trailing newline; %.9g keeps reruns byte-identical.
std::string format_csv_row(const CsvRow& row);

}  // namespace retrylock
