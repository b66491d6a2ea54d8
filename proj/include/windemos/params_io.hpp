#pragma once

#include <optional>
#include <string>
#include <vector>

#include "windemos/estimation.hpp"
#include "windemos/sectors.hpp"

namespace windemos {

/// Correlation fit report on disk: flat key-value lines plus one line per
/// sector residual, versioned.
struct CorrelationFile {
  CorrelationModel model;
  double weighted_rss = 0.0;
  bool phi_identified = true;
  std::optional<double> sector1_corr;  // empirical low-wind correlation
};

void write_correlation_file(const std::string& path, const CorrelationFit& fit,
                            std::optional<double> sector1_corr = {});
void write_correlation_file(const std::string& path, const CorrelationFile& file);
CorrelationFile load_correlation_file(const std::string& path);

/// One trained parameter set, as persisted between CLI runs.
struct ParameterRecord {
  EmosParameters params;
  bool fallback_regional = false;  // Local shortfall substituted by Regional
};

void write_params_file(const std::string& path, const std::vector<ParameterRecord>& records);
std::vector<ParameterRecord> load_params_file(const std::string& path);

}  // namespace windemos
