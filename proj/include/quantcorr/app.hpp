#pragma once

#include <iosfwd>
#include <string>

#include "quantcorr/config.hpp"

namespace quantcorr {

inline constexpr const char* kVersion = "0.1.0";

// Runs the two-step analysis for every tau and writes, into
// config.output_dir:
//   step1_coefficients.csv / .txt   quantile regression coefficients
//   step2_coefficients.csv / .txt   multinomial coefficients vs "00"
//   phi_profile_<covariate>.csv     long-format phi-hat per profile
//   run_metadata.json               seeds, drop counts, failures, flags
// Files are staged and moved into place only when every step succeeded.
// Throws on failure.
void run_analysis(const RunConfig& config, std::ostream& log);

// Exit-code wrapper around run_analysis: 0 on success, 1 with a diagnostic
// on `err` otherwise.
int analyze(const RunConfig& config, std::ostream& log, std::ostream& err);

// Writes the generated dataset to `csv_path` and the oracle phi values to
// the sidecar returned by oracle_sidecar_path.
void run_synth(const ScenarioSpec& scenario, const std::string& csv_path);
int synth(const ScenarioSpec& scenario, const std::string& csv_path, std::ostream& err);

std::string oracle_sidecar_path(const std::string& csv_path);

}  // namespace quantcorr
