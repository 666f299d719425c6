#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iwmev/baselines.hpp"
#include "iwmev/config.hpp"
#include "iwmev/markov_model.hpp"
#include "iwmev/vehicle_sdp.hpp"

namespace iwmev {

/// 64-bit FNV-1a hash, rendered as 16 hex digits by checksum_hex.
std::uint64_t fnv1a64(const std::string& bytes);
std::string checksum_hex(const std::string& bytes);

struct TpmArtifact {
  Tpm tpm;
  std::vector<double> p_grid;
  double dt_sdp = 0.0;
  std::vector<std::string> sources;
  std::string checksum;  // of tpm.csv
};

/// Writes <dir>/tpm.csv (one row per source level) and <dir>/tpm.json.
void write_tpm(const std::string& dir, const Tpm& tpm, const std::vector<double>& p_grid, double dt_sdp,
               const std::vector<std::string>& sources);

/// Reads a TPM artifact. Throws MissingArtifact when absent, ChecksumMismatch
/// when the CSV does not match its sidecar, GridMismatch when the recorded
/// demand grid or dt differs from the expected ones.
TpmArtifact read_tpm(const std::string& dir, const std::vector<double>& expected_p_grid,
                     double expected_dt);

struct PolicyArtifact {
  Policy policy;
  std::string tpm_checksum;
  std::string checksum;
};

void write_policy(const std::string& dir, const TrainResult& trained, const SdpSettings& settings,
                  const SkidConfig& skid, const std::string& tpm_checksum);

/// Throws MissingArtifact, ChecksumMismatch, or GridMismatch (against
/// `expected_grid`).
PolicyArtifact read_policy(const std::string& dir, const StateGrid& expected_grid);

void write_rule(const std::string& path, const GrdpFit& fit, const std::string& source);
LinearRule read_rule(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace iwmev
