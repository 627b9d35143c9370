#pragma once

#include "pgfcs/info.hpp"
#include "pgfcs/markov.hpp"
#include "pgfcs/recovery.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pgfcs {

struct SweepConfig {
  std::string model_source = "builtin:aklt";
  int n_a = 1;
  int n_c = 1;
  int b_start = 2;
  int b_end = 10;
  int b_stride = 1;
  Engine engine = Engine::transfer;
  std::vector<TildeVariant> variants = {TildeVariant::canonical, TildeVariant::gram,
                                        TildeVariant::aligned};
  std::string out_path;  // empty: stdout
  std::string format = "csv";
  std::uint64_t seed = 0;
  bool strict = false;
  int threads = 0;  // 0: hardware
  Budget budget;
};

struct SweepRow {
  int n_b = 0;
  bool feasible = true;
  double qcmi = 0.0, qmi = 0.0;
  double qcmi_tilde = std::numeric_limits<double>::quiet_NaN();
  double iso_canonical = std::numeric_limits<double>::quiet_NaN();
  double iso_gram = std::numeric_limits<double>::quiet_NaN();
  double iso_aligned = std::numeric_limits<double>::quiet_NaN();
  double trace_error = std::numeric_limits<double>::quiet_NaN();
  double recovery_petz = std::numeric_limits<double>::quiet_NaN();
  double recovery_structural = std::numeric_limits<double>::quiet_NaN();
  double bound_trace = std::numeric_limits<double>::quiet_NaN();
  double bound_recovery = std::numeric_limits<double>::quiet_NaN();
  double bound_qcmi = std::numeric_limits<double>::quiet_NaN();
  double af_bound_full = std::numeric_limits<double>::quiet_NaN();
  double lower_bound_note = std::numeric_limits<double>::quiet_NaN();
  bool meaningful = false;
  std::string warning;
};

struct NamedFit {
  std::string name;
  DecayFit fit;
};

struct SweepResult {
  SweepConfig config;
  PgfcsModel model;
  std::vector<SweepRow> rows;
  DecayFit convergence;  // ||E^n - Etilde^n|| fit; q = ln(1/nu)/2
  double q = 0.0;
  double nu_gap = 0.0;
  std::vector<NamedFit> fits;  // decay-rate fits of the measured columns
  std::vector<std::string> violations;
};

SweepResult run_sweep(const SweepConfig& cfg);
std::string sweep_csv(const SweepResult& r);
std::string sweep_json(const SweepResult& r);

// Text reports for the other subcommands.
std::string spectrum_report(const PgfcsModel& m);
std::string decompose_report(const PgfcsModel& m, bool merge_equivalent = false);
std::string recover_report(const PgfcsModel& m, const Tripartition& part, const Budget& budget);
std::string recover_report_disconnected(const PgfcsModel& m, const DisconnectedParts& parts,
                                        const Budget& budget);
std::string export_mps_json(const PgfcsModel& m);

// Printing helper used everywhere numbers are emitted (12 significant digits,
// locale independent, empty string for NaN).
std::string format_number(double v);

}  // namespace pgfcs
