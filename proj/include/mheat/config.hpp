#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mheat/diffusion.hpp"

namespace mheat {

enum class ExperimentKind { simulate, gradient, kato, coupling, bochner, schrodinger, report_all };

const char* to_string(ExperimentKind k);
/// Throws ConfigError for unknown names.
ExperimentKind parse_experiment_kind(const std::string& name);

struct ManifoldSpec {
  std::string kind = "euclidean";  // euclidean | sphere | hyperbolic | model
  int dim = 2;
  double radius = 1.0;             // sphere
  double scale = 1.0;              // hyperbolic, and the sinh/sin profiles
  std::string psi = "linear";      // model: linear | sinh | sin | power
  double psi_coefficient = 1.0;    // power: c r^a
  double psi_exponent = 1.0;
  std::string weight = "none";     // none | quadratic
  double weight_strength = 1.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::simulate;
  std::optional<std::vector<double>> point;
  std::optional<std::vector<double>> point_y;  // coupling partner
  std::string function = "auto";  // auto | sine | gaussian | tanh | bump | linear | exp_linear
  /// Constant curvature bound / potential level; the model's own bound
  /// when unset.
  std::optional<double> k;
  std::string potential = "constant";  // constant | indicator | inverse_radius
  double delta = 2.0;
  double p = 2.0;
  std::vector<double> times;  // kato grid and L^p times; derived from T when empty
};

struct NumericSpec {
  double dt = 1e-3;
  double horizon = 1.0;
  std::int64_t paths = 10000;
  std::uint64_t seed = 0;
  int anchors = 8;
  int pairs = 200;  // coupled pairs
  int grid = 9;     // points per axis for grid checks
  double h = 1e-3;  // stencil and finite-difference step
  int workers = 0;  // 0: MANIFOLD_HEAT_WORKERS or 1
};

struct OutputSpec {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  ManifoldSpec manifold;
  ExperimentSpec experiment;
  NumericSpec numeric;
  OutputSpec output;

  SimConfig sim() const;
};

/// Parses the line-based `key = value` format with [manifold], [experiment],
/// [numeric] and [output] sections. '#' starts a comment. Unknown sections
/// and keys, duplicates and malformed values are errors carrying the line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Checks cross-field constraints (dimension limits, dt ≤ T, ...).
void validate(const ExperimentConfig& cfg);

/// Canonical text of the config (the worker count is not part of it).
std::string canonical_text(const ExperimentConfig& cfg);
/// FNV-1a 64-bit hash of the manifold, experiment and numeric sections of
/// the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace mheat
