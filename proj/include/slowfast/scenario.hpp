#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slowfast/manifold.hpp"
#include "slowfast/model.hpp"
#include "slowfast/nonlinearity.hpp"

namespace slowfast {

enum class ReducedInit { Tracking, Slow };

struct SimulateOptions {
  double horizon = 5.0;
  ReducedInit reduced_init = ReducedInit::Tracking;
};

struct FilterOptions {
  int particles = 2000;
  int coarsen = 5;
  double p = 3.0;
  int dictionary_size = 16;
  double dictionary_scale = 1.0;
  std::vector<double> times{1.0};
  int martingale_paths = 1000;
  int martingale_samples = 10000;
};

struct RunOptions {
  std::uint64_t seed = 20240601;
  int replications = 20;
  std::string output_dir = "out";
};

struct ScenarioConfig {
  SystemModel model;  // at scales.epsilon
  ObservationModel observation;
  std::vector<double> epsilon_list;
  double x0_amplitude = 1.0;
  double y0_amplitude = 1.0;
  bool gamma1_auto = true;
  bool mu_auto = true;
  ManifoldOptions manifold;
  TrackingOptions tracking;
  SimulateOptions simulate;
  FilterOptions filter;
  RunOptions run;
  std::string source;  // text the config was parsed from

  // amplitude / k on mode k, in both coordinates of a 2x2 block.
  Eigen::VectorXd initial_x() const;
  Eigen::VectorXd initial_y() const;
};

// Strict parse: unknown keys, missing required fields and bad values raise
// ParseError carrying the field path and line.
ScenarioConfig parse_scenario(const std::string& yaml_text);
ScenarioConfig load_scenario(const std::string& path);

// The damped-wave / heat system with h = sin of displacements.
ScenarioConfig thermoelastic_scenario();
std::string thermoelastic_yaml();

// FNV-1a 64 of the config text.
std::uint64_t config_hash(const std::string& text);

}  // namespace slowfast
