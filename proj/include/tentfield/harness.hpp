#pragma once

#include <random>
#include <string>
#include <vector>

#include "tentfield/config.hpp"
#include "tentfield/report.hpp"
#include "tentfield/selection.hpp"

namespace tentfield {

// Experiment drivers.  Each is deterministic for a fixed config (seed included)
// and reports every check once, as pass/fail or as a recorded constant.
Report run_verify_geometry(const ExperimentConfig& c);
Report run_hormander(const ExperimentConfig& c);
Report run_form_compare(const ExperimentConfig& c);
Report run_selection_suite(const ExperimentConfig& c);
Report run_bessel(const ExperimentConfig& c);
Report run_weak_type_scan(const ExperimentConfig& c);

// dispatch on the CLI subcommand name; throws ConfigError for unknown names
Report run_command(const std::string& name, const ExperimentConfig& c);
const std::vector<std::string>& command_names();

// Test signals on an alpha grid.
// Gaussian bursts: width 1..7, modulation in [-1/2, 1/2], centers in the middle 80%.
std::vector<cplx> burst_signal(std::mt19937_64& rng, const AlphaGrid& g, int count);
// complex white noise times (1 + |x| / 8)^-decay
std::vector<cplx> power_law_signal(std::mt19937_64& rng, const AlphaGrid& g, double decay);

// beta samples of a grid at distance >= d_min from the curve
BetaSet beta_samples(const BetaGridSpec& gs, const SingularCurve& curve);
// curve points at j-th coordinate i * step, |i| <= count, or the first sample if none
std::vector<PlaneVector> lattice_gammas(const SingularCurve& curve, int j, double step, int count);

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tentfield
