#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "jring/device.hpp"
#include "jring/spectrum.hpp"

namespace jring {

// Local minima of a (freq, magnitude dB) trace with at least the given
// topographic prominence, deepest first, at most max_dips.
std::vector<double> extract_dips(const std::vector<std::pair<double, double>>& trace,
                                 double prominence_db, int max_dips);

struct observed_lines {
    std::string axis_name = "phi";
    std::vector<std::pair<double, double>> points;   // (axis value, freq GHz)
};

struct fit_model {
    device_params params;
    std::array<double, 3> ng_offset{0.0, 0.0, 0.0};   // [2] pinned by gauge
    std::array<double, 3> delta{0.0, 0.0, 0.0};
};

struct fit_options {
    bool fit_ec = true;
    bool fit_ej = true;
    bool fit_ng = false;      // frees ng_offset[0..1]
    bool fit_delta = false;   // frees delta[0..1]; delta[2] fixed by gauge
    bool include_fluctuator = true;
    std::vector<parity> parities{parity::EE, parity::EO, parity::OE, parity::OO};
    int count = 4;
    charge_basis basis{4};
    double phi = 1.9;         // flux used when the axis is a gate charge
    int restarts = 1;
    double jitter = 0.0;      // relative jitter applied to restart starting points
    double tol = 1e-6;
    int stall_iters = 50;
    int max_iter = 5000;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct fit_result {
    fit_model model;
    double residual = 0.0;    // RMS matched-line distance, GHz
    int iterations = 0;
    bool converged = false;
};

std::vector<sweep_config> fit_configs(const fit_model& model, const fit_options& opt);

// One-directional Chamfer cost: every observed dip matches its nearest
// predicted line at the same axis value; cost is the RMS of the matches.
double line_cost(const observed_lines& observed, const fit_model& model, const fit_options& opt);

sweep_table predict_lines(const fit_model& model, const fit_options& opt,
                          const std::string& axis_name, const std::vector<double>& axis_values);

fit_result fit_parameters(const observed_lines& observed, const fit_model& initial,
                          const fit_options& opt);

// Relabels junctions so e_j is ascending and re-pins ng_offset[2] = 0;
// spectrum-invariant.
fit_model canonicalize(const fit_model& model);

}  // namespace jring
