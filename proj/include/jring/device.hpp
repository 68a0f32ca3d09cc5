#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace jring {

// Configuration problems (bad parameters, malformed files). CLI exit code 2.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures (non-convergence, broken monotonicity). CLI exit code 3.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All energies are linear frequencies in GHz.
struct device_params {
    double e_c = 3.98;
    std::array<double, 3> e_j{7.85, 8.28, 8.55};
    double gamma = 0.11;
    int n_0 = 0;
};

struct bias_point {
    std::array<double, 3> n_g{0.0, 0.0, 0.0};
    double phi = 0.0;
};

enum class parity { EE, EO, OE, OO };

const char* to_string(parity p);
parity parity_from_string(const std::string& s);

// Gate-charge shift associated with a quasiparticle parity sector.
std::array<double, 3> parity_shift(parity p);

struct sector_config {
    parity par = parity::EE;
    std::array<double, 3> fluctuator_delta{0.0, 0.0, 0.0};
};

// Shifts n_g by the sector's parity vector plus its fluctuator offset.
bias_point effective_bias(const bias_point& bias, const sector_config& sector);

void validate(const device_params& p);
void validate(const bias_point& b);

// Junction relabeling that leaves every transition frequency invariant:
// new_ej[i] = ej[pj[i]], new_ng[i] = ng[pg[i]]. Absolute energies pick up a
// bias-dependent charging offset, so only spectral differences are preserved.
struct gauge_perm {
    std::array<int, 3> pj{0, 1, 2};
    std::array<int, 3> pg{0, 1, 2};
};

// The six spectrum-preserving junction relabelings (closure of the cyclic
// rotation and the 1<->2 reflection).
const std::array<gauge_perm, 6>& junction_gauge_group();

}  // namespace jring
