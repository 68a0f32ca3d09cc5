#include "jring/device.hpp"

#include <cmath>

namespace jring {

const char* to_string(parity p) {
    switch (p) {
        case parity::EE: return "EE";
        case parity::EO: return "EO";
        case parity::OE: return "OE";
        case parity::OO: return "OO";
    }
    return "EE";
}

parity parity_from_string(const std::string& s) {
    if (s == "EE") return parity::EE;
    if (s == "EO") return parity::EO;
    if (s == "OE") return parity::OE;
    if (s == "OO") return parity::OO;
    throw config_error("unknown parity label: " + s);
}

std::array<double, 3> parity_shift(parity p) {
    switch (p) {
        case parity::EE: return {0.0, 0.0, 0.0};
        case parity::EO: return {-0.5, 0.5, 0.0};
        case parity::OE: return {0.0, -0.5, 0.5};
        case parity::OO: return {0.5, 0.0, -0.5};
    }
    return {0.0, 0.0, 0.0};
}

bias_point effective_bias(const bias_point& bias, const sector_config& sector) {
    const auto shift = parity_shift(sector.par);
    bias_point out = bias;
    for (int i = 0; i < 3; ++i)
        out.n_g[i] = bias.n_g[i] + shift[i] + sector.fluctuator_delta[i];
    return out;
}

void validate(const device_params& p) {
    if (!std::isfinite(p.e_c) || p.e_c <= 0.0)
        throw config_error("device.e_c must be finite and > 0");
    for (double ej : p.e_j)
        if (!std::isfinite(ej) || ej < 0.0)
            throw config_error("device.e_j entries must be finite and >= 0");
    if (!std::isfinite(p.gamma) || p.gamma < 0.0)
        throw config_error("device.gamma must be finite and >= 0");
}

void validate(const bias_point& b) {
    for (double g : b.n_g)
        if (!std::isfinite(g)) throw config_error("bias.n_g entries must be finite");
    if (!std::isfinite(b.phi)) throw config_error("bias.phi must be finite");
}

namespace {

std::array<int, 3> compose(const std::array<int, 3>& outer, const std::array<int, 3>& inner) {
    // new[i] = old[inner[outer[i]]] when inner is applied first
    return {inner[outer[0]], inner[outer[1]], inner[outer[2]]};
}

gauge_perm compose(const gauge_perm& outer, const gauge_perm& inner) {
    return {compose(outer.pj, inner.pj), compose(outer.pg, inner.pg)};
}

std::array<gauge_perm, 6> build_group() {
    const gauge_perm cyc{{2, 0, 1}, {1, 2, 0}};   // along the junction cycle 1->3->2->1
    const gauge_perm ref{{1, 0, 2}, {1, 0, 2}};   // swap islands 1 and 2
    std::array<gauge_perm, 6> g{};
    g[0] = gauge_perm{};
    g[1] = cyc;
    g[2] = compose(cyc, cyc);
    g[3] = ref;
    g[4] = compose(ref, cyc);
    g[5] = compose(ref, g[2]);
    return g;
}

}  // namespace

const std::array<gauge_perm, 6>& junction_gauge_group() {
    static const std::array<gauge_perm, 6> group = build_group();
    return group;
}

}  // namespace jring
