#include "jring/spectro_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "jring/rng.hpp"
#include "jring/simplex.hpp"
#include "jring/threading.hpp"

namespace jring {

std::vector<double> extract_dips(const std::vector<std::pair<double, double>>& trace,
                                 double prominence_db, int max_dips) {
    if (trace.empty()) throw config_error("extract_dips: empty trace");
    if (!(prominence_db > 0.0)) throw config_error("extract_dips: prominence must be > 0");
    const int n = static_cast<int>(trace.size());

    struct dip {
        double freq;
        double depth;
    };
    std::vector<dip> dips;

    int i = 1;
    while (i < n - 1) {
        if (!(trace[i].second < trace[i - 1].second)) {
            ++i;
            continue;
        }
        int j = i;
        while (j + 1 < n && trace[j + 1].second == trace[i].second) ++j;
        if (j + 1 >= n || !(trace[j + 1].second > trace[i].second)) {
            i = j + 1;
            continue;
        }
        const double v = trace[i].second;
        double max_left = v;
        for (int l = i - 1; l >= 0; --l) {
            if (trace[l].second < v) break;
            max_left = std::max(max_left, trace[l].second);
        }
        double max_right = v;
        for (int r = j + 1; r < n; ++r) {
            if (trace[r].second < v) break;
            max_right = std::max(max_right, trace[r].second);
        }
        const double prominence = std::min(max_left, max_right) - v;
        if (prominence >= prominence_db) dips.push_back({trace[i].first, v});
        i = j + 1;
    }

    std::stable_sort(dips.begin(), dips.end(), [](const dip& a, const dip& b) {
        if (a.depth != b.depth) return a.depth < b.depth;   // deepest first
        return a.freq < b.freq;
    });
    std::vector<double> freqs;
    for (const dip& d : dips) {
        if (static_cast<int>(freqs.size()) >= max_dips) break;
        freqs.push_back(d.freq);
    }
    return freqs;
}

std::vector<sweep_config> fit_configs(const fit_model& model, const fit_options& opt) {
    std::vector<sweep_config> configs;
    for (parity p : opt.parities) configs.push_back({sector_config{p, {0.0, 0.0, 0.0}}, 0});
    if (opt.include_fluctuator)
        for (parity p : opt.parities) configs.push_back({sector_config{p, model.delta}, 1});
    return configs;
}

namespace {

bias_point fit_base_bias(const fit_model& model, const fit_options& opt,
                         const std::string& axis_name) {
    bias_point base;
    base.n_g = model.ng_offset;
    base.phi = axis_name == "phi" ? 0.0 : opt.phi;
    return base;
}

// axis value -> indices of observed points at that value
std::vector<std::pair<double, std::vector<int>>> group_by_axis(
    const std::vector<std::pair<double, double>>& points) {
    std::map<double, std::vector<int>> groups;
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        groups[points[i].first].push_back(i);
    return {groups.begin(), groups.end()};
}

}  // namespace

sweep_table predict_lines(const fit_model& model, const fit_options& opt,
                          const std::string& axis_name, const std::vector<double>& axis_values) {
    const sweep_axis axis{axis_name, axis_values};
    return sweep(model.params, fit_base_bias(model, opt, axis_name), axis,
                 fit_configs(model, opt), opt.basis, opt.count, opt.threads);
}

double line_cost(const observed_lines& observed, const fit_model& model,
                 const fit_options& opt) {
    if (observed.points.empty()) throw config_error("line_cost: no observed points");
    const auto groups = group_by_axis(observed.points);

    std::vector<double> axis_values;
    for (const auto& [value, idx] : groups) axis_values.push_back(value);
    const sweep_table table = predict_lines(model, opt, observed.axis_name, axis_values);
    const int n_cfg = static_cast<int>(table.rows.size() / axis_values.size());

    double sum_sq = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int idx : groups[g].second) {
            const double f_obs = observed.points[idx].second;
            double best = std::numeric_limits<double>::infinity();
            for (int c = 0; c < n_cfg; ++c)
                for (double f_pred : table.rows[g * n_cfg + c].freqs)
                    best = std::min(best, std::abs(f_obs - f_pred));
            sum_sq += best * best;
        }
    }
    return std::sqrt(sum_sq / static_cast<double>(observed.points.size()));
}

namespace {

struct pack_layout {
    bool ec = false, ej = false, ng = false, delta = false;

    std::vector<double> pack(const fit_model& m) const {
        std::vector<double> x;
        if (ec) x.push_back(m.params.e_c);
        if (ej)
            for (double v : m.params.e_j) x.push_back(v);
        if (ng) {
            x.push_back(m.ng_offset[0]);
            x.push_back(m.ng_offset[1]);
        }
        if (delta) {
            x.push_back(m.delta[0]);
            x.push_back(m.delta[1]);
        }
        return x;
    }

    fit_model unpack(const std::vector<double>& x, const fit_model& base) const {
        fit_model m = base;
        std::size_t i = 0;
        if (ec) m.params.e_c = x[i++];
        if (ej)
            for (double& v : m.params.e_j) v = x[i++];
        if (ng) {
            m.ng_offset[0] = x[i++];
            m.ng_offset[1] = x[i++];
        }
        if (delta) {
            m.delta[0] = x[i++];
            m.delta[1] = x[i++];
        }
        return m;
    }

    std::vector<double> steps(const std::vector<double>& x) const {
        std::vector<double> s(x.size());
        std::size_t i = 0;
        if (ec) s[i] = 0.02 * std::abs(x[i]), ++i;
        if (ej)
            for (int k = 0; k < 3; ++k) s[i] = std::max(0.02 * std::abs(x[i]), 0.01), ++i;
        if (ng)
            for (int k = 0; k < 2; ++k) s[i] = 0.02, ++i;
        if (delta)
            for (int k = 0; k < 2; ++k) s[i] = 0.02, ++i;
        return s;
    }
};

bool params_physical(const fit_model& m) {
    if (!(m.params.e_c > 0.0) || !std::isfinite(m.params.e_c)) return false;
    for (double ej : m.params.e_j)
        if (!(ej >= 0.0) || !std::isfinite(ej)) return false;
    for (double v : m.ng_offset)
        if (!std::isfinite(v)) return false;
    for (double v : m.delta)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace

fit_result fit_parameters(const observed_lines& observed, const fit_model& initial,
                          const fit_options& opt) {
    const pack_layout layout{opt.fit_ec, opt.fit_ej, opt.fit_ng, opt.fit_delta};
    const std::vector<double> x0 = layout.pack(initial);
    if (x0.empty()) throw config_error("fit_parameters: no free parameters selected");
    if (observed.points.size() < x0.size())
        throw config_error("fit_parameters: fewer observed points than free parameters");

    auto objective = [&](const std::vector<double>& x) {
        const fit_model m = layout.unpack(x, initial);
        if (!params_physical(m)) return 1e6;
        return line_cost(observed, m, opt);
    };

    const int n_restarts = std::max(1, opt.restarts);
    std::vector<simplex_result> results(n_restarts);
    parallel_for(
        n_restarts,
        [&](int r) {
            std::vector<double> start = x0;
            if (r > 0 && opt.jitter > 0.0) {
                rng64 rng(opt.seed + static_cast<std::uint64_t>(r));
                for (double& v : start)
                    v += opt.jitter * std::max(std::abs(v), 0.05) * (2.0 * rng.uniform() - 1.0);
            }
            simplex_options sopt;
            sopt.tol = opt.tol;
            sopt.stall_iters = opt.stall_iters;
            sopt.max_iter = opt.max_iter;
            sopt.step = layout.steps(start);
            simplex_result best = nelder_mead(objective, start, sopt);
            // a fresh simplex at the end point escapes premature collapse;
            // stop once re-running stops paying
            for (int round = 0; round < 4; ++round) {
                sopt.step = layout.steps(best.x);
                simplex_result next = nelder_mead(objective, best.x, sopt);
                next.iterations += best.iterations;
                const bool improved = next.cost < best.cost - opt.tol;
                best = next;
                if (!improved) break;
            }
            results[r] = best;
        },
        opt.threads);

    const simplex_result* best = &results[0];
    for (const auto& r : results)
        if (r.cost < best->cost) best = &r;

    fit_result out;
    out.model = canonicalize(layout.unpack(best->x, initial));
    out.residual = best->cost;
    out.iterations = best->iterations;
    out.converged = best->converged;
    return out;
}

fit_model canonicalize(const fit_model& model) {
    const auto& group = junction_gauge_group();
    const gauge_perm* chosen = &group[0];
    std::array<double, 3> best_ej = model.params.e_j;
    for (const auto& g : group) {
        const std::array<double, 3> ej{model.params.e_j[g.pj[0]], model.params.e_j[g.pj[1]],
                                       model.params.e_j[g.pj[2]]};
        if (std::lexicographical_compare(ej.begin(), ej.end(), best_ej.begin(), best_ej.end())) {
            best_ej = ej;
            chosen = &g;
        }
    }
    fit_model out = model;
    out.params.e_j = best_ej;
    for (int i = 0; i < 3; ++i) {
        out.ng_offset[i] = model.ng_offset[chosen->pg[i]];
        out.delta[i] = model.delta[chosen->pg[i]];
    }
    // only gate-charge differences are observable; re-pin the third offset
    const double shift = out.ng_offset[2];
    for (double& v : out.ng_offset) v -= shift;
    return out;
}

}  // namespace jring
