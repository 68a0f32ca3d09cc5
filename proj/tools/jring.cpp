#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "jring/calibration.hpp"
#include "jring/hmm.hpp"
#include "jring/io.hpp"
#include "jring/scattering.hpp"
#include "jring/spectro_fit.hpp"
#include "jring/spectrum.hpp"
#include "jring/threading.hpp"

namespace {

using jring::io::json;
namespace fs = std::filesystem;

struct cli_state {
    std::string command;
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool threads_set = false;
    std::string lines_path;
    std::string m_off_path;
    std::string m_on_path;
    std::string series_path;
};

template <typename T>
T field(const json& cfg, const std::string& path, const T& fallback) {
    const json::json_pointer ptr(path);
    if (!cfg.contains(ptr)) return fallback;
    try {
        return cfg.at(ptr).get<T>();
    } catch (const json::exception& e) {
        throw jring::config_error("config field '" + path + "': " + e.what());
    }
}

std::array<double, 3> triple(const json& cfg, const std::string& path,
                             const std::array<double, 3>& fallback) {
    const auto v = field<std::vector<double>>(
        cfg, path, {fallback[0], fallback[1], fallback[2]});
    if (v.size() != 3)
        throw jring::config_error("config field '" + path + "' must have 3 entries");
    return {v[0], v[1], v[2]};
}

jring::device_params device_from(const json& cfg) {
    jring::device_params p;
    p.e_c = field(cfg, "/device/e_c", p.e_c);
    p.e_j = triple(cfg, "/device/e_j", p.e_j);
    p.gamma = field(cfg, "/device/gamma", p.gamma);
    p.n_0 = field(cfg, "/device/n_0", p.n_0);
    validate(p);
    return p;
}

jring::bias_point bias_from(const json& cfg) {
    jring::bias_point b;
    b.n_g = triple(cfg, "/bias/n_g", b.n_g);
    b.phi = field(cfg, "/bias/phi", b.phi);
    validate(b);
    return b;
}

jring::charge_basis basis_from(const json& cfg, const std::string& path, int fallback) {
    const int n_max = field(cfg, path, fallback);
    if (n_max < 1 || n_max > 20)
        throw jring::config_error("config field '" + path + "' must be in [1, 20]");
    return jring::charge_basis{n_max};
}

std::vector<jring::parity> parities_from(const json& cfg) {
    const auto names = field<std::vector<std::string>>(cfg, "/sectors/parities",
                                                       {"EE", "EO", "OE", "OO"});
    if (names.empty()) throw jring::config_error("config field '/sectors/parities' is empty");
    std::vector<jring::parity> out;
    for (const auto& name : names) out.push_back(jring::parity_from_string(name));
    return out;
}

std::vector<jring::sector_config> sectors_from(const json& cfg, bool fluctuator_default) {
    const auto parities = parities_from(cfg);
    const bool fluct = field(cfg, "/sectors/include_fluctuator", fluctuator_default);
    const auto delta = triple(cfg, "/sectors/fluctuator_delta", {0.11, -0.03, 0.04});
    std::vector<jring::sector_config> out;
    for (jring::parity p : parities) out.push_back({p, {0.0, 0.0, 0.0}});
    if (fluct)
        for (jring::parity p : parities) out.push_back({p, delta});
    return out;
}

std::vector<double> grid(double start, double stop, int points, const std::string& what) {
    if (points < 1) throw jring::config_error("config field '" + what + "' must be >= 1");
    if (!std::isfinite(start) || !std::isfinite(stop))
        throw jring::config_error("grid endpoints for '" + what + "' must be finite");
    std::vector<double> values(points);
    for (int i = 0; i < points; ++i)
        values[i] = points == 1 ? start : start + (stop - start) * i / (points - 1);
    return values;
}

std::uint64_t resolve_seed(const cli_state& st, const json& cfg) {
    return st.seed_set ? st.seed : field<std::uint64_t>(cfg, "/seed", 1);
}

int resolve_threads(const cli_state& st, const json& cfg) {
    const int threads = st.threads_set ? st.threads : field(cfg, "/threads", 1);
    if (threads < 0) throw jring::config_error("threads must be >= 0");
    return threads;
}

json effective_config(const json& cfg, std::uint64_t seed, int threads) {
    json echo = cfg.is_null() ? json::object() : cfg;
    echo["seed"] = seed;
    echo["threads"] = threads;
    return echo;
}

std::vector<fs::path> with_config(const cli_state& st, std::vector<fs::path> inputs) {
    if (!st.config_path.empty()) inputs.insert(inputs.begin(), st.config_path);
    return inputs;
}

void check_truncation(const json& cfg, const jring::device_params& params,
                      const jring::bias_point& bias, const jring::charge_basis& basis,
                      int count, double default_tol = 1e-6) {
    if (!field(cfg, "/basis/check", true)) return;
    const double tol = field(cfg, "/basis/check_tol", default_tol);
    const double gap = jring::truncation_gap(params, bias, basis, count);
    if (gap > tol)
        throw jring::numerical_error(
            "charge basis n_max=" + std::to_string(basis.n_max) +
            " is not converged at the working bias (gap " + jring::io::format_sig(gap) +
            " GHz exceeds " + jring::io::format_sig(tol) + ")");
}

std::string require_input(const std::string& flag_value, const json& cfg,
                          const std::string& cfg_path, const std::string& what) {
    if (!flag_value.empty()) return flag_value;
    const auto from_cfg = field<std::string>(cfg, cfg_path, "");
    if (!from_cfg.empty()) return from_cfg;
    throw jring::config_error("missing required input: " + what + " (flag or config field '" +
                              cfg_path + "')");
}

int flat_index(int i, int j, bool imag) { return 2 * (3 * i + j) + (imag ? 1 : 0); }

Eigen::VectorXd flatten_smatrix(const Eigen::Matrix3cd& s) {
    Eigen::VectorXd v(18);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            v(flat_index(i, j, false)) = s(i, j).real();
            v(flat_index(i, j, true)) = s(i, j).imag();
        }
    return v;
}

void cmd_spectrum(const cli_state& st, const json& cfg) {
    const auto params = device_from(cfg);
    const auto bias = bias_from(cfg);
    const auto basis = basis_from(cfg, "/basis/n_max", 6);
    const int count = field(cfg, "/sweep/count", 4);
    if (count < 1) throw jring::config_error("config field '/sweep/count' must be >= 1");

    jring::sweep_axis axis;
    axis.name = field<std::string>(cfg, "/sweep/axis", "phi");
    const double stop_default = axis.name == "phi" ? 2.0 * std::numbers::pi : 1.0;
    axis.values = grid(field(cfg, "/sweep/start", 0.0),
                       field(cfg, "/sweep/stop", stop_default),
                       field(cfg, "/sweep/points", 201), "/sweep/points");

    const auto configs = jring::config_set(triple(cfg, "/sectors/fluctuator_delta",
                                                  {0.11, -0.03, 0.04}),
                                           field(cfg, "/sectors/include_fluctuator", true));
    const std::uint64_t seed = resolve_seed(st, cfg);
    const int threads = resolve_threads(st, cfg);

    check_truncation(cfg, params, bias, basis, count + 1);
    const auto table = jring::sweep(params, bias, axis, configs, basis, count, threads);

    const fs::path out(st.out_dir);
    jring::io::write_sweep_csv(out / "sweep.csv", table);

    json per_config = json::array();
    for (const auto& config : configs) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& row : table.rows) {
            if (row.par != config.sector.par || row.fluctuator != config.fluctuator) continue;
            for (double f : row.freqs) {
                lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        }
        per_config.push_back({{"parity", jring::to_string(config.sector.par)},
                              {"fluctuator", config.fluctuator},
                              {"f_min_ghz", lo},
                              {"f_max_ghz", hi}});
    }
    json summary{{"axis", axis.name},
                 {"points", axis.values.size()},
                 {"transitions", count},
                 {"rows", table.rows.size()},
                 {"configs", per_config}};
    summary["provenance"] = jring::io::provenance_block(effective_config(cfg, seed, threads),
                                                        with_config(st, {}), seed, threads);
    jring::io::write_json_file(out / "spectrum_summary.json", summary);
}

void cmd_smatrix(const cli_state& st, const json& cfg) {
    const auto params = device_from(cfg);
    const auto bias = bias_from(cfg);
    const auto basis = basis_from(cfg, "/basis/n_max", 6);
    const int k_states = field(cfg, "/scattering/k_states", 8);
    if (k_states < 1) throw jring::config_error("config field '/scattering/k_states' must be >= 1");
    const auto sectors = sectors_from(cfg, false);
    const auto freqs = grid(field(cfg, "/scattering/freq_start", 6.0),
                            field(cfg, "/scattering/freq_stop", 7.0),
                            field(cfg, "/scattering/freq_points", 201),
                            "/scattering/freq_points");
    const std::uint64_t seed = resolve_seed(st, cfg);
    const int threads = resolve_threads(st, cfg);

    check_truncation(cfg, params, bias, basis, k_states + 1);

    std::vector<jring::scattering_matrix> sweep(freqs.size());
    std::vector<jring::circulation_score> scores(freqs.size());
    jring::parallel_for(
        static_cast<int>(freqs.size()),
        [&](int i) {
            const Eigen::Matrix3cd s =
                jring::averaged_smatrix(params, bias, sectors, basis, freqs[i], k_states);
            sweep[i] = {s, freqs[i]};
            scores[i] = jring::score(s);
        },
        threads);

    const fs::path out(st.out_dir);
    jring::io::write_smatrix_sweep_csv(out / "smatrix.csv", sweep);
    jring::io::write_scores_csv(out / "scores.csv", freqs, scores);

    std::size_t best_n = 0, best_cw = 0, best_ccw = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i].nonreciprocity > scores[best_n].nonreciprocity) best_n = i;
        if (scores[i].fidelity_cw > scores[best_cw].fidelity_cw) best_cw = i;
        if (scores[i].fidelity_ccw > scores[best_ccw].fidelity_ccw) best_ccw = i;
    }
    json summary{{"sectors", sectors.size()},
                 {"freq_points", freqs.size()},
                 {"peak_nonreciprocity",
                  {{"freq_ghz", freqs[best_n]}, {"value", scores[best_n].nonreciprocity}}},
                 {"peak_fidelity_cw",
                  {{"freq_ghz", freqs[best_cw]}, {"value", scores[best_cw].fidelity_cw}}},
                 {"peak_fidelity_ccw",
                  {{"freq_ghz", freqs[best_ccw]}, {"value", scores[best_ccw].fidelity_ccw}}}};
    summary["provenance"] = jring::io::provenance_block(effective_config(cfg, seed, threads),
                                                        with_config(st, {}), seed, threads);
    jring::io::write_json_file(out / "smatrix_summary.json", summary);
}

void cmd_fit(const cli_state& st, const json& cfg) {
    const std::string lines_path = require_input(st.lines_path, cfg, "/inputs/lines", "--lines");
    const std::string axis_name = field<std::string>(cfg, "/sweep/axis", "phi");
    const auto observed = jring::io::read_lines_csv(lines_path, axis_name);

    jring::fit_model initial;
    initial.params = device_from(cfg);
    initial.ng_offset = triple(cfg, "/fit/ng_offset", {0.0, 0.0, 0.0});
    initial.delta = triple(cfg, "/sectors/fluctuator_delta", {0.11, -0.03, 0.04});

    jring::fit_options opt;
    opt.fit_ec = field(cfg, "/fit/fit_ec", opt.fit_ec);
    opt.fit_ej = field(cfg, "/fit/fit_ej", opt.fit_ej);
    opt.fit_ng = field(cfg, "/fit/fit_ng", opt.fit_ng);
    opt.fit_delta = field(cfg, "/fit/fit_delta", opt.fit_delta);
    opt.include_fluctuator = field(cfg, "/sectors/include_fluctuator", opt.include_fluctuator);
    opt.parities = parities_from(cfg);
    opt.count = field(cfg, "/fit/count", opt.count);
    opt.basis = basis_from(cfg, "/fit/n_max", 4);
    opt.phi = field(cfg, "/bias/phi", opt.phi);
    opt.restarts = field(cfg, "/fit/restarts", opt.restarts);
    opt.jitter = field(cfg, "/fit/jitter", opt.jitter);
    opt.tol = field(cfg, "/fit/tol", opt.tol);
    opt.stall_iters = field(cfg, "/fit/stall_iters", opt.stall_iters);
    opt.max_iter = field(cfg, "/fit/max_iter", opt.max_iter);
    opt.seed = resolve_seed(st, cfg);
    opt.threads = resolve_threads(st, cfg);
    if (opt.count < 1) throw jring::config_error("config field '/fit/count' must be >= 1");
    if (opt.restarts < 1) throw jring::config_error("config field '/fit/restarts' must be >= 1");

    check_truncation(cfg, initial.params, bias_from(cfg), opt.basis, opt.count + 1, 1e-3);
    const auto result = jring::fit_parameters(observed, initial, opt);

    json out_json{{"e_c", result.model.params.e_c},
                  {"e_j", result.model.params.e_j},
                  {"ng_offset", result.model.ng_offset},
                  {"delta", result.model.delta},
                  {"residual_ghz", result.residual},
                  {"iterations", result.iterations},
                  {"converged", result.converged}};
    out_json["provenance"] =
        jring::io::provenance_block(effective_config(cfg, opt.seed, opt.threads),
                                    with_config(st, {lines_path}), opt.seed, opt.threads);
    jring::io::write_json_file(fs::path(st.out_dir) / "fit_result.json", out_json);

    if (!result.converged)
        throw jring::numerical_error("fit did not converge within max_iter=" +
                                     std::to_string(opt.max_iter));
}

void cmd_calibrate(const cli_state& st, const json& cfg) {
    const std::string m_off_path = require_input(st.m_off_path, cfg, "/inputs/m_off", "--m-off");
    const std::string m_on_path = require_input(st.m_on_path, cfg, "/inputs/m_on", "--m-on");
    const auto m_off = jring::io::smatrix_from_json(jring::io::read_json_file(m_off_path));
    const auto m_on = jring::io::smatrix_from_json(jring::io::read_json_file(m_on_path));

    jring::calibration_options opt;
    opt.reg_weight = field(cfg, "/calibration/reg_weight", opt.reg_weight);
    opt.reg_decay = field(cfg, "/calibration/reg_decay", opt.reg_decay);
    opt.als_iters = field(cfg, "/calibration/als_iters", opt.als_iters);
    opt.polish_iters = field(cfg, "/calibration/polish_iters", opt.polish_iters);
    opt.fail_threshold = field(cfg, "/calibration/fail_threshold", opt.fail_threshold);
    const std::uint64_t seed = resolve_seed(st, cfg);
    const int threads = resolve_threads(st, cfg);

    const auto result = jring::solve_off_resonant(m_off.s, opt);

    const json provenance =
        jring::io::provenance_block(effective_config(cfg, seed, threads),
                                    with_config(st, {m_off_path, m_on_path}), seed, threads);
    json cal = jring::io::chain_to_json(result.chain, result.residual);
    cal["ok"] = result.ok;
    cal["s_off"] = jring::io::smatrix_to_json(result.s_off, m_off.freq_ghz);
    cal["provenance"] = provenance;
    const fs::path out(st.out_dir);
    jring::io::write_json_file(out / "calibration.json", cal);

    if (!result.ok)
        throw jring::numerical_error(
            "calibration residual " + jring::io::format_sig(result.residual) +
            " exceeds fail threshold; measured matrix is off-model");

    const Eigen::Matrix3cd s = jring::apply(m_on.s, result.chain);
    json corrected = jring::io::smatrix_to_json(s, m_on.freq_ghz);
    corrected["provenance"] = provenance;
    jring::io::write_json_file(out / "s_corrected.json", corrected);
}

void cmd_hmm(const cli_state& st, const json& cfg) {
    const std::string series_path =
        require_input(st.series_path, cfg, "/inputs/series", "--series");
    const auto series = jring::io::read_timeseries_csv(series_path);

    const int n_states = field(cfg, "/hmm/n_states", 4);
    if (n_states < 1) throw jring::config_error("config field '/hmm/n_states' must be >= 1");
    const double tol = field(cfg, "/hmm/tol", 1e-8);
    const int max_iter = field(cfg, "/hmm/max_iter", 500);
    const std::uint64_t seed = resolve_seed(st, cfg);
    const int threads = resolve_threads(st, cfg);

    const auto init = jring::kmeans_init(series, n_states, seed);
    jring::train_report report;
    const auto model = jring::baum_welch(series, init, tol, max_iter, &report);
    const auto path = jring::viterbi(model, series);
    const Eigen::VectorXd diag = model.trans.diagonal();
    const auto stats = jring::dwell_stats(path, series.dt, n_states, &diag);

    json out_json = jring::io::hmm_to_json(model);
    out_json["log_likelihood"] = report.loglik.empty() ? 0.0 : report.loglik.back();
    out_json["iterations"] = report.iterations;
    out_json["converged"] = report.converged;
    out_json["tau_fit_seconds"] = stats.tau_fit;
    out_json["tau_model_seconds"] = stats.tau_model;
    out_json["tau_reliable"] = stats.reliable;
    out_json["provenance"] =
        jring::io::provenance_block(effective_config(cfg, seed, threads),
                                    with_config(st, {series_path}), seed, threads);

    const fs::path out(st.out_dir);
    jring::io::write_json_file(out / "hmm_model.json", out_json);
    jring::io::write_labels_csv(out / "labels.csv", path);
    jring::io::write_dwell_csv(out / "dwell.csv", stats, series.dt);

    if (!report.converged)
        throw jring::numerical_error("baum-welch did not converge within max_iter=" +
                                     std::to_string(max_iter));
}

void cmd_simulate_timeseries(const cli_state& st, const json& cfg) {
    const auto params = device_from(cfg);
    const auto bias = bias_from(cfg);
    const auto basis = basis_from(cfg, "/basis/n_max", 6);
    const int k_states = field(cfg, "/scattering/k_states", 8);
    const auto sectors = sectors_from(cfg, false);
    const int n_samples = field(cfg, "/simulate/n_samples", 32768);
    if (n_samples < 1) throw jring::config_error("config field '/simulate/n_samples' must be >= 1");
    const double dt = field(cfg, "/simulate/dt_seconds", 30e-6);
    if (!(dt > 0.0)) throw jring::config_error("config field '/simulate/dt_seconds' must be > 0");
    const double noise_sigma = field(cfg, "/simulate/noise_sigma", 0.02);
    if (!(noise_sigma > 0.0))
        throw jring::config_error("config field '/simulate/noise_sigma' must be > 0");
    const double trans_diag = field(cfg, "/simulate/trans_diag", 0.98);
    if (!(trans_diag > 0.0) || trans_diag > 1.0)
        throw jring::config_error("config field '/simulate/trans_diag' must be in (0, 1]");
    const std::uint64_t seed = resolve_seed(st, cfg);
    const int threads = resolve_threads(st, cfg);

    check_truncation(cfg, params, bias, basis, k_states + 1);
    const double drive = field(cfg, "/simulate/drive_ghz",
                               jring::transition_frequencies(params, bias, sectors[0], basis,
                                                             1)[0]);

    const int k = static_cast<int>(sectors.size());
    jring::hmm_model model;
    model.initial = Eigen::VectorXd::Constant(k, 1.0 / k);
    model.trans = k == 1 ? Eigen::MatrixXd::Ones(1, 1)
                         : Eigen::MatrixXd::Constant(k, k, (1.0 - trans_diag) / (k - 1));
    if (k > 1) model.trans.diagonal().setConstant(trans_diag);
    json sector_labels = json::array();
    for (const auto& sector : sectors) {
        const Eigen::Matrix3cd s =
            jring::smatrix(params, bias, sector, basis, drive, k_states);
        model.mean.push_back(flatten_smatrix(s));
        model.cov.push_back(noise_sigma * noise_sigma * Eigen::MatrixXd::Identity(18, 18));
        const bool shifted = sector.fluctuator_delta != std::array<double, 3>{0.0, 0.0, 0.0};
        sector_labels.push_back(std::string(jring::to_string(sector.par)) +
                                (shifted ? ":shifted" : ""));
    }
    validate(model);

    const auto [series, labels] = jring::simulate(model, n_samples, seed, dt);

    const fs::path out(st.out_dir);
    jring::io::write_timeseries_csv(out / "timeseries.csv", series);
    jring::io::write_labels_csv(out / "labels.csv", labels);

    json summary = jring::io::hmm_to_json(model);
    summary["drive_ghz"] = drive;
    summary["states"] = sector_labels;
    summary["n_samples"] = n_samples;
    summary["dt_seconds"] = dt;
    summary["provenance"] = jring::io::provenance_block(effective_config(cfg, seed, threads),
                                                        with_config(st, {}), seed, threads);
    jring::io::write_json_file(out / "simulation.json", summary);
}

void add_common(CLI::App* sub, cli_state& st) {
    sub->add_option("--config", st.config_path, "JSON run configuration");
    sub->add_option("--out", st.out_dir, "output directory (default: current directory)");
    sub->add_option("--seed", st.seed, "RNG seed, overrides the config")
        ->each([&st](const std::string&) { st.seed_set = true; });
    sub->add_option("--threads", st.threads, "worker threads, overrides the config")
        ->each([&st](const std::string&) { st.threads_set = true; });
    sub->callback([sub, &st] { st.command = sub->get_name(); });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-junction Josephson ring circulator toolkit"};
    app.require_subcommand(1);
    cli_state st;

    auto* spectrum = app.add_subcommand("spectrum", "transition-frequency sweep to CSV");
    add_common(spectrum, st);

    auto* smatrix = app.add_subcommand(
        "smatrix", "sector-averaged scattering matrix and circulation scores over frequency");
    add_common(smatrix, st);

    auto* fit = app.add_subcommand("fit", "fit device parameters to observed spectral lines");
    add_common(fit, st);
    fit->add_option("--lines", st.lines_path, "observed lines CSV (axis_value,freq_ghz)");

    auto* calibrate =
        app.add_subcommand("calibrate", "invert the measurement chain from an off-resonant frame");
    add_common(calibrate, st);
    calibrate->add_option("--m-off", st.m_off_path, "off-resonant measured matrix JSON");
    calibrate->add_option("--m-on", st.m_on_path, "on-resonance measured matrix JSON");

    auto* hmm = app.add_subcommand("hmm", "train a Gaussian HMM on S-matrix time series");
    add_common(hmm, st);
    hmm->add_option("--series", st.series_path, "time-series CSV (18 columns plus dt line)");

    auto* simulate =
        app.add_subcommand("simulate-timeseries", "synthesize parity-switching S-matrix samples");
    add_common(simulate, st);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const json cfg = st.config_path.empty() ? json::object()
                                                : jring::io::read_json_file(st.config_path);
        fs::create_directories(st.out_dir);
        if (st.command == "spectrum")
            cmd_spectrum(st, cfg);
        else if (st.command == "smatrix")
            cmd_smatrix(st, cfg);
        else if (st.command == "fit")
            cmd_fit(st, cfg);
        else if (st.command == "calibrate")
            cmd_calibrate(st, cfg);
        else if (st.command == "hmm")
            cmd_hmm(st, cfg);
        else if (st.command == "simulate-timeseries")
            cmd_simulate_timeseries(st, cfg);
        return 0;
    } catch (const jring::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const jring::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
