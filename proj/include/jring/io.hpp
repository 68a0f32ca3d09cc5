#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jring/calibration.hpp"
#include "jring/hmm.hpp"
#include "jring/scattering.hpp"
#include "jring/spectro_fit.hpp"
#include "jring/spectrum.hpp"

namespace jring::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// CSV payloads use 9 significant digits; JSON keeps full double precision.
std::string format_sig(double v, int sig = 9);

std::uint64_t fnv1a(std::string_view s);
std::uint64_t fnv1a_file(const fs::path& p);
std::string hash_hex(std::uint64_t h);

std::string read_text(const fs::path& p);
void write_text(const fs::path& p, const std::string& content);

json read_json_file(const fs::path& p);
void write_json_file(const fs::path& p, const json& j);

// header: axis,value,parity,fluctuator,f1..fK
void write_sweep_csv(const fs::path& p, const sweep_table& table);
sweep_table read_sweep_csv(const fs::path& p);

// { "freq_ghz": f, "re": [[...]], "im": [[...]] }
json smatrix_to_json(const Eigen::Matrix3cd& s, double freq_ghz);
scattering_matrix smatrix_from_json(const json& j);

// header: freq_ghz,re11..re33,im11..im33 (row-major)
void write_smatrix_sweep_csv(const fs::path& p, const std::vector<scattering_matrix>& sweep);

void write_scores_csv(const fs::path& p, const std::vector<double>& freqs,
                      const std::vector<circulation_score>& scores);

// rows: axis_value,freq_ghz
observed_lines read_lines_csv(const fs::path& p, const std::string& axis_name = "phi");
void write_lines_csv(const fs::path& p, const observed_lines& lines);

// `# dt_seconds=...` metadata line, then the 18-column header, then rows.
void write_timeseries_csv(const fs::path& p, const time_series& series);
time_series read_timeseries_csv(const fs::path& p);

void write_labels_csv(const fs::path& p, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const fs::path& p);

json hmm_to_json(const hmm_model& m);
hmm_model hmm_from_json(const json& j);

json chain_to_json(const chain_model& chain, double residual);
chain_model chain_from_json(const json& j);

// Per-state dwell histograms plus the fitted and model decay times.
void write_dwell_csv(const fs::path& p, const dwell_stats_result& stats, double dt);

// Echoes the run config plus input-file hashes so outputs are reproducible
// from the record alone.
json provenance_block(const json& config_echo, const std::vector<fs::path>& inputs,
                      std::uint64_t seed, int threads);

}  // namespace jring::io
