#include "jring/io.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace jring::io {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error("failed to parse number '" + s + "' in " + what);
    }
}

bool numeric_start(const std::string& line) {
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
               c == '.';
    }
    return false;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw config_error("cannot open file: " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

std::string format_sig(double v, int sig) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", sig, v);
    return buf;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const fs::path& p) { return fnv1a(read_text(p)); }

std::string hash_hex(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw config_error("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw config_error("cannot write file: " + p.string());
    out << content;
}

json read_json_file(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::parse_error& e) {
        throw config_error("invalid JSON in " + p.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_sweep_csv(const fs::path& p, const sweep_table& table) {
    std::ostringstream out;
    out << "axis,value,parity,fluctuator";
    for (int k = 1; k <= table.count; ++k) out << ",f" << k;
    out << "\n";
    for (const auto& row : table.rows) {
        out << table.axis_name << ',' << format_sig(row.axis_value) << ','
            << to_string(row.par) << ',' << row.fluctuator;
        for (double f : row.freqs) out << ',' << format_sig(f);
        out << "\n";
    }
    write_text(p, out.str());
}

sweep_table read_sweep_csv(const fs::path& p) {
    const auto lines = read_lines(p);
    if (lines.empty()) throw config_error("empty sweep CSV: " + p.string());
    sweep_table table;
    const auto header = split_csv(lines[0]);
    if (header.size() < 5 || header[0] != "axis")
        throw config_error("bad sweep CSV header in " + p.string());
    table.count = static_cast<int>(header.size()) - 4;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        const auto fields = split_csv(lines[li]);
        if (fields.size() != header.size())
            throw config_error("ragged sweep CSV row in " + p.string());
        sweep_row row;
        table.axis_name = fields[0];
        row.axis_value = parse_double(fields[1], p.string());
        row.par = parity_from_string(fields[2]);
        row.fluctuator = static_cast<int>(parse_double(fields[3], p.string()));
        for (int k = 0; k < table.count; ++k)
            row.freqs.push_back(parse_double(fields[4 + k], p.string()));
        table.rows.push_back(std::move(row));
    }
    return table;
}

json smatrix_to_json(const Eigen::Matrix3cd& s, double freq_ghz) {
    json re = json::array(), im = json::array();
    for (int i = 0; i < 3; ++i) {
        json re_row = json::array(), im_row = json::array();
        for (int j = 0; j < 3; ++j) {
            re_row.push_back(s(i, j).real());
            im_row.push_back(s(i, j).imag());
        }
        re.push_back(re_row);
        im.push_back(im_row);
    }
    return json{{"freq_ghz", freq_ghz}, {"re", re}, {"im", im}};
}

scattering_matrix smatrix_from_json(const json& j) {
    if (!j.contains("re") || !j.contains("im"))
        throw config_error("scattering JSON must contain re and im blocks");
    scattering_matrix out;
    out.freq_ghz = j.value("freq_ghz", 0.0);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            out.s(i, k) = {j.at("re").at(i).at(k).get<double>(),
                           j.at("im").at(i).at(k).get<double>()};
    return out;
}

void write_smatrix_sweep_csv(const fs::path& p, const std::vector<scattering_matrix>& sweep) {
    std::ostringstream out;
    out << "freq_ghz";
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) out << ",re" << i << j;
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) out << ",im" << i << j;
    out << "\n";
    for (const auto& sm : sweep) {
        out << format_sig(sm.freq_ghz);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out << ',' << format_sig(sm.s(i, j).real());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out << ',' << format_sig(sm.s(i, j).imag());
        out << "\n";
    }
    write_text(p, out.str());
}

void write_scores_csv(const fs::path& p, const std::vector<double>& freqs,
                      const std::vector<circulation_score>& scores) {
    if (freqs.size() != scores.size())
        throw config_error("scores CSV: frequency and score counts differ");
    std::ostringstream out;
    out << "freq_ghz,nonreciprocity,fidelity_cw,fidelity_ccw\n";
    for (std::size_t i = 0; i < freqs.size(); ++i)
        out << format_sig(freqs[i]) << ',' << format_sig(scores[i].nonreciprocity) << ','
            << format_sig(scores[i].fidelity_cw) << ',' << format_sig(scores[i].fidelity_ccw)
            << "\n";
    write_text(p, out.str());
}

observed_lines read_lines_csv(const fs::path& p, const std::string& axis_name) {
    observed_lines out;
    out.axis_name = axis_name;
    for (const auto& line : read_lines(p)) {
        if (line.empty() || line[0] == '#') continue;
        if (!numeric_start(line)) continue;   // header
        const auto fields = split_csv(line);
        if (fields.size() != 2)
            throw config_error("observed lines CSV rows must be axis_value,freq_ghz");
        out.points.emplace_back(parse_double(fields[0], p.string()),
                                parse_double(fields[1], p.string()));
    }
    if (out.points.empty()) throw config_error("no observed lines in " + p.string());
    return out;
}

void write_lines_csv(const fs::path& p, const observed_lines& lines) {
    std::ostringstream out;
    out << "axis_value,freq_ghz\n";
    for (const auto& [v, f] : lines.points)
        out << format_sig(v) << ',' << format_sig(f) << "\n";
    write_text(p, out.str());
}

void write_timeseries_csv(const fs::path& p, const time_series& series) {
    if (series.x.cols() != 18)
        throw config_error("time series CSV expects 18 columns");
    std::ostringstream out;
    out << "# dt_seconds=" << format_sig(series.dt) << "\n";
    bool first = true;
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            out << (first ? "" : ",") << "re" << i << j << ",im" << i << j;
            first = false;
        }
    out << "\n";
    for (Eigen::Index t = 0; t < series.x.rows(); ++t) {
        for (int c = 0; c < 18; ++c) out << (c ? "," : "") << format_sig(series.x(t, c));
        out << "\n";
    }
    write_text(p, out.str());
}

time_series read_timeseries_csv(const fs::path& p) {
    time_series series;
    series.dt = 0.0;
    std::vector<std::array<double, 18>> rows;
    for (const auto& line : read_lines(p)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find("dt_seconds=");
            if (eq != std::string::npos)
                series.dt = parse_double(line.substr(eq + 11), p.string());
            continue;
        }
        if (!numeric_start(line)) continue;   // header
        const auto fields = split_csv(line);
        if (fields.size() != 18)
            throw config_error("time series CSV rows must have 18 columns");
        std::array<double, 18> row{};
        for (int c = 0; c < 18; ++c) row[c] = parse_double(fields[c], p.string());
        rows.push_back(row);
    }
    if (rows.empty()) throw config_error("no samples in " + p.string());
    if (!(series.dt > 0.0))
        throw config_error("time series CSV is missing the dt metadata line");
    series.x.resize(static_cast<Eigen::Index>(rows.size()), 18);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (int c = 0; c < 18; ++c) series.x(static_cast<Eigen::Index>(t), c) = rows[t][c];
    return series;
}

void write_labels_csv(const fs::path& p, const std::vector<int>& labels) {
    std::ostringstream out;
    out << "sample,state\n";
    for (std::size_t t = 0; t < labels.size(); ++t) out << t << ',' << labels[t] << "\n";
    write_text(p, out.str());
}

std::vector<int> read_labels_csv(const fs::path& p) {
    std::vector<int> labels;
    for (const auto& line : read_lines(p)) {
        if (line.empty() || !numeric_start(line)) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 2) throw config_error("labels CSV rows must be sample,state");
        labels.push_back(static_cast<int>(parse_double(fields[1], p.string())));
    }
    return labels;
}

json hmm_to_json(const hmm_model& m) {
    json j;
    j["n_states"] = m.n_states();
    j["initial"] = std::vector<double>(m.initial.data(), m.initial.data() + m.initial.size());
    json trans = json::array();
    for (Eigen::Index i = 0; i < m.trans.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.trans.cols(); ++c) row.push_back(m.trans(i, c));
        trans.push_back(row);
    }
    j["trans"] = trans;
    json means = json::array(), covs = json::array();
    for (int s = 0; s < m.n_states(); ++s) {
        means.push_back(
            std::vector<double>(m.mean[s].data(), m.mean[s].data() + m.mean[s].size()));
        json cov = json::array();
        for (Eigen::Index i = 0; i < m.cov[s].rows(); ++i) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cov[s].cols(); ++c) row.push_back(m.cov[s](i, c));
            cov.push_back(row);
        }
        covs.push_back(cov);
    }
    j["means"] = means;
    j["covariances"] = covs;
    return j;
}

hmm_model hmm_from_json(const json& j) {
    hmm_model m;
    const int k = j.at("n_states").get<int>();
    const auto initial = j.at("initial").get<std::vector<double>>();
    if (static_cast<int>(initial.size()) != k)
        throw config_error("hmm JSON: initial size mismatch");
    m.initial = Eigen::Map<const Eigen::VectorXd>(initial.data(), k);
    m.trans.resize(k, k);
    for (int i = 0; i < k; ++i)
        for (int c = 0; c < k; ++c) m.trans(i, c) = j.at("trans").at(i).at(c).get<double>();
    for (int s = 0; s < k; ++s) {
        const auto mean = j.at("means").at(s).get<std::vector<double>>();
        const int d = static_cast<int>(mean.size());
        m.mean.push_back(Eigen::Map<const Eigen::VectorXd>(mean.data(), d));
        Eigen::MatrixXd cov(d, d);
        for (int i = 0; i < d; ++i)
            for (int c = 0; c < d; ++c)
                cov(i, c) = j.at("covariances").at(s).at(i).at(c).get<double>();
        m.cov.push_back(cov);
    }
    validate(m);
    return m;
}

json chain_to_json(const chain_model& chain, double residual) {
    const Eigen::Matrix3cd p = chain.product();
    json pre = json::array(), pim = json::array();
    for (int i = 0; i < 3; ++i) {
        json re_row = json::array(), im_row = json::array();
        for (int j = 0; j < 3; ++j) {
            re_row.push_back(p(i, j).real());
            im_row.push_back(p(i, j).imag());
        }
        pre.push_back(re_row);
        pim.push_back(im_row);
    }
    json a_re = json::array(), a_im = json::array(), b_re = json::array(),
         b_im = json::array();
    for (int i = 0; i < 3; ++i) {
        a_re.push_back(chain.a(i).real());
        a_im.push_back(chain.a(i).imag());
        b_re.push_back(chain.b(i).real());
        b_im.push_back(chain.b(i).imag());
    }
    return json{{"product_re", pre},
                {"product_im", pim},
                {"a_re", a_re},
                {"a_im", a_im},
                {"b_re", b_re},
                {"b_im", b_im},
                {"residual", residual},
                {"gauge", "a real-positive with a1 = 1; only the products b_i*a_j are "
                          "identifiable"}};
}

chain_model chain_from_json(const json& j) {
    chain_model chain;
    for (int i = 0; i < 3; ++i) {
        chain.a(i) = {j.at("a_re").at(i).get<double>(), j.at("a_im").at(i).get<double>()};
        chain.b(i) = {j.at("b_re").at(i).get<double>(), j.at("b_im").at(i).get<double>()};
    }
    return chain;
}

void write_dwell_csv(const fs::path& p, const dwell_stats_result& stats, double dt) {
    std::ostringstream out;
    out << "state,dwell_samples,count\n";
    for (std::size_t s = 0; s < stats.dwell_seconds.size(); ++s) {
        std::map<long, long> hist;
        for (double sec : stats.dwell_seconds[s]) ++hist[std::lround(sec / dt)];
        for (const auto& [len, count] : hist)
            out << s << ',' << len << ',' << count << "\n";
    }
    out << "state,tau_fit_seconds,tau_model_seconds,reliable\n";
    for (std::size_t s = 0; s < stats.tau_fit.size(); ++s)
        out << s << ',' << format_sig(stats.tau_fit[s]) << ','
            << format_sig(stats.tau_model[s]) << ',' << (stats.reliable[s] ? 1 : 0) << "\n";
    write_text(p, out.str());
}

json provenance_block(const json& config_echo, const std::vector<fs::path>& inputs,
                      std::uint64_t seed, int threads) {
    json in = json::object();
    for (const auto& p : inputs) in[p.string()] = "fnv1a:" + hash_hex(fnv1a_file(p));
    return json{{"config", config_echo}, {"inputs", in}, {"seed", seed}, {"threads", threads}};
}

}  // namespace jring::io
