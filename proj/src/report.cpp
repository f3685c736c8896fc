#include "circlesim/report.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "circlesim/cycles.hpp"

namespace circlesim {

using nlohmann::ordered_json;

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        default: return "inconclusive";
    }
}

namespace {

ordered_json report_json(const VerificationReport& rep) {
    ordered_json j;
    j["theorem_id"] = rep.theorem_id;
    j["verdict"] = verdict_name(rep.verdict);
    j["statistics"] = rep.statistics;
    if (rep.p_value >= 0.0) j["p_value"] = rep.p_value;
    if (rep.margin >= -1e300 && rep.p_value < 0.0) j["margin"] = rep.margin;
    j["tolerance"] = rep.tolerance;
    j["sample_size"] = rep.sample_size;
    j["censored_fraction"] = rep.censored_fraction;
    j["details"] = rep.details;
    j["provenance"] = {{"model_hash", rep.model_hash},
                       {"config", rep.config_digest},
                       {"master_seed", rep.master_seed}};
    if (!rep.curve.empty()) {
        j["curve_name"] = rep.curve_name;
        ordered_json rows = ordered_json::array();
        for (const auto& row : rep.curve) rows.push_back({row[0], row[1], row[2], row[3]});
        j["curve"] = rows;
    }
    return j;
}

} // namespace

std::string report_to_json(const VerificationReport& rep) {
    return report_json(rep).dump(2);
}

std::string reports_to_json(const std::vector<VerificationReport>& reps) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : reps) arr.push_back(report_json(r));
    return arr.dump(2);
}

std::string summary_to_json(const ModelSummary& summary,
                            const std::string& density_csv_path) {
    ordered_json j;
    j["gamma"] = summary.affinity;
    j["net_circulation"] = summary.net_circulation;
    j["entropy_production_rate"] = summary.entropy_production_rate;
    j["splitting_probability"] = summary.forward_splitting_probability;
    j["reversible"] = summary.reversible;
    j["flux_constant"] = summary.flux_constant;
    j["density_csv_path"] = density_csv_path;
    j["model_hash"] = summary.model_hash;
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << content;
}

void write_density_csv(const std::string& path, const std::vector<double>& grid,
                       const std::vector<double>& density) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << "x,rho\n";
    char buf[80];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid[i], density[i]);
        out << buf;
    }
}

void write_curve_csv(const std::string& path, const VerificationReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << rep.curve_name << "\n";
    char buf[160];
    for (const auto& row : rep.curve) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", row[0], row[1], row[2],
                      row[3]);
        out << buf;
    }
}

void write_cycle_log_csv(
    const std::string& path,
    const std::vector<std::pair<std::uint64_t, const CycleEventLog*>>& logs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << "path_id,n,T_n,xi_n\n";
    char buf[120];
    for (const auto& [id, log] : logs) {
        for (std::size_t n = 0; n < log->forming_times.size(); ++n) {
            std::snprintf(buf, sizeof(buf), "%llu,%zu,%.17g,%d\n",
                          static_cast<unsigned long long>(id), n + 1, log->forming_times[n],
                          log->signs[n]);
            out << buf;
        }
    }
}

void write_paths_csv(const std::string& path, const std::vector<PathRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << "path_id,t,x\n";
    char buf[120];
    for (const auto& rec : records) {
        for (std::size_t k = 0; k < rec.times.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%llu,%.17g,%.17g\n",
                          static_cast<unsigned long long>(rec.path_index), rec.times[k],
                          rec.positions[k]);
            out << buf;
        }
    }
}

void write_path_dump(const std::string& path, const std::string& model_hash,
                     const std::string& config_digest,
                     const std::vector<PathRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    const std::size_t n_samples = records.empty() ? 0 : records.front().positions.size();
    out << "CSIMPATH1 " << model_hash << " \"" << config_digest << "\" " << records.size()
        << " " << n_samples << "\n";
    for (const auto& rec : records) {
        if (rec.positions.size() != n_samples)
            throw Error("write_path_dump: ragged batch");
        out.write(reinterpret_cast<const char*>(rec.positions.data()),
                  static_cast<std::streamsize>(n_samples * sizeof(double)));
    }
}

} // namespace circlesim
