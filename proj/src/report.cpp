#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mmloc/error.hpp"
#include "mmloc/harness.hpp"

namespace mmloc {

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

nlohmann::json row_to_json(const ReportRow& row) {
    nlohmann::json j;
    j["estimator"] = row.estimator;
    j["scenario"] = row.scenario;
    j["rho"] = row.rho;
    j["na"] = row.na;
    j["rmse_u"] = row.metrics.rmse_u;
    j["rmse_udot"] = row.metrics.rmse_udot;
    j["crlb_pos"] = row.metrics.crlb_pos;
    j["crlb_vel"] = row.metrics.crlb_vel;
    j["t_per_estimate"] = row.metrics.wall_clock_per_estimate;
    j["trials"] = row.metrics.trials;
    j["failures"] = row.metrics.failures;
    j["velocity_valid"] = row.metrics.velocity_valid;
    j["rmse_s"] = row.metrics.rmse_s;
    j["crlb_s"] = row.metrics.crlb_s;
    j["mapped_rrhs"] = row.metrics.mapped_rrhs;
    std::vector<double> mean_err;
    for (Eigen::Index i = 0; i < row.metrics.mean_error.size(); ++i) {
        mean_err.push_back(row.metrics.mean_error(i));
    }
    j["mean_error"] = mean_err;
    return j;
}

ReportRow row_from_json(const nlohmann::json& j) {
    ReportRow row;
    row.estimator = j.at("estimator").get<std::string>();
    row.scenario = j.at("scenario").get<std::string>();
    row.rho = j.at("rho").get<double>();
    row.na = j.at("na").get<int>();
    row.metrics.rmse_u = j.at("rmse_u").get<double>();
    row.metrics.rmse_udot = j.at("rmse_udot").get<double>();
    row.metrics.crlb_pos = j.at("crlb_pos").get<double>();
    row.metrics.crlb_vel = j.at("crlb_vel").get<double>();
    row.metrics.wall_clock_per_estimate = j.at("t_per_estimate").get<double>();
    row.metrics.trials = j.at("trials").get<int>();
    row.metrics.failures = j.at("failures").get<int>();
    row.metrics.velocity_valid = j.at("velocity_valid").get<bool>();
    row.metrics.rmse_s = j.at("rmse_s").get<std::vector<double>>();
    row.metrics.crlb_s = j.at("crlb_s").get<std::vector<double>>();
    row.metrics.mapped_rrhs = j.at("mapped_rrhs").get<std::vector<int>>();
    const auto mean_err = j.at("mean_error").get<std::vector<double>>();
    row.metrics.mean_error.resize(static_cast<Eigen::Index>(mean_err.size()));
    for (std::size_t i = 0; i < mean_err.size(); ++i) {
        row.metrics.mean_error(static_cast<Eigen::Index>(i)) = mean_err[i];
    }
    return row;
}

}  // namespace

void emit_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("io_error", "cannot write report file: " + path);
    out << "estimator,scenario,rho,na,rmse_u,rmse_udot,crlb_pos,crlb_vel,"
           "t_per_estimate\n";
    for (const ReportRow& row : rows) {
        out << row.estimator << ',' << row.scenario << ','
            << format_double(row.rho) << ',' << row.na << ','
            << format_double(row.metrics.rmse_u) << ','
            << format_double(row.metrics.rmse_udot) << ','
            << format_double(row.metrics.crlb_pos) << ','
            << format_double(row.metrics.crlb_vel) << ','
            << format_double(row.metrics.wall_clock_per_estimate) << '\n';
    }
}

void emit_report_json(const std::vector<ReportRow>& rows, const std::string& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const ReportRow& row : rows) j.push_back(row_to_json(row));
    std::ofstream out(path);
    if (!out) throw error("io_error", "cannot write report file: " + path);
    out << j.dump(2) << '\n';
}

std::vector<ReportRow> read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("io_error", "cannot read report file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw error("bad_report", std::string("report parse failure: ") + e.what());
    }
    if (!j.is_array()) throw error("bad_report", "report root must be an array");
    std::vector<ReportRow> rows;
    rows.reserve(j.size());
    try {
        for (const auto& item : j) rows.push_back(row_from_json(item));
    } catch (const nlohmann::json::exception& e) {
        throw error("bad_report", std::string("report field failure: ") + e.what());
    }
    return rows;
}

}  // namespace mmloc
