// Command-line front end: measurement simulation, Monte Carlo experiments,
// estimation, reflection mapping, bound computation, network training, and
// timing benchmarks.  Errors leave as {"error":{"code","message"}} on stderr
// with a nonzero exit code.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mmloc/config.hpp"
#include "mmloc/crlb.hpp"
#include "mmloc/dataset.hpp"
#include "mmloc/ensemble.hpp"
#include "mmloc/error.hpp"
#include "mmloc/harness.hpp"
#include "mmloc/mapping.hpp"
#include "mmloc/neural_estimators.hpp"
#include "mmloc/rng.hpp"
#include "mmloc/wls.hpp"

namespace {

using nlohmann::json;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_path;
    std::string format;  // "", "csv", or "json"
};

mmloc::Config load_config(const GlobalArgs& g) {
    if (g.config_path.empty()) {
        throw mmloc::error("missing_config", "this command requires --config <file>");
    }
    return mmloc::Config::load(g.config_path);
}

std::string pick_format(const GlobalArgs& g, const std::string& fallback) {
    const std::string f = g.format.empty() ? fallback : g.format;
    if (f != "csv" && f != "json") {
        throw mmloc::error("bad_arguments", "--format must be csv or json");
    }
    return f;
}

std::ostream& open_out(const GlobalArgs& g, std::ofstream& file) {
    if (g.out_path.empty() || g.out_path == "-") return std::cout;
    file.open(g.out_path);
    if (!file) throw mmloc::error("io_error", "cannot write output: " + g.out_path);
    return file;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmloc::error("io_error", "cannot read file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw mmloc::error("bad_input", std::string("JSON parse failure: ") + e.what());
    }
    return j;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json estimate_to_json(const mmloc::JointEstimate& est, const std::string& name) {
    json j;
    j["estimator"] = name;
    j["u"] = {est.position(0), est.position(1), est.position(2)};
    j["udot"] = {est.velocity(0), est.velocity(1), est.velocity(2)};
    j["velocity_valid"] = est.velocity_valid;
    j["iterations"] = est.iterations;
    j["condition"] = est.condition;
    return j;
}

mmloc::MeasurementSet measurement_from_json(const json& j) {
    mmloc::MeasurementSet ms;
    try {
        ms.na = j.at("na").get<int>();
        const auto m = j.at("m").get<std::vector<double>>();
        const auto q = j.at("q_diag").get<std::vector<double>>();
        if (ms.na < 2 || static_cast<int>(m.size()) != 4 * ms.na - 2 ||
            q.size() != m.size()) {
            throw mmloc::error("bad_input", "measurement layout does not match na");
        }
        ms.m = Eigen::Map<const Eigen::VectorXd>(m.data(),
                                                 static_cast<Eigen::Index>(m.size()));
        Eigen::VectorXd qd = Eigen::Map<const Eigen::VectorXd>(
            q.data(), static_cast<Eigen::Index>(q.size()));
        ms.q = qd.asDiagonal();
    } catch (const json::exception& e) {
        throw mmloc::error("bad_input",
                           std::string("measurement JSON failure: ") + e.what());
    }
    return ms;
}

json measurement_to_json(const mmloc::MeasurementSet& ms) {
    json j;
    j["na"] = ms.na;
    j["m"] = to_vector(ms.m);
    j["q_diag"] = to_vector(ms.q.diagonal());
    return j;
}

mmloc::NoiseModel scaled_noise(const mmloc::Config& cfg, double rho) {
    mmloc::NoiseModel noise = mmloc::noise_from_config(cfg);
    noise.sigma_d *= rho;
    noise.sigma_a *= rho;
    return noise;
}

std::vector<int> parse_hidden(const mmloc::Config& cfg, const std::string& section) {
    std::vector<int> hidden = {32, 32};
    if (cfg.has(section, "hidden")) {
        hidden.clear();
        for (const double v : cfg.get_doubles(section, "hidden")) {
            if (v < 1.0 || v != static_cast<double>(static_cast<int>(v))) {
                throw mmloc::error("bad_config", "hidden sizes must be positive integers");
            }
            hidden.push_back(static_cast<int>(v));
        }
    }
    return hidden;
}

mmloc::TrainOptions train_options(const mmloc::Config& cfg,
                                  const std::string& section,
                                  const GlobalArgs& g) {
    mmloc::TrainOptions opts;
    opts.hidden = parse_hidden(cfg, section);
    opts.epochs = static_cast<int>(cfg.get_int(section, "epochs", 500));
    opts.batch_size = static_cast<int>(cfg.get_int(section, "batch_size", 128));
    opts.learning_rate = cfg.get_double(section, "learning_rate", 1e-3);
    opts.validation_fraction = cfg.get_double(section, "validation_fraction", 0.2);
    opts.seed = g.seed ? *g.seed
                       : static_cast<std::uint64_t>(cfg.get_int(section, "seed", 1));
    return opts;
}

// ---------------------------------------------------------------------------
// simulate: Monte Carlo experiment (default), one measurement snapshot, or a
// training dataset, depending on [simulate] mode.

int cmd_simulate(const GlobalArgs& g) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    const std::string mode = cfg.get_string("simulate", "mode", "experiment");
    const int na = static_cast<int>(
        cfg.get_int("simulate", "na", static_cast<long long>(sc.n_rrhs())));

    if (mode == "measurement") {
        mmloc::NoiseModel noise = mmloc::noise_from_config(cfg);
        if (g.seed) noise.seed = *g.seed;
        const mmloc::MeasurementSet ms = mmloc::synthesize_measurements(sc, noise, na);
        json j = measurement_to_json(ms);
        if (cfg.get_bool("simulate", "with_mapping", false)) {
            json arr = json::array();
            for (int n = 1; n <= na; ++n) {
                if (!sc.scatterers[static_cast<std::size_t>(n - 1)]) continue;
                const mmloc::MappingMeasurement mm =
                    mmloc::synthesize_mapping_measurement(sc, n, noise);
                json e;
                e["rrh_index"] = mm.rrh_index;
                e["m_s"] = {mm.m_s(0), mm.m_s(1), mm.m_s(2)};
                e["q_diag"] = {mm.q_s(0, 0), mm.q_s(1, 1), mm.q_s(2, 2)};
                arr.push_back(e);
            }
            j["mapping"] = arr;
        }
        std::ofstream file;
        open_out(g, file) << j.dump(2) << '\n';
        return 0;
    }

    if (mode == "dataset") {
        mmloc::NoiseModel noise = mmloc::noise_from_config(cfg);
        if (g.seed) noise.seed = *g.seed;
        const int count = static_cast<int>(cfg.get_int("simulate", "count", 1000));
        mmloc::SampleBox box;
        box.position_half_width =
            cfg.get_double("simulate", "position_half_width", box.position_half_width);
        box.velocity_half_width =
            cfg.get_double("simulate", "velocity_half_width", box.velocity_half_width);
        const mmloc::ResidualDataset ds =
            mmloc::generate_residual_dataset(sc, noise, na, count, box);
        if (g.out_path.empty()) {
            throw mmloc::error("bad_arguments", "dataset mode requires --out <path>");
        }
        mmloc::write_dataset_csv(ds, g.out_path);
        return 0;
    }

    if (mode != "experiment") {
        throw mmloc::error("bad_config", "unknown simulate mode: " + mode);
    }

    mmloc::RunConfig run;
    run.scenario = sc;
    run.rho = cfg.get_double("simulate", "rho", 1.0);
    run.noise = scaled_noise(cfg, run.rho);
    run.estimator = mmloc::estimator_from_name(
        cfg.get_string("simulate", "estimator", "wls"));
    run.trials = static_cast<int>(cfg.get_int("simulate", "trials", 1000));
    run.na = na;
    run.master_seed = g.seed ? *g.seed : run.noise.seed;
    run.with_mapping = cfg.get_bool("simulate", "with_mapping", false);
    run.measure_time = cfg.get_bool("simulate", "measure_time", false);

    mmloc::EstimatorAssets assets;
    mmloc::TrainedNet net;
    mmloc::TrainedEnsemble ens;
    if (run.estimator == mmloc::EstimatorKind::wlsnet ||
        run.estimator == mmloc::EstimatorKind::lsnet ||
        run.estimator == mmloc::EstimatorKind::fp) {
        net = mmloc::load_net(cfg.get_string("simulate", "net"));
        assets.net = &net;
    } else if (run.estimator == mmloc::EstimatorKind::ewlsnet) {
        const std::string dir = cfg.get_string("simulate", "ensemble_dir");
        const json meta = read_json_file(dir + "/ensemble.json");
        ens.ra_position = meta.at("ra_position").get<double>();
        ens.ra_velocity = meta.at("ra_velocity").get<double>();
        for (const auto& name : meta.at("members").get<std::vector<std::string>>()) {
            ens.members.push_back(mmloc::load_net(dir + "/" + name));
        }
        assets.ensemble = &ens;
    }

    const mmloc::MetricsReport rep = mmloc::monte_carlo(run, assets);
    mmloc::ReportRow row;
    row.estimator = mmloc::estimator_name(run.estimator);
    row.scenario = cfg.get_string("scenario", "preset", "custom");
    row.rho = run.rho;
    row.na = run.na;
    row.metrics = rep;

    const std::string fmt = pick_format(g, "csv");
    if (g.out_path.empty()) {
        throw mmloc::error("bad_arguments", "experiment mode requires --out <path>");
    }
    if (fmt == "csv") {
        mmloc::emit_report_csv({row}, g.out_path);
    } else {
        mmloc::emit_report_json({row}, g.out_path);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// estimate: one joint solve from a measurement JSON.

int cmd_estimate(const GlobalArgs& g, const std::string& in_path,
                 const std::string& net_path, const std::string& ens_dir) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    if (in_path.empty()) {
        throw mmloc::error("bad_arguments", "estimate requires --in <measurement.json>");
    }
    const mmloc::MeasurementSet ms = measurement_from_json(read_json_file(in_path));
    const std::string kind_name = cfg.get_string("estimator", "kind", "wls");
    const mmloc::EstimatorKind kind = mmloc::estimator_from_name(kind_name);

    mmloc::JointEstimate est;
    if (kind == mmloc::EstimatorKind::wls) {
        est = mmloc::estimate_joint(ms, sc.rrhs);
    } else if (kind == mmloc::EstimatorKind::ewlsnet) {
        if (ens_dir.empty()) {
            throw mmloc::error("bad_arguments", "ewlsnet needs --dir <ensemble dir>");
        }
        const json meta = read_json_file(ens_dir + "/ensemble.json");
        mmloc::TrainedEnsemble ens;
        ens.ra_position = meta.at("ra_position").get<double>();
        ens.ra_velocity = meta.at("ra_velocity").get<double>();
        for (const auto& name : meta.at("members").get<std::vector<std::string>>()) {
            ens.members.push_back(mmloc::load_net(ens_dir + "/" + name));
        }
        est = mmloc::ewlsnet_estimate(ens, ms.m, sc.rrhs);
    } else {
        if (net_path.empty()) {
            throw mmloc::error("bad_arguments",
                               kind_name + " needs --net <trained net file>");
        }
        const mmloc::TrainedNet net = mmloc::load_net(net_path);
        if (kind == mmloc::EstimatorKind::wlsnet) {
            est = mmloc::wlsnet_estimate(net, ms.m, sc.rrhs);
        } else if (kind == mmloc::EstimatorKind::lsnet) {
            est = mmloc::lsnet_estimate(net, ms.m, sc.rrhs);
        } else {
            est = mmloc::fp_estimate(net, ms.m);
        }
    }

    std::ofstream file;
    open_out(g, file) << estimate_to_json(est, kind_name).dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// map: reflection measurements CSV + UE estimate JSON -> point cloud.

std::vector<mmloc::MappingMeasurement> read_mapping_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmloc::error("io_error", "cannot read file: " + path);
    std::vector<mmloc::MappingMeasurement> out;
    std::string line;
    bool first = true;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("rrh_index,", 0) == 0) continue;  // header
        }
        std::istringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) {
            try {
                vals.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw mmloc::error("bad_input", "bad number in " + path + " line " +
                                                    std::to_string(lineno));
            }
        }
        if (vals.size() != 7) {
            throw mmloc::error("bad_input",
                               "expected 7 columns (rrh_index, range_diff, azimuth, "
                               "elevation, var_range, var_az, var_el) in " +
                                   path + " line " + std::to_string(lineno));
        }
        mmloc::MappingMeasurement mm;
        mm.rrh_index = static_cast<int>(vals[0]);
        mm.m_s = Eigen::Vector3d(vals[1], vals[2], vals[3]);
        mm.q_s = Eigen::Vector3d(vals[4], vals[5], vals[6]).asDiagonal();
        out.push_back(mm);
    }
    if (out.empty()) throw mmloc::error("bad_input", "no measurements in " + path);
    return out;
}

int cmd_map(const GlobalArgs& g, const std::string& in_path,
            const std::string& ue_path) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    if (in_path.empty() || ue_path.empty()) {
        throw mmloc::error("bad_arguments",
                           "map requires --in <mapping csv|json> and --ue <estimate json>");
    }

    std::vector<mmloc::MappingMeasurement> mms;
    if (in_path.size() > 5 && in_path.substr(in_path.size() - 5) == ".json") {
        const json j = read_json_file(in_path);
        const json& arr = j.contains("mapping") ? j.at("mapping") : j;
        if (!arr.is_array() || arr.empty()) {
            throw mmloc::error("bad_input", "no mapping measurements in " + in_path);
        }
        for (const auto& e : arr) {
            mmloc::MappingMeasurement mm;
            mm.rrh_index = e.at("rrh_index").get<int>();
            const auto m = e.at("m_s").get<std::vector<double>>();
            const auto q = e.at("q_diag").get<std::vector<double>>();
            if (m.size() != 3 || q.size() != 3) {
                throw mmloc::error("bad_input", "mapping entries need 3-vectors");
            }
            mm.m_s = Eigen::Vector3d(m[0], m[1], m[2]);
            mm.q_s = Eigen::Vector3d(q[0], q[1], q[2]).asDiagonal();
            mms.push_back(mm);
        }
    } else {
        mms = read_mapping_csv(in_path);
    }

    const json ue = read_json_file(ue_path);
    const auto u = ue.at("u").get<std::vector<double>>();
    if (u.size() != 3) throw mmloc::error("bad_input", "UE estimate needs a 3-vector u");
    const mmloc::Vec3 user_pos(u[0], u[1], u[2]);

    const std::vector<mmloc::ScattererEstimate> cloud =
        mmloc::map_environment(mms, user_pos, sc.rrhs);

    const std::string fmt = pick_format(g, "csv");
    std::ofstream file;
    std::ostream& out = open_out(g, file);
    if (fmt == "csv") {
        out << "x,y,z,rrh_index\n";
        out.precision(17);
        for (const auto& s : cloud) {
            out << s.position(0) << ',' << s.position(1) << ',' << s.position(2)
                << ',' << s.rrh_index << '\n';
        }
    } else {
        json arr = json::array();
        for (const auto& s : cloud) {
            json e;
            e["position"] = {s.position(0), s.position(1), s.position(2)};
            e["rrh_index"] = s.rrh_index;
            e["iterations"] = s.iterations;
            arr.push_back(e);
        }
        out << arr.dump(2) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------
// crlb: joint bounds (and per-reflection bounds) for the configured setup.

int cmd_crlb(const GlobalArgs& g) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    const double rho = cfg.get_double("crlb", "rho", 1.0);
    const mmloc::NoiseModel noise = scaled_noise(cfg, rho);
    const int na = static_cast<int>(
        cfg.get_int("crlb", "na", static_cast<long long>(sc.n_rrhs())));

    const mmloc::CrlbReport rep = mmloc::crlb_joint(sc, noise, na);
    json j;
    j["na"] = na;
    j["rho"] = rho;
    j["pos_bound"] = rep.pos_bound;
    j["vel_bound"] = rep.vel_bound;
    json maps = json::array();
    for (int n = 1; n <= na; ++n) {
        if (!sc.scatterers[static_cast<std::size_t>(n - 1)]) continue;
        json e;
        e["rrh_index"] = n;
        e["pos_bound"] = mmloc::crlb_scatterer(sc, noise, n).pos_bound;
        maps.push_back(e);
    }
    j["mapping"] = maps;

    const std::string fmt = pick_format(g, "json");
    std::ofstream file;
    std::ostream& out = open_out(g, file);
    if (fmt == "json") {
        out << j.dump(2) << '\n';
    } else {
        out << "quantity,value\n";
        out.precision(17);
        out << "pos_bound," << rep.pos_bound << '\n';
        out << "vel_bound," << rep.vel_bound << '\n';
        for (const auto& e : maps) {
            out << "scatterer_rrh" << e.at("rrh_index").get<int>() << ','
                << e.at("pos_bound").get<double>() << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train: residual / direct-regression / mapping nets; ensembles when
// members > 1.

int cmd_train(const GlobalArgs& g) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    if (g.out_path.empty()) {
        throw mmloc::error("bad_arguments", "train requires --out <path>");
    }

    mmloc::NoiseModel noise;
    if (cfg.has("train", "family")) {
        const std::string family = cfg.get_string("train", "family");
        if (!mmloc::is_known_family(family)) {
            throw mmloc::error("bad_config", "unknown noise family: " + family);
        }
        noise = mmloc::family_noise(
            family, static_cast<std::uint64_t>(cfg.get_int("train", "data_seed", 0)));
    } else {
        noise = mmloc::noise_from_config(cfg);
    }

    const std::string kind = cfg.get_string("train", "kind", "residual");
    const int samples = static_cast<int>(cfg.get_int("train", "samples", 16000));
    const int na = static_cast<int>(
        cfg.get_int("train", "na", static_cast<long long>(sc.n_rrhs())));
    const mmloc::TrainOptions topts = train_options(cfg, "train", g);
    const long long members = cfg.get_int("train", "members", 1);

    if (kind == "mapping") {
        const int rrh = static_cast<int>(cfg.get_int("train", "rrh_index", 2));
        const mmloc::MappingResidualDataset ds =
            mmloc::generate_mapping_residual_dataset(sc, noise, rrh, samples);
        mmloc::save_net(mmloc::train_mapping_net(ds, topts), g.out_path);
        return 0;
    }

    const mmloc::ResidualDataset ds =
        mmloc::generate_residual_dataset(sc, noise, na, samples);

    if (kind == "fp") {
        mmloc::save_net(mmloc::train_fp_net(ds, topts), g.out_path);
        return 0;
    }
    if (kind != "residual") {
        throw mmloc::error("bad_config", "unknown train kind: " + kind);
    }

    if (members <= 1) {
        mmloc::save_net(mmloc::train_residual_net(ds, topts), g.out_path);
        return 0;
    }

    mmloc::EnsembleOptions eopts;
    eopts.members = static_cast<int>(members);
    eopts.spread_batch = static_cast<int>(cfg.get_int("train", "spread_batch", 200));
    const mmloc::TrainedEnsemble ens = mmloc::train_ensemble(ds, topts, sc.rrhs, eopts);

    std::error_code ec;
    std::filesystem::create_directories(g.out_path, ec);
    json meta;
    meta["ra_position"] = ens.ra_position;
    meta["ra_velocity"] = ens.ra_velocity;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ens.members.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "member_%02zu.net", i);
        names.emplace_back(buf);
        mmloc::save_net(ens.members[i], g.out_path + "/" + names.back());
    }
    meta["members"] = names;
    std::ofstream mf(g.out_path + "/ensemble.json");
    if (!mf) {
        throw mmloc::error("io_error",
                           "cannot write " + g.out_path + "/ensemble.json" +
                               " (is --out an existing directory?)");
    }
    mf << meta.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// ensemble: fused estimate from a member directory plus a measurement file.

int cmd_ensemble(const GlobalArgs& g, const std::string& dir,
                 const std::string& in_path) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);
    if (dir.empty() || in_path.empty()) {
        throw mmloc::error("bad_arguments",
                           "ensemble requires --dir <members> and --in <measurement.json>");
    }
    const mmloc::MeasurementSet ms = measurement_from_json(read_json_file(in_path));

    const json meta = read_json_file(dir + "/ensemble.json");
    mmloc::TrainedEnsemble ens;
    ens.ra_position = meta.at("ra_position").get<double>();
    ens.ra_velocity = meta.at("ra_velocity").get<double>();
    for (const auto& name : meta.at("members").get<std::vector<std::string>>()) {
        ens.members.push_back(mmloc::load_net(dir + "/" + name));
    }

    const mmloc::JointEstimate est = mmloc::ewlsnet_estimate(ens, ms.m, sc.rrhs);
    std::ofstream file;
    open_out(g, file) << estimate_to_json(est, "ewlsnet").dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// bench: train small nets, then time the single-estimate paths.

int cmd_bench(const GlobalArgs& g) {
    const mmloc::Config cfg = load_config(g);
    const mmloc::Scenario sc = mmloc::scenario_from_config(cfg);

    const std::string family = cfg.get_string("bench", "family", "D1");
    if (!mmloc::is_known_family(family)) {
        throw mmloc::error("bad_config", "unknown noise family: " + family);
    }
    const std::uint64_t seed = g.seed ? *g.seed : 1;
    const mmloc::NoiseModel noise = mmloc::family_noise(family, seed);
    const int na = static_cast<int>(
        cfg.get_int("bench", "na", static_cast<long long>(sc.n_rrhs())));
    const int samples = static_cast<int>(cfg.get_int("bench", "samples", 2000));
    const int reps = static_cast<int>(cfg.get_int("bench", "repetitions", 1000));

    mmloc::TrainOptions topts = train_options(cfg, "bench", g);
    if (!cfg.has("bench", "epochs")) topts.epochs = 30;

    const mmloc::ResidualDataset ds =
        mmloc::generate_residual_dataset(sc, noise, na, samples);
    const mmloc::TrainedNet net = mmloc::train_residual_net(ds, topts);

    mmloc::EnsembleOptions eopts;
    eopts.members = static_cast<int>(cfg.get_int("bench", "members", 10));
    eopts.spread_batch = static_cast<int>(cfg.get_int("bench", "spread_batch", 200));
    const mmloc::TrainedEnsemble ens = mmloc::train_ensemble(ds, topts, sc.rrhs, eopts);

    const mmloc::BenchResult r = mmloc::bench_timing(sc, noise, na, net, ens, seed, reps);

    const std::string fmt = pick_format(g, "json");
    std::ofstream file;
    std::ostream& out = open_out(g, file);
    if (fmt == "json") {
        json j;
        j["t_wls"] = r.t_wls;
        j["t_wlsnet"] = r.t_wlsnet;
        j["t_ewlsnet"] = r.t_ewlsnet;
        j["repetitions"] = r.repetitions;
        j["members"] = eopts.members;
        out << j.dump(2) << '\n';
    } else {
        out << "quantity,value\n";
        out.precision(17);
        out << "t_wls," << r.t_wls << '\n';
        out << "t_wlsnet," << r.t_wlsnet << '\n';
        out << "t_ewlsnet," << r.t_ewlsnet << '\n';
        out << "repetitions," << r.repetitions << '\n';
    }
    return 0;
}

void print_error(const std::string& code, const std::string& message) {
    json j;
    j["error"]["code"] = code;
    j["error"]["message"] = message;
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form joint position/velocity estimation, reflection "
                 "mapping, bounds, learned-weighting estimators, and a Monte "
                 "Carlo harness"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed (u64)");
    app.add_option("--config", g.config_path, "INI config file");
    app.add_option("--out", g.out_path, "output path ('-' = stdout)");
    app.add_option("--format", g.format, "csv or json");

    CLI::App* c_sim = app.add_subcommand("simulate",
                                         "run a Monte Carlo experiment, or emit a "
                                         "measurement snapshot / training dataset");
    CLI::App* c_est = app.add_subcommand("estimate", "one joint solve from a "
                                                     "measurement JSON");
    std::string est_in, est_net, est_dir;
    c_est->add_option("--in", est_in, "measurement JSON");
    c_est->add_option("--net", est_net, "trained net file");
    c_est->add_option("--dir", est_dir, "ensemble member directory");

    CLI::App* c_map = app.add_subcommand("map", "solve reflection points into a "
                                                "point cloud");
    std::string map_in, map_ue;
    c_map->add_option("--in", map_in, "mapping measurements (csv or json)");
    c_map->add_option("--ue", map_ue, "user estimate JSON (from `estimate`)");

    CLI::App* c_crlb = app.add_subcommand("crlb", "estimation bounds for the "
                                                  "configured setup");
    CLI::App* c_train = app.add_subcommand("train", "train an error / regression "
                                                    "net or an ensemble");
    CLI::App* c_ens = app.add_subcommand("ensemble", "fused estimate from trained "
                                                     "members");
    std::string ens_dir, ens_in;
    c_ens->add_option("--dir", ens_dir, "ensemble member directory");
    c_ens->add_option("--in", ens_in, "measurement JSON");

    CLI::App* c_bench = app.add_subcommand("bench", "time the single-estimate "
                                                    "paths");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::ostringstream msg;
        msg << e.what();
        print_error("bad_arguments", msg.str());
        return 2;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (c_sim->parsed()) return cmd_simulate(g);
        if (c_est->parsed()) return cmd_estimate(g, est_in, est_net, est_dir);
        if (c_map->parsed()) return cmd_map(g, map_in, map_ue);
        if (c_crlb->parsed()) return cmd_crlb(g);
        if (c_train->parsed()) return cmd_train(g);
        if (c_ens->parsed()) return cmd_ensemble(g, ens_dir, ens_in);
        if (c_bench->parsed()) return cmd_bench(g);
        print_error("bad_arguments", "no subcommand given");
        return 2;
    } catch (const mmloc::error& e) {
        print_error(e.code(), e.what());
        return 2;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 3;
    }
}
