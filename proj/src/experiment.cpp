#include "mskfit/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mskfit::experiment {

using nlohmann::json;

namespace {

json geometry_to_json(const dynamics::ElbowGeometry& g) {
    return {{"l_ua", g.l_ua},   {"l_fa", g.l_fa},     {"m_fa", g.m_fa},
            {"l1_bi", g.l1_bi}, {"l2_bi", g.l2_bi},   {"l1_tri", g.l1_tri},
            {"l2_tri", g.l2_tri}, {"g", g.g}};
}

dynamics::ElbowGeometry geometry_from_json(const json& j) {
    dynamics::ElbowGeometry g;
    g.l_ua = j.at("l_ua");
    g.l_fa = j.at("l_fa");
    g.m_fa = j.at("m_fa");
    g.l1_bi = j.at("l1_bi");
    g.l2_bi = j.at("l2_bi");
    g.l1_tri = j.at("l1_tri");
    g.l2_tri = j.at("l2_tri");
    g.g = j.at("g");
    return g;
}

json kappa_to_json(const muscle::MuscleParams& k) {
    return {{"l0m", k.l0m}, {"vmax", k.vmax}, {"f0", k.f0}, {"lst", k.lst}, {"phi0", k.phi0}};
}

muscle::MuscleParams kappa_from_json(const json& j) {
    return {j.at("l0m"), j.at("vmax"), j.at("f0"), j.at("lst"), j.at("phi0")};
}

json setup_to_json(const dynamics::ElbowSetup& s) {
    return {{"geometry", geometry_to_json(s.geometry)},
            {"kappa_bi", kappa_to_json(s.kappa_bi)},
            {"kappa_tri", kappa_to_json(s.kappa_tri)},
            {"activation", {{"delay", s.activation.delay}, {"shape", s.activation.shape}}},
            {"q0", s.q0},
            {"qdot0", s.qdot0}};
}

dynamics::ElbowSetup setup_from_json(const json& j) {
    dynamics::ElbowSetup s;
    s.geometry = geometry_from_json(j.at("geometry"));
    s.kappa_bi = kappa_from_json(j.at("kappa_bi"));
    s.kappa_tri = kappa_from_json(j.at("kappa_tri"));
    s.activation.delay = j.at("activation").at("delay");
    s.activation.shape = j.at("activation").at("shape");
    s.q0 = j.at("q0");
    s.qdot0 = j.at("qdot0");
    return s;
}

json ident_to_json(const physics::IdentTargets& t) {
    json j;
    j["mode"] = t.mode == physics::IdentMode::Normalized ? "normalized" : "sigmoid";
    j["initial"] = t.initial;
    json anchors = json::array();
    for (const auto& a : t.anchors) anchors.push_back(a);
    j["anchors"] = anchors;
    return j;
}

physics::IdentTargets ident_from_json(const json& j) {
    physics::IdentTargets t;
    const std::string mode = j.at("mode");
    if (mode == "normalized") {
        t.mode = physics::IdentMode::Normalized;
    } else if (mode == "sigmoid") {
        t.mode = physics::IdentMode::SigmoidConstrained;
    } else {
        throw std::invalid_argument("spec: unknown identification mode '" + mode + "'");
    }
    const auto init = j.at("initial");
    for (std::size_t l = 0; l < 4; ++l) t.initial[l] = init.at(l);
    if (j.contains("anchors")) {
        const auto anchors = j.at("anchors");
        for (std::size_t l = 0; l < 4 && l < anchors.size(); ++l) {
            t.anchors[l] = anchors.at(l).get<std::vector<double>>();
        }
    }
    return t;
}

json train_to_json(const trainer::TrainConfig& c) {
    json j;
    j["scales"] = c.scales;
    j["epochs_total"] = c.epochs_total;
    j["learning_rate"] = c.learning_rate;
    j["beta"] = c.beta;
    j["history_steps"] = c.history_steps;
    j["hidden_size"] = c.hidden_size;
    j["noise_sigma"] = c.noise_sigma;
    j["early_stop_patience"] = c.early_stop_patience;
    j["seeds"] = c.seeds;
    j["train_trials"] = c.train_trials;
    j["test_trials"] = c.test_trials;
    j["model"] = c.model == network::ModelKind::Gru ? "gru" : "rnn";
    j["state_bias"] = c.state_bias;
    j["ident"] = ident_to_json(c.ident);
    j["setup"] = setup_to_json(c.setup);
    return j;
}

trainer::TrainConfig train_from_json(const json& j) {
    trainer::TrainConfig c;
    if (j.contains("scales")) c.scales = j.at("scales").get<std::vector<int>>();
    if (j.contains("epochs_total")) c.epochs_total = j.at("epochs_total");
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate");
    if (j.contains("beta")) c.beta = j.at("beta");
    if (j.contains("history_steps")) c.history_steps = j.at("history_steps");
    if (j.contains("hidden_size")) c.hidden_size = j.at("hidden_size");
    if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma");
    if (j.contains("early_stop_patience")) c.early_stop_patience = j.at("early_stop_patience");
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("train_trials")) c.train_trials = j.at("train_trials").get<std::vector<int>>();
    if (j.contains("test_trials")) c.test_trials = j.at("test_trials").get<std::vector<int>>();
    if (j.contains("model")) {
        const std::string m = j.at("model");
        if (m == "gru") {
            c.model = network::ModelKind::Gru;
        } else if (m == "rnn") {
            c.model = network::ModelKind::Rnn;
        } else {
            throw std::invalid_argument("spec: unknown model '" + m + "'");
        }
    }
    if (j.contains("state_bias")) c.state_bias = j.at("state_bias");
    if (j.contains("ident")) c.ident = ident_from_json(j.at("ident"));
    if (j.contains("setup")) c.setup = setup_from_json(j.at("setup"));
    return c;
}

json matrix_to_json(const autodiff::Matrix& m) {
    json data = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

autodiff::Matrix matrix_from_json(const json& j) {
    const auto shape = j.at("shape");
    const Eigen::Index rows = shape.at(0);
    const Eigen::Index cols = shape.at(1);
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::invalid_argument("checkpoint: data length does not match shape");
    }
    autodiff::Matrix m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data.at(i++);
    }
    return m;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);
    json j;
    in >> j;
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << text;
}

void append_csv_value(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

}  // namespace

std::string ExperimentSpec::to_json_text() const {
    json j;
    j["datagen"] = {{"sigma", datagen.sigma},
                    {"seed", datagen.seed},
                    {"samples", datagen.samples},
                    {"dt", datagen.dt}};
    j["train"] = train_to_json(train);
    j["data_dir"] = data_dir;
    return j.dump(2) + "\n";
}

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentSpec spec;
    if (j.contains("datagen")) {
        const auto& d = j.at("datagen");
        if (d.contains("sigma")) spec.datagen.sigma = d.at("sigma");
        if (d.contains("seed")) spec.datagen.seed = d.at("seed");
        if (d.contains("samples")) spec.datagen.samples = d.at("samples");
        if (d.contains("dt")) spec.datagen.dt = d.at("dt");
    }
    if (j.contains("train")) spec.train = train_from_json(j.at("train"));
    if (j.contains("data_dir")) spec.data_dir = j.at("data_dir");
    spec.train.validate();
    return spec;
}

ExperimentSpec ExperimentSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open spec " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void ExperimentSpec::save(const std::string& path) const { write_text_file(path, to_json_text()); }

void write_trial_csv(const std::string& path, const Trial& trial) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "t,emg_bi,emg_tri,q\n";
    for (std::size_t k = 0; k < trial.q.size(); ++k) {
        std::string line;
        append_csv_value(line, trial.q.time_at(k));
        line += ',';
        append_csv_value(line, trial.e_bi[k]);
        line += ',';
        append_csv_value(line, trial.e_tri[k]);
        line += ',';
        append_csv_value(line, trial.q[k]);
        out << line << '\n';
    }
}

Trial read_trial_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open trial " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("t,emg_bi,emg_tri,q", 0) != 0) {
        throw std::invalid_argument("trial csv: unexpected header in " + path);
    }
    std::vector<double> t, ebi, etri, q;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        double vals[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, field, ',')) {
                throw std::invalid_argument("trial csv: short row in " + path);
            }
            vals[i] = std::stod(field);
        }
        t.push_back(vals[0]);
        ebi.push_back(vals[1]);
        etri.push_back(vals[2]);
        q.push_back(vals[3]);
    }
    if (t.size() < 2) throw std::invalid_argument("trial csv: too few rows in " + path);
    const double dt = t[1] - t[0];
    Trial trial;
    trial.e_bi = TimeSeries(dt, std::move(ebi));
    trial.e_tri = TimeSeries(dt, std::move(etri));
    trial.q = TimeSeries(dt, std::move(q));
    return trial;
}

void write_prediction_csv(const std::string& path, const Trial& trial,
                          const std::vector<double>& q_pred) {
    if (q_pred.size() != trial.q.size()) {
        throw std::invalid_argument("write_prediction_csv: length mismatch");
    }
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path);
    out << "t,emg_bi,emg_tri,q,q_pred\n";
    for (std::size_t k = 0; k < trial.q.size(); ++k) {
        std::string line;
        append_csv_value(line, trial.q.time_at(k));
        line += ',';
        append_csv_value(line, trial.e_bi[k]);
        line += ',';
        append_csv_value(line, trial.e_tri[k]);
        line += ',';
        append_csv_value(line, trial.q[k]);
        line += ',';
        append_csv_value(line, q_pred[k]);
        out << line << '\n';
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    json j;
    j["model"] = ckpt.net.kind == network::ModelKind::Gru ? "gru" : "rnn";
    j["hidden"] = ckpt.net.hidden();
    j["n_in"] = ckpt.net.n_in();
    j["state_bias"] = ckpt.net.kind == network::ModelKind::Gru ? ckpt.net.gru.state_bias : false;
    j["history_steps"] = ckpt.history_steps;
    j["dt"] = ckpt.dt;
    json weights;
    auto net = ckpt.net;  // params() is non-const
    for (auto& [name, mat] : net.params()) weights[name] = matrix_to_json(*mat);
    j["weights"] = weights;
    json ident;
    ident["targets"] = ident_to_json(ckpt.ident_targets);
    json trainables = json::array();
    for (const auto& m : ckpt.ident_trainables) trainables.push_back(matrix_to_json(m));
    ident["trainables"] = trainables;
    json values;
    for (std::size_t l = 0; l < 4; ++l) values[physics::IdentTargets::names[l]] = ckpt.gamma[l];
    values["vmax_bi"] = 10.0 * ckpt.gamma[1];
    values["vmax_tri"] = 10.0 * ckpt.gamma[3];
    ident["values"] = values;
    j["ident"] = ident;
    write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
    const json j = read_json_file(path);
    Checkpoint ckpt;
    const std::string model = j.at("model");
    const int hidden = j.at("hidden");
    const int n_in = j.at("n_in");
    const bool state_bias = j.at("state_bias");
    ckpt.net = network::Surrogate::init(
        model == "gru" ? network::ModelKind::Gru : network::ModelKind::Rnn, hidden, n_in, 0,
        state_bias);
    ckpt.history_steps = j.at("history_steps");
    ckpt.dt = j.at("dt");
    const auto& weights = j.at("weights");
    for (auto& [name, mat] : ckpt.net.params()) {
        if (!weights.contains(name)) {
            throw std::invalid_argument("checkpoint: missing tensor " + name);
        }
        const autodiff::Matrix loaded = matrix_from_json(weights.at(name));
        if (loaded.rows() != mat->rows() || loaded.cols() != mat->cols()) {
            throw std::invalid_argument("checkpoint: shape mismatch for " + name);
        }
        *mat = loaded;
    }
    const auto& ident = j.at("ident");
    ckpt.ident_targets = ident_from_json(ident.at("targets"));
    for (const auto& m : ident.at("trainables")) {
        ckpt.ident_trainables.push_back(matrix_from_json(m));
    }
    ckpt.gamma = ckpt.ident_targets.values(ckpt.ident_trainables);
    return ckpt;
}

namespace {

struct LoadedData {
    std::vector<Trial> train;
    std::vector<Trial> test;
    bool has_truth = false;
    dynamics::ElbowSetup truth;
};

LoadedData obtain_trials(const ExperimentSpec& spec) {
    LoadedData data;
    if (!spec.data_dir.empty()) {
        namespace fs = std::filesystem;
        for (int id : spec.train.train_trials) {
            data.train.push_back(
                read_trial_csv((fs::path(spec.data_dir) / ("trial_" + std::to_string(id) + ".csv"))
                                   .string()));
        }
        for (int id : spec.train.test_trials) {
            data.test.push_back(
                read_trial_csv((fs::path(spec.data_dir) / ("trial_" + std::to_string(id) + ".csv"))
                                   .string()));
        }
        const fs::path truth_path = fs::path(spec.data_dir) / "truth.json";
        if (fs::exists(truth_path)) {
            const json t = read_json_file(truth_path.string());
            data.truth = setup_from_json(t.at("setup"));
            data.has_truth = true;
        }
        return data;
    }
    const auto v = datagen::build_verification_set(spec.datagen.sigma, spec.datagen.seed,
                                                   spec.datagen.samples, spec.datagen.dt,
                                                   spec.train.setup);
    for (int id : spec.train.train_trials) data.train.push_back(v.set.trials.at(id - 1));
    for (int id : spec.train.test_trials) data.test.push_back(v.set.trials.at(id - 1));
    data.truth = v.truth;
    data.has_truth = true;
    return data;
}

json metrics_to_json(const physics::Metrics& m) {
    return {{"mse", m.mse}, {"r2", m.r2}, {"nmse", m.nmse}};
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

}  // namespace

int cmd_generate(const ExperimentSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto v = datagen::build_verification_set(spec.datagen.sigma, spec.datagen.seed,
                                                   spec.datagen.samples, spec.datagen.dt,
                                                   spec.train.setup);
    for (std::size_t i = 0; i < v.set.trials.size(); ++i) {
        write_trial_csv((fs::path(out_dir) / ("trial_" + std::to_string(i + 1) + ".csv")).string(),
                        v.set.trials[i]);
    }
    json truth;
    truth["setup"] = setup_to_json(v.truth);
    truth["sigma"] = v.set.sigma;
    truth["seed"] = v.set.seed;
    truth["samples"] = spec.datagen.samples;
    truth["dt"] = v.set.dt;
    truth["train_ids"] = v.train_ids;
    truth["test_ids"] = v.test_ids;
    write_text_file((fs::path(out_dir) / "truth.json").string(), truth.dump(2) + "\n");
    return 0;
}

int cmd_train(const ExperimentSpec& spec, const std::string& out_dir, int max_threads) {
    namespace fs = std::filesystem;
    spec.train.validate();
    fs::create_directories(out_dir);
    const LoadedData data = obtain_trials(spec);

    const auto t0 = std::chrono::steady_clock::now();
    const auto outcomes = trainer::run_seeds(data.train, data.test, spec.train, max_threads);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json results = json::array();
    std::vector<double> mse, r2, nmse;
    std::array<std::vector<double>, 4> gammas;
    std::array<std::vector<double>, 4> pct_errors;
    const std::array<double, 4> truth_gamma{data.truth.kappa_bi.f0, data.truth.kappa_bi.l0m,
                                            data.truth.kappa_tri.f0, data.truth.kappa_tri.l0m};
    int best_seed_index = -1;
    double best_r2 = -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& oc = outcomes[i];
        json entry;
        entry["seed"] = oc.seed;
        entry["diverged"] = oc.diverged;
        if (oc.diverged) {
            entry["message"] = oc.message;
            results.push_back(entry);
            continue;
        }
        json scales = json::array();
        for (const auto& sr : oc.result.per_scale) {
            scales.push_back({{"scale", sr.scale},
                              {"epochs", sr.epochs_run},
                              {"best_train_loss", sr.best_train_loss},
                              {"test", metrics_to_json(sr.test)}});
        }
        entry["scales"] = scales;
        json ident;
        for (std::size_t l = 0; l < 4; ++l) {
            ident[physics::IdentTargets::names[l]] = oc.result.eval.gamma[l];
            gammas[l].push_back(oc.result.eval.gamma[l]);
            if (data.has_truth) {
                pct_errors[l].push_back(100.0 * (oc.result.eval.gamma[l] - truth_gamma[l]) /
                                        truth_gamma[l]);
            }
        }
        ident["vmax_bi"] = oc.result.eval.vmax_bi;
        ident["vmax_tri"] = oc.result.eval.vmax_tri;
        entry["identified"] = ident;
        entry["test"] = metrics_to_json(oc.result.eval.average);
        entry["wall_seconds"] = oc.result.wall_seconds;
        results.push_back(entry);

        mse.push_back(oc.result.eval.average.mse);
        r2.push_back(oc.result.eval.average.r2);
        nmse.push_back(oc.result.eval.average.nmse);
        if (oc.result.eval.average.r2 > best_r2) {
            best_r2 = oc.result.eval.average.r2;
            best_seed_index = static_cast<int>(i);
        }

        Checkpoint ckpt;
        ckpt.net = oc.result.state.net;
        ckpt.history_steps = spec.train.history_steps;
        ckpt.dt = data.train.front().q.dt;
        ckpt.ident_targets = spec.train.ident;
        ckpt.ident_trainables = oc.result.state.ident;
        ckpt.gamma = oc.result.eval.gamma;
        save_checkpoint(
            (fs::path(out_dir) / ("checkpoint_seed" + std::to_string(oc.seed) + ".json")).string(),
            ckpt);
    }

    json doc;
    doc["config"] = json::parse(spec.to_json_text());
    doc["results"] = results;
    json agg;
    if (!mse.empty()) {
        const auto ms = mean_std(mse);
        const auto rs = mean_std(r2);
        const auto ns = mean_std(nmse);
        agg["test_mse"] = {{"mean", ms.mean}, {"std", ms.std}};
        agg["test_r2"] = {{"mean", rs.mean}, {"std", rs.std}};
        agg["test_nmse"] = {{"mean", ns.mean}, {"std", ns.std}};
        json ident_agg;
        for (std::size_t l = 0; l < 4; ++l) {
            const auto gs = mean_std(gammas[l]);
            ident_agg[physics::IdentTargets::names[l]] = {{"mean", gs.mean}, {"std", gs.std}};
        }
        agg["identified"] = ident_agg;
        if (data.has_truth) {
            json pct;
            for (std::size_t l = 0; l < 4; ++l) {
                const auto ps = mean_std(pct_errors[l]);
                pct[physics::IdentTargets::names[l]] = {{"mean", ps.mean}, {"std", ps.std}};
            }
            agg["percent_error"] = pct;
        }
    }
    doc["aggregate"] = agg;
    if (data.has_truth) {
        json truth;
        for (std::size_t l = 0; l < 4; ++l) {
            truth[physics::IdentTargets::names[l]] = truth_gamma[l];
        }
        doc["truth"] = truth;
    }
    doc["wall_seconds"] = wall;
    write_text_file((std::filesystem::path(out_dir) / "results.json").string(), doc.dump(2) + "\n");

    if (best_seed_index >= 0) {
        const auto& oc = outcomes[static_cast<std::size_t>(best_seed_index)];
        Checkpoint ckpt;
        ckpt.net = oc.result.state.net;
        ckpt.history_steps = spec.train.history_steps;
        ckpt.dt = data.train.front().q.dt;
        ckpt.ident_targets = spec.train.ident;
        ckpt.ident_trainables = oc.result.state.ident;
        ckpt.gamma = oc.result.eval.gamma;
        save_checkpoint((std::filesystem::path(out_dir) / "checkpoint.json").string(), ckpt);
        return 0;
    }
    return 1;  // every seed diverged
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& trial_csv,
                 const std::string& out_dir) {
    namespace fs = std::filesystem;
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const Trial trial = read_trial_csv(trial_csv);
    const auto m = static_cast<std::size_t>(ckpt.history_steps);
    if (trial.q.size() <= m + 1) {
        throw std::invalid_argument("evaluate: trial shorter than the prediction window");
    }
    fs::create_directories(out_dir);

    const auto n = trial.q.size();
    std::vector<Eigen::VectorXd> xs(n);
    for (std::size_t k = 0; k < n; ++k) {
        Eigen::VectorXd x(3);
        x << trial.q.time_at(k), trial.e_bi[k], trial.e_tri[k];
        xs[k] = x;
    }
    const std::vector<double> seed(trial.q.values.begin(),
                                   trial.q.values.begin() + static_cast<long>(m));
    const auto pred = network::rollout(ckpt.net, xs, seed, ckpt.history_steps);
    const std::vector<double> target(trial.q.values.begin() + static_cast<long>(m),
                                     trial.q.values.end());
    const std::vector<double> predicted(pred.begin() + static_cast<long>(m), pred.end());
    const auto metric = physics::metrics(target, predicted);

    json doc;
    doc["metrics"] = metrics_to_json(metric);
    json ident;
    for (std::size_t l = 0; l < 4; ++l) ident[physics::IdentTargets::names[l]] = ckpt.gamma[l];
    doc["identified"] = ident;
    write_text_file((fs::path(out_dir) / "metrics.json").string(), doc.dump(2) + "\n");
    write_prediction_csv((fs::path(out_dir) / "prediction.csv").string(), trial, pred);
    return 0;
}

}  // namespace mskfit::experiment
